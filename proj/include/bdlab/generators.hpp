// Seeded benchmark families. All maximization models are stored negated.
#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "bdlab/milp.hpp"

namespace bdlab {

// Generalized independent set on G(n, edge_prob); each edge is removable
// (in E2, with a y variable) with probability removable_frac.
// Defaults give the small benchmark scale (~988 vars, ~3253 rows).
struct GispParams {
  int nodes = 150;
  double edge_prob = 0.291;
  double removable_frac = 0.257;
  double node_reward = 100.0;
  double edge_cost = 1.0;
};

struct SetCoverParams {
  int n_elements = 1200;
  int n_sets = 1000;
  double density = 0.05;
};

struct AuctionParams {
  int items = 150;
  int bids = 750;
};

struct MisParams {
  int nodes = 1250;
  double avg_degree = 4.0;
};

struct FacilityParams {
  int facilities = 100;
  int customers = 200;
};

using GenParams = std::variant<GispParams, SetCoverParams, AuctionParams, MisParams, FacilityParams>;

struct GenConfig {
  GenParams params;
  std::uint64_t seed = 0;
};

// "GISP", "SC", "CA", "MIS" or "FC".
std::string family_tag(const GenParams& params);

// Throws std::invalid_argument for non-positive counts or out-of-range
// probabilities.
void validate_config(const GenConfig& cfg);

MilpInstance gen_gisp(const GispParams& p, std::uint64_t seed);
MilpInstance gen_setcover(const SetCoverParams& p, std::uint64_t seed);
MilpInstance gen_combinatorial_auction(const AuctionParams& p, std::uint64_t seed);
MilpInstance gen_mis(const MisParams& p, std::uint64_t seed);
MilpInstance gen_facility_location(const FacilityParams& p, std::uint64_t seed);

MilpInstance generate(const GenConfig& cfg);

}  // namespace bdlab
