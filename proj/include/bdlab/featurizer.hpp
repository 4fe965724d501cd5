// Bipartite variable/constraint graph with static and root-LP features.
#pragma once

#include <Eigen/Dense>
#include <vector>

#include "bdlab/lp_simplex.hpp"
#include "bdlab/milp.hpp"

namespace bdlab {

inline constexpr int kVarFeatures = 15;
inline constexpr int kConsFeatures = 4;
inline constexpr int kEdgeFeatures = 1;

// Variable feature columns, in order.
enum VarFeature : int {
  kVfObjective = 0,
  kVfIsBinary,
  kVfIsContinuous,
  kVfHasLower,
  kVfHasUpper,
  kVfLower,
  kVfUpper,
  kVfLpValue,
  kVfFractionality,
  kVfAtLower,
  kVfAtUpper,
  kVfReducedCost,
  kVfColumnDensity,
  kVfMeanCoef,
  kVfHasObjective,
};

struct BipartiteGraph {
  Eigen::MatrixXd var_feats;   // n x 15
  Eigen::MatrixXd cons_feats;  // m x 4
  Eigen::MatrixXd edge_feats;  // nnz x 1
  // Edge e joins constraint edge_cons[e] and variable edge_var[e]; edges are
  // listed row by row in the instance's entry order.
  std::vector<int> edge_cons;
  std::vector<int> edge_var;
  std::vector<bool> binary_mask;

  int num_vars() const { return static_cast<int>(var_feats.rows()); }
  int num_cons() const { return static_cast<int>(cons_feats.rows()); }
  int num_edges() const { return static_cast<int>(edge_cons.size()); }
};

// Infinity-norm scalings fall back to 1 when the norm is zero. Infinite bounds
// contribute 0 to features 6 and 7, and the scaled reduced cost is clamped to
// [-1, 1]. Throws std::invalid_argument unless root_lp is optimal and sized
// for the instance.
BipartiteGraph featurize(const MilpInstance& inst, const LpSolution& root_lp);

// Checks widths, index ranges and finiteness; throws std::invalid_argument.
void validate_graph(const BipartiteGraph& g);

}  // namespace bdlab
