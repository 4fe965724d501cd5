// Best-bound branch-and-bound over binary variables with branching priorities.
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "bdlab/lp_simplex.hpp"
#include "bdlab/milp.hpp"

namespace bdlab {

struct BnbConfig {
  // Per-variable priority, length num_vars; empty means all zero. Among
  // fractional candidates only the highest priority class is considered.
  std::vector<int> priorities;
  // When set, only these variables may be branched on; a node with no
  // fractional variable in the set is closed as a leaf.
  std::optional<std::vector<int>> allowed_branch_set;
  std::optional<std::int64_t> node_limit;
  double objective_gap_tol = 1e-6;
  double integrality_tol = 1e-6;
  bool rounding_heuristic = true;
  LpOptions lp;
};

enum class BnbStatus { kOptimal, kInfeasible, kNodeLimit };

const char* to_string(BnbStatus s);

struct SolveResult {
  BnbStatus status = BnbStatus::kInfeasible;
  // +inf when no incumbent exists.
  double objective = kInf;
  std::optional<std::vector<double>> incumbent;
  // Nodes whose LP relaxation was solved.
  std::int64_t nodes_processed = 0;
  // Depths of closed leaves, in closing order. Open nodes left behind by a
  // node limit are not leaves.
  std::vector<int> leaf_depths;
  // Sum of 2^-depth over leaves; 0 when no leaf was closed.
  double tree_weight = 0.0;
  // Global lower bound at the start of every processed node.
  std::vector<double> bound_history;
};

// Branching variable among `fractional` (indices of binaries with fractional
// LP value x). Highest priority, then largest min(x - floor x, ceil x - x),
// then lowest index. Returns nullopt when an allowed set is configured and
// excludes every candidate. Throws std::invalid_argument on an empty input.
std::optional<int> select_branch_var(std::span<const int> fractional, std::span<const double> x,
                                     const BnbConfig& cfg);

double fractionality(double v);

SolveResult solve_bnb(const MilpInstance& inst, const BnbConfig& cfg = {});

// Sum of 2^-depth; throws std::invalid_argument on an empty multiset.
double tree_weight(std::span<const int> leaf_depths);

struct ProbeResult {
  double tree_weight = 0.0;
  std::int64_t nodes_processed = 0;
  bool completed = false;
};

// Branch only on `subset` (non-empty, within I) for at most node_limit nodes.
ProbeResult restricted_probe(const MilpInstance& inst, std::span<const int> subset,
                             std::optional<std::int64_t> node_limit);

// Priority vector giving `backdoor` members priority 1 and all else 0.
std::vector<int> backdoor_priorities(const MilpInstance& inst, std::span<const int> backdoor);

}  // namespace bdlab
