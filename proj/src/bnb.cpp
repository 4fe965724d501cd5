#include "bdlab/bnb.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>

namespace bdlab {

const char* to_string(BnbStatus s) {
  switch (s) {
    case BnbStatus::kOptimal: return "OPTIMAL";
    case BnbStatus::kInfeasible: return "INFEASIBLE";
    case BnbStatus::kNodeLimit: return "NODE_LIMIT";
  }
  return "?";
}

double fractionality(double v) { return std::min(v - std::floor(v), std::ceil(v) - v); }

std::optional<int> select_branch_var(std::span<const int> fractional, std::span<const double> x,
                                     const BnbConfig& cfg) {
  if (fractional.empty()) throw std::invalid_argument("select_branch_var: empty fractional set");
  std::optional<int> best;
  int best_priority = 0;
  double best_frac = 0.0;
  for (int j : fractional) {
    if (cfg.allowed_branch_set &&
        std::find(cfg.allowed_branch_set->begin(), cfg.allowed_branch_set->end(), j) ==
            cfg.allowed_branch_set->end())
      continue;
    const int pr = cfg.priorities.empty() ? 0 : cfg.priorities[static_cast<std::size_t>(j)];
    const double fr = fractionality(x[static_cast<std::size_t>(j)]);
    const bool better = !best || pr > best_priority ||
                        (pr == best_priority && (fr > best_frac || (fr == best_frac && j < *best)));
    if (better) {
      best = j;
      best_priority = pr;
      best_frac = fr;
    }
  }
  return best;
}

double tree_weight(std::span<const int> leaf_depths) {
  if (leaf_depths.empty()) throw std::invalid_argument("tree_weight: no leaves");
  double w = 0.0;
  for (int d : leaf_depths) {
    if (d < 0) throw std::invalid_argument("tree_weight: negative depth");
    w += std::ldexp(1.0, -d);
  }
  return w;
}

namespace {

struct Node {
  double bound;
  std::int64_t id;
  int depth;
  // (variable, fixed value) along the path from the root.
  std::vector<std::pair<int, double>> fixings;
};

struct NodeOrder {
  // priority_queue pops the largest; invert for smallest bound, then FIFO.
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.id > b.id;
  }
};

double objective_value(const MilpInstance& inst, const std::vector<double>& x) {
  double v = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) v += inst.objective[j] * x[j];
  return v;
}

void validate_config(const MilpInstance& inst, const BnbConfig& cfg) {
  if (!cfg.priorities.empty() && cfg.priorities.size() != static_cast<std::size_t>(inst.num_vars))
    throw std::invalid_argument("priorities must have one entry per variable");
  if (cfg.allowed_branch_set) {
    const auto mask = inst.binary_mask();
    for (int j : *cfg.allowed_branch_set) {
      if (j < 0 || j >= inst.num_vars || !mask[static_cast<std::size_t>(j)])
        throw std::invalid_argument("allowed branch variable " + std::to_string(j) + " is not binary");
    }
  }
  if (cfg.node_limit && *cfg.node_limit < 1) throw std::invalid_argument("node limit must be >= 1");
}

}  // namespace

SolveResult solve_bnb(const MilpInstance& inst, const BnbConfig& cfg) {
  const LpProblem lp = lp_relaxation(inst);
  validate_config(inst, cfg);
  const double tol = cfg.objective_gap_tol;

  SolveResult res;
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::int64_t next_id = 0;
  open.push({-kInf, next_id++, 0, {}});

  std::vector<double> lo(lp.lower), hi(lp.upper);
  std::vector<int> fractional;
  bool hit_limit = false;

  auto try_incumbent = [&](const std::vector<double>& x, double obj) {
    if (obj < res.objective) {
      res.objective = obj;
      res.incumbent = x;
    }
  };

  while (!open.empty()) {
    if (cfg.node_limit && res.nodes_processed >= *cfg.node_limit) {
      hit_limit = true;
      break;
    }
    Node node = open.top();
    open.pop();
    if (res.incumbent && node.bound >= res.objective - tol) {
      res.leaf_depths.push_back(node.depth);
      continue;
    }
    ++res.nodes_processed;
    res.bound_history.push_back(node.bound);

    std::copy(lp.lower.begin(), lp.lower.end(), lo.begin());
    std::copy(lp.upper.begin(), lp.upper.end(), hi.begin());
    for (const auto& [j, v] : node.fixings) lo[static_cast<std::size_t>(j)] = hi[static_cast<std::size_t>(j)] = v;
    const LpSolution sol = solve_lp(lp, lo, hi, cfg.lp);
    if (sol.status == LpStatus::kUnbounded) {
      throw std::runtime_error("branch-and-bound: LP relaxation of '" + inst.name + "' is unbounded");
    }
    if (sol.status == LpStatus::kInfeasible || (res.incumbent && sol.objective >= res.objective - tol)) {
      res.leaf_depths.push_back(node.depth);
      continue;
    }

    fractional.clear();
    for (int j : inst.binary_set) {
      if (fractionality(sol.x[static_cast<std::size_t>(j)]) > cfg.integrality_tol) fractional.push_back(j);
    }
    if (fractional.empty()) {
      try_incumbent(sol.x, sol.objective);
      res.leaf_depths.push_back(node.depth);
      continue;
    }

    if (cfg.rounding_heuristic) {
      std::vector<double> rounded = sol.x;
      for (int j : inst.binary_set) rounded[static_cast<std::size_t>(j)] = std::round(rounded[static_cast<std::size_t>(j)]);
      if (max_violation(lp, rounded) <= 1e-6) try_incumbent(rounded, objective_value(inst, rounded));
      if (res.incumbent && sol.objective >= res.objective - tol) {
        res.leaf_depths.push_back(node.depth);
        continue;
      }
    }

    const auto branch = select_branch_var(fractional, sol.x, cfg);
    if (!branch) {
      res.leaf_depths.push_back(node.depth);
      continue;
    }
    const double child_bound = std::max(node.bound, sol.objective);
    for (double v : {0.0, 1.0}) {
      Node child{child_bound, next_id++, node.depth + 1, node.fixings};
      child.fixings.emplace_back(*branch, v);
      open.push(std::move(child));
    }
  }

  if (hit_limit) {
    res.status = BnbStatus::kNodeLimit;
  } else {
    res.status = res.incumbent ? BnbStatus::kOptimal : BnbStatus::kInfeasible;
  }
  res.tree_weight = res.leaf_depths.empty() ? 0.0 : tree_weight(res.leaf_depths);
  return res;
}

ProbeResult restricted_probe(const MilpInstance& inst, std::span<const int> subset,
                             std::optional<std::int64_t> node_limit) {
  if (subset.empty()) throw std::invalid_argument("restricted_probe: empty subset");
  BnbConfig cfg;
  cfg.allowed_branch_set = std::vector<int>(subset.begin(), subset.end());
  cfg.node_limit = node_limit;
  const SolveResult r = solve_bnb(inst, cfg);
  return {r.tree_weight, r.nodes_processed, r.status != BnbStatus::kNodeLimit};
}

std::vector<int> backdoor_priorities(const MilpInstance& inst, std::span<const int> backdoor) {
  std::vector<int> pr(static_cast<std::size_t>(inst.num_vars), 0);
  for (int j : backdoor) {
    if (j < 0 || j >= inst.num_vars) throw std::invalid_argument("backdoor variable out of range");
    pr[static_cast<std::size_t>(j)] = 1;
  }
  return pr;
}

}  // namespace bdlab
