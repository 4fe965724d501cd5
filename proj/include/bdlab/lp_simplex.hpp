// Bounded-variable primal simplex on a dense tableau.
//
// Rows are turned into equalities with one slack each (LE: s >= 0,
// GE: s <= 0, EQ: s = 0). Rows whose slack cannot start inside its bounds get
// an artificial column and phase 1 minimizes the artificial sum. Pricing is
// Dantzig until a run of degenerate pivots, then Bland's rule for the rest of
// the phase, so every solve is deterministic and terminates.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdlab/milp.hpp"

namespace bdlab {

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus s);

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  std::vector<double> x;
  double objective = 0.0;
  std::vector<double> reduced_costs;
  // Nonbasic at the respective bound. A fixed column (lower == upper) that is
  // nonbasic reports at_lower.
  std::vector<bool> at_lower;
  std::vector<bool> at_upper;
  std::int64_t iterations = 0;
};

struct LpOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;
  // 0 selects max(10000, 50 * (rows + columns)).
  std::int64_t iteration_limit = 0;
  int degenerate_streak_for_bland = 50;
  // Guard for the dense tableau, in doubles.
  std::size_t max_tableau_entries = std::size_t{1} << 27;
};

// Thrown instead of ever returning a wrong OPTIMAL.
class LpIterationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class LpTooLarge : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

LpSolution solve_lp(const LpProblem& lp, const LpOptions& opts = {});

// Same problem with the column bounds replaced; used by branch-and-bound.
LpSolution solve_lp(const LpProblem& lp, std::span<const double> lower,
                    std::span<const double> upper, const LpOptions& opts = {});

}  // namespace bdlab
