#include "bdlab/lp_simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace bdlab {

const char* to_string(LpStatus s) {
  switch (s) {
    case LpStatus::kOptimal: return "OPTIMAL";
    case LpStatus::kInfeasible: return "INFEASIBLE";
    case LpStatus::kUnbounded: return "UNBOUNDED";
  }
  return "?";
}

namespace {

enum class ColState : std::uint8_t { kBasic, kAtLower, kAtUpper, kFreeZero };

class Tableau {
 public:
  Tableau(const LpProblem& lp, std::span<const double> lower, std::span<const double> upper,
          const LpOptions& opts)
      : lp_(lp), opts_(opts), n_(lp.num_vars), m_(lp.num_rows()) {
    build(lower, upper);
  }

  LpSolution run() {
    LpSolution sol;
    if (trivially_infeasible_) {
      sol.status = LpStatus::kInfeasible;
      return sol;
    }
    if (num_art_ > 0) {
      std::vector<double> phase1(static_cast<std::size_t>(width_), 0.0);
      for (int k = 0; k < num_art_; ++k) phase1[static_cast<std::size_t>(n_ + m_ + k)] = 1.0;
      set_costs(phase1);
      const bool bounded = optimize();
      (void)bounded;  // phase 1 is bounded below by 0
      recompute_basics();
      double infeas = 0.0;
      for (int k = 0; k < num_art_; ++k) infeas += x_[static_cast<std::size_t>(n_ + m_ + k)];
      if (infeas > opts_.feasibility_tol) {
        sol.status = LpStatus::kInfeasible;
        sol.iterations = iterations_;
        return sol;
      }
      retire_artificials();
    }
    std::vector<double> phase2(static_cast<std::size_t>(width_), 0.0);
    std::copy(lp_.objective.begin(), lp_.objective.end(), phase2.begin());
    set_costs(phase2);
    const bool bounded = optimize();
    recompute_basics();
    sol.iterations = iterations_;
    if (!bounded) {
      sol.status = LpStatus::kUnbounded;
      return sol;
    }
    sol.status = LpStatus::kOptimal;
    const auto un = static_cast<std::size_t>(n_);
    sol.x.assign(x_.begin(), x_.begin() + static_cast<std::ptrdiff_t>(un));
    for (std::size_t j = 0; j < un; ++j) {
      sol.x[j] = std::clamp(sol.x[j], lo_[j], hi_[j]);
    }
    sol.objective = 0.0;
    for (std::size_t j = 0; j < un; ++j) sol.objective += lp_.objective[j] * sol.x[j];
    sol.reduced_costs.assign(d_.begin(), d_.begin() + static_cast<std::ptrdiff_t>(un));
    sol.at_lower.assign(un, false);
    sol.at_upper.assign(un, false);
    for (std::size_t j = 0; j < un; ++j) {
      if (state_[j] == ColState::kBasic) {
        sol.reduced_costs[j] = 0.0;
      } else if (state_[j] == ColState::kAtLower) {
        sol.at_lower[j] = true;
      } else if (state_[j] == ColState::kAtUpper) {
        sol.at_upper[j] = true;
      }
    }
    return sol;
  }

 private:
  double& t(int r, int c) {
    return tab_[static_cast<std::size_t>(r) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(c)];
  }
  double* row_ptr(int r) { return &tab_[static_cast<std::size_t>(r) * static_cast<std::size_t>(width_)]; }

  void build(std::span<const double> lower, std::span<const double> upper) {
    const auto un = static_cast<std::size_t>(n_);
    const auto um = static_cast<std::size_t>(m_);
    // Structural columns then slacks; artificials appended below.
    lo_.assign(un + um, 0.0);
    hi_.assign(un + um, 0.0);
    for (std::size_t j = 0; j < un; ++j) {
      lo_[j] = lower[j];
      hi_[j] = upper[j];
      if (lo_[j] > hi_[j]) trivially_infeasible_ = true;
    }
    for (std::size_t r = 0; r < um; ++r) {
      switch (lp_.senses[r]) {
        case Sense::kLe: lo_[un + r] = 0.0; hi_[un + r] = kInf; break;
        case Sense::kGe: lo_[un + r] = -kInf; hi_[un + r] = 0.0; break;
        case Sense::kEq: lo_[un + r] = 0.0; hi_[un + r] = 0.0; break;
      }
    }
    x_.assign(un + um, 0.0);
    state_.assign(un + um, ColState::kAtLower);
    for (std::size_t j = 0; j < un; ++j) {
      if (std::isfinite(lo_[j])) {
        x_[j] = lo_[j];
        state_[j] = ColState::kAtLower;
      } else if (std::isfinite(hi_[j])) {
        x_[j] = hi_[j];
        state_[j] = ColState::kAtUpper;
      } else {
        x_[j] = 0.0;
        state_[j] = ColState::kFreeZero;
      }
    }

    // Decide per row: slack basic, or slack at its nearest bound plus an artificial.
    std::vector<double> residual(um);
    std::vector<int> art_sign(um, 0);
    for (std::size_t r = 0; r < um; ++r) {
      const double s = lp_.rhs[r] - row_activity(lp_.rows[r], x_);
      const std::size_t sc = un + r;
      if (s >= lo_[sc] - opts_.feasibility_tol && s <= hi_[sc] + opts_.feasibility_tol) {
        x_[sc] = s;
        state_[sc] = ColState::kBasic;
      } else {
        const double bound = s < lo_[sc] ? lo_[sc] : hi_[sc];
        x_[sc] = bound;
        state_[sc] = bound == lo_[sc] ? ColState::kAtLower : ColState::kAtUpper;
        residual[r] = s - bound;
        art_sign[r] = residual[r] > 0 ? 1 : -1;
        ++num_art_;
      }
    }
    width_ = n_ + m_ + num_art_;
    const std::size_t entries = um * static_cast<std::size_t>(width_);
    if (entries > opts_.max_tableau_entries) {
      throw LpTooLarge("LP with " + std::to_string(m_) + " rows and " + std::to_string(width_) +
                       " columns exceeds the dense tableau limit");
    }
    tab_.assign(entries, 0.0);
    head_.assign(um, -1);
    art_of_row_.assign(um, -1);
    int next_art = n_ + m_;
    for (int r = 0; r < m_; ++r) {
      const auto ur = static_cast<std::size_t>(r);
      const double sign = art_sign[ur] == 0 ? 1.0 : static_cast<double>(art_sign[ur]);
      for (const auto& e : lp_.rows[ur]) t(r, e.col) = e.coef / sign;
      t(r, n_ + r) = 1.0 / sign;
      if (art_sign[ur] == 0) {
        head_[ur] = n_ + r;
      } else {
        t(r, next_art) = 1.0;
        lo_.push_back(0.0);
        hi_.push_back(kInf);
        x_.push_back(std::abs(residual[ur]));
        state_.push_back(ColState::kBasic);
        head_[ur] = next_art;
        art_of_row_[ur] = next_art;
        ++next_art;
      }
    }
    art_sign_.assign(um, 1.0);
    for (std::size_t r = 0; r < um; ++r) art_sign_[r] = art_sign[r] == 0 ? 1.0 : static_cast<double>(art_sign[r]);
    iteration_limit_ = opts_.iteration_limit > 0
                           ? opts_.iteration_limit
                           : std::max<std::int64_t>(10000, 50LL * (m_ + width_));
  }

  void set_costs(const std::vector<double>& cost) {
    cost_ = cost;
    d_ = cost;
    for (int r = 0; r < m_; ++r) {
      const double cb = cost_[static_cast<std::size_t>(head_[static_cast<std::size_t>(r)])];
      if (cb == 0.0) continue;
      const double* row = row_ptr(r);
      for (int c = 0; c < width_; ++c) d_[static_cast<std::size_t>(c)] -= cb * row[c];
    }
    bland_ = false;
    degenerate_streak_ = 0;
  }

  bool is_fixed(int c) const {
    return lo_[static_cast<std::size_t>(c)] == hi_[static_cast<std::size_t>(c)];
  }

  // Entering column and direction (+1 increase, -1 decrease); -1 when optimal.
  int price(int& direction) const {
    int best = -1;
    double best_score = 0.0;
    for (int c = 0; c < width_; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      const ColState st = state_[uc];
      if (st == ColState::kBasic || is_fixed(c)) continue;
      const double dc = d_[uc];
      int dir = 0;
      if (st == ColState::kAtLower && dc < -opts_.optimality_tol) dir = 1;
      else if (st == ColState::kAtUpper && dc > opts_.optimality_tol) dir = -1;
      else if (st == ColState::kFreeZero && std::abs(dc) > opts_.optimality_tol) dir = dc < 0 ? 1 : -1;
      if (dir == 0) continue;
      if (bland_) {
        direction = dir;
        return c;
      }
      if (std::abs(dc) > best_score) {
        best_score = std::abs(dc);
        best = c;
        direction = dir;
      }
    }
    return best;
  }

  // Returns false when the phase objective is unbounded below.
  bool optimize() {
    for (;;) {
      int dir = 0;
      const int enter = price(dir);
      if (enter < 0) return true;
      if (++iterations_ > iteration_limit_) {
        throw LpIterationLimit("simplex iteration limit (" + std::to_string(iteration_limit_) +
                               ") exceeded");
      }
      const auto ue = static_cast<std::size_t>(enter);

      // Ratio test. Basic in row r moves by -dir * t(r, enter) per unit step.
      double step = kInf;
      int leave_row = -1;
      double leave_alpha = 0.0;
      if (std::isfinite(lo_[ue]) && std::isfinite(hi_[ue])) step = hi_[ue] - lo_[ue];
      for (int r = 0; r < m_; ++r) {
        const double alpha = t(r, enter);
        if (std::abs(alpha) <= opts_.pivot_tol) continue;
        const int b = head_[static_cast<std::size_t>(r)];
        const auto ub = static_cast<std::size_t>(b);
        const double rate = -dir * alpha;
        double limit;
        if (rate < 0) {
          if (!std::isfinite(lo_[ub])) continue;
          limit = (x_[ub] - lo_[ub]) / -rate;
        } else {
          if (!std::isfinite(hi_[ub])) continue;
          limit = (hi_[ub] - x_[ub]) / rate;
        }
        limit = std::max(limit, 0.0);
        bool take = false;
        if (limit < step - 1e-12) {
          take = true;
        } else if (leave_row >= 0 && limit <= step + 1e-12) {
          if (bland_) {
            take = b < head_[static_cast<std::size_t>(leave_row)];
          } else {
            take = std::abs(alpha) > std::abs(leave_alpha);
          }
        }
        if (take) {
          step = std::min(step, limit);
          leave_row = r;
          leave_alpha = alpha;
        }
      }
      if (!std::isfinite(step)) return false;

      const bool degenerate = step <= 1e-12;
      if (degenerate) {
        if (++degenerate_streak_ >= opts_.degenerate_streak_for_bland) bland_ = true;
      } else {
        degenerate_streak_ = 0;
      }

      // Move the entering column and all basics.
      x_[ue] += dir * step;
      if (step != 0.0) {
        for (int r = 0; r < m_; ++r) {
          const double alpha = t(r, enter);
          if (alpha != 0.0) x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(r)])] -= dir * step * alpha;
        }
      }

      const bool flip = leave_row < 0;
      if (flip) {
        if (dir > 0) {
          x_[ue] = hi_[ue];
          state_[ue] = ColState::kAtUpper;
        } else {
          x_[ue] = lo_[ue];
          state_[ue] = ColState::kAtLower;
        }
        continue;
      }

      const int leave = head_[static_cast<std::size_t>(leave_row)];
      const auto ul = static_cast<std::size_t>(leave);
      const double rate = -dir * leave_alpha;
      if (rate < 0) {
        x_[ul] = lo_[ul];
        state_[ul] = ColState::kAtLower;
      } else {
        x_[ul] = hi_[ul];
        state_[ul] = ColState::kAtUpper;
      }
      pivot(leave_row, enter);
      state_[ue] = ColState::kBasic;
      head_[static_cast<std::size_t>(leave_row)] = enter;
    }
  }

  void pivot(int pr, int pc) {
    double* prow = row_ptr(pr);
    const double inv = 1.0 / prow[pc];
    for (int c = 0; c < width_; ++c) prow[c] *= inv;
    prow[pc] = 1.0;
    for (int r = 0; r < m_; ++r) {
      if (r == pr) continue;
      double* row = row_ptr(r);
      const double f = row[pc];
      if (f == 0.0) continue;
      for (int c = 0; c < width_; ++c) row[c] -= f * prow[c];
      row[pc] = 0.0;
    }
    const double f = d_[static_cast<std::size_t>(pc)];
    if (f != 0.0) {
      for (int c = 0; c < width_; ++c) d_[static_cast<std::size_t>(c)] -= f * prow[c];
      d_[static_cast<std::size_t>(pc)] = 0.0;
    }
  }

  // x_B = B^{-1} (b - N x_N). The tableau is B^{-1} times the original
  // columns, so the slack block (identity originally) holds B^{-1}.
  void recompute_basics() {
    const auto um = static_cast<std::size_t>(m_);
    std::vector<double> resid(um);
    for (std::size_t r = 0; r < um; ++r) {
      double acc = lp_.rhs[r];
      for (const auto& e : lp_.rows[r]) {
        const auto uc = static_cast<std::size_t>(e.col);
        if (state_[uc] != ColState::kBasic) acc -= e.coef * x_[uc];
      }
      const std::size_t sc = static_cast<std::size_t>(n_) + r;
      if (state_[sc] != ColState::kBasic) acc -= x_[sc];
      const int art = art_of_row_[r];
      if (art >= 0 && state_[static_cast<std::size_t>(art)] != ColState::kBasic)
        acc -= art_sign_[r] * x_[static_cast<std::size_t>(art)];
      resid[r] = acc;
    }
    for (int i = 0; i < m_; ++i) {
      const double* row = row_ptr(i);
      double v = 0.0;
      for (int r = 0; r < m_; ++r) v += row[n_ + r] * resid[static_cast<std::size_t>(r)];
      x_[static_cast<std::size_t>(head_[static_cast<std::size_t>(i)])] = v;
    }
  }

  // Drive basic artificials out where a usable pivot exists; the rest sit on
  // redundant rows and stay basic, pinned at zero.
  void retire_artificials() {
    for (int r = 0; r < m_; ++r) {
      const int b = head_[static_cast<std::size_t>(r)];
      if (b < n_ + m_) continue;
      int best = -1;
      double best_abs = opts_.pivot_tol;
      for (int c = 0; c < n_ + m_; ++c) {
        if (state_[static_cast<std::size_t>(c)] == ColState::kBasic) continue;
        const double a = std::abs(t(r, c));
        if (a > best_abs) {
          best_abs = a;
          best = c;
        }
      }
      if (best < 0) continue;
      const auto ub = static_cast<std::size_t>(b);
      x_[ub] = 0.0;
      state_[ub] = ColState::kAtLower;
      pivot(r, best);
      state_[static_cast<std::size_t>(best)] = ColState::kBasic;
      head_[static_cast<std::size_t>(r)] = best;
    }
    for (int c = n_ + m_; c < width_; ++c) {
      const auto uc = static_cast<std::size_t>(c);
      hi_[uc] = 0.0;
      if (state_[uc] != ColState::kBasic) {
        x_[uc] = 0.0;
        state_[uc] = ColState::kAtLower;
      }
    }
    recompute_basics();
  }

  const LpProblem& lp_;
  const LpOptions& opts_;
  int n_;
  int m_;
  int num_art_ = 0;
  int width_ = 0;
  bool trivially_infeasible_ = false;
  std::vector<double> tab_;
  std::vector<double> lo_, hi_, x_, cost_, d_;
  std::vector<ColState> state_;
  std::vector<int> head_;
  std::vector<double> art_sign_;
  std::vector<int> art_of_row_;
  std::int64_t iterations_ = 0;
  std::int64_t iteration_limit_ = 0;
  bool bland_ = false;
  int degenerate_streak_ = 0;
};

}  // namespace

LpSolution solve_lp(const LpProblem& lp, std::span<const double> lower,
                    std::span<const double> upper, const LpOptions& opts) {
  const auto report = validate_lp(lp);
  if (!report.ok()) throw InvalidInstance("invalid LP: " + report.violations.front());
  if (lower.size() != static_cast<std::size_t>(lp.num_vars) ||
      upper.size() != static_cast<std::size_t>(lp.num_vars))
    throw std::invalid_argument("bound override length differs from num_vars");
  Tableau tab(lp, lower, upper, opts);
  return tab.run();
}

LpSolution solve_lp(const LpProblem& lp, const LpOptions& opts) {
  return solve_lp(lp, lp.lower, lp.upper, opts);
}

}  // namespace bdlab
