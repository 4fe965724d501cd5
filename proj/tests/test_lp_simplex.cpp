#include <cmath>

#include "bdlab/lp_simplex.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace bdlab;

namespace {

LpProblem one_var(double lo, double hi, double c) {
  LpProblem lp;
  lp.num_vars = 1;
  lp.objective = {c};
  lp.lower = {lo};
  lp.upper = {hi};
  return lp;
}

LpProblem random_box_lp(std::uint64_t seed, int n, int m) {
  CounterRng rng(seed);
  LpProblem lp;
  lp.num_vars = n;
  for (int j = 0; j < n; ++j) {
    lp.objective.push_back(rng.uniform(-5.0, 5.0));
    const double lo = rng.uniform(-2.0, 0.0);
    lp.lower.push_back(lo);
    lp.upper.push_back(lo + rng.uniform(0.5, 3.0));
  }
  for (int r = 0; r < m; ++r) {
    SparseRow row;
    for (int j = 0; j < n; ++j)
      if (rng.bernoulli(0.7)) row.push_back({j, rng.uniform(-3.0, 3.0)});
    if (row.empty()) row.push_back({0, 1.0});
    lp.rows.push_back(row);
    const int kind = static_cast<int>(rng.below(3));
    lp.senses.push_back(kind == 0 ? Sense::kLe : kind == 1 ? Sense::kGe : Sense::kEq);
    lp.rhs.push_back(rng.uniform(-1.0, 1.0));
  }
  return lp;
}

}  // namespace

TEST_CASE("textbook cases") {
  SUBCASE("min -x on [0,1]") {
    const auto sol = solve_lp(one_var(0.0, 1.0, -1.0));
    REQUIRE(sol.status == LpStatus::kOptimal);
    CHECK(sol.x[0] == doctest::Approx(1.0));
    CHECK(sol.objective == doctest::Approx(-1.0));
    CHECK(sol.at_upper[0]);
  }
  SUBCASE("x <= -1 with x >= 0 is infeasible") {
    auto lp = one_var(0.0, kInf, 1.0);
    lp.rows = {{{0, 1.0}}};
    lp.senses = {Sense::kLe};
    lp.rhs = {-1.0};
    CHECK(solve_lp(lp).status == LpStatus::kInfeasible);
  }
  SUBCASE("min -x with x >= 0 unbounded") {
    CHECK(solve_lp(one_var(0.0, kInf, -1.0)).status == LpStatus::kUnbounded);
  }
  SUBCASE("free variable pinned by an equality") {
    auto lp = one_var(-kInf, kInf, 1.0);
    lp.num_vars = 2;
    lp.objective = {1.0, 1.0};
    lp.lower = {-kInf, 0.0};
    lp.upper = {kInf, 4.0};
    lp.rows = {{{0, 1.0}, {1, -1.0}}};
    lp.senses = {Sense::kEq};
    lp.rhs = {-3.0};
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::kOptimal);
    CHECK(sol.x[0] == doctest::Approx(-3.0));
    CHECK(sol.x[1] == doctest::Approx(0.0));
  }
  SUBCASE("crossed bound override is infeasible") {
    const auto lp = one_var(0.0, 1.0, 1.0);
    const std::vector<double> lo{1.0}, hi{0.0};
    CHECK(solve_lp(lp, lo, hi).status == LpStatus::kInfeasible);
  }
  SUBCASE("iteration limit raises instead of answering") {
    LpProblem lp = one_var(0.0, 1.0, -1.0);
    lp.num_vars = 3;
    lp.objective = {-1.0, -2.0, -3.0};
    lp.lower.assign(3, 0.0);
    lp.upper.assign(3, 1.0);
    lp.rows = {{{0, 1.0}, {1, 1.0}, {2, 1.0}}};
    lp.senses = {Sense::kGe};
    lp.rhs = {2.5};
    LpOptions opts;
    opts.iteration_limit = 1;
    CHECK_THROWS_AS(solve_lp(lp, opts), LpIterationLimit);
    CHECK(solve_lp(lp).objective == doctest::Approx(-6.0));
  }
}

TEST_CASE("random box LPs match vertex enumeration") {
  int compared = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto lp = random_box_lp(seed, 6, 4);
    const auto oracle = testing::vertex_enumeration_lp(lp);
    const auto sol = solve_lp(lp);
    if (!oracle) {
      CHECK(sol.status == LpStatus::kInfeasible);
      continue;
    }
    REQUIRE(sol.status == LpStatus::kOptimal);
    CHECK(std::abs(sol.objective - *oracle) <= 1e-7);
    CHECK(max_violation(lp, sol.x) <= 1e-7);
    ++compared;
  }
  CHECK(compared >= 20);
}

TEST_CASE("optimal points are feasible and beat random feasible roundings") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = testing::random_small_milp(500 + seed, 10, 3, 6);
    const auto lp = lp_relaxation(inst);
    const auto sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::kOptimal);
    for (int j = 0; j < lp.num_vars; ++j) {
      CHECK(sol.x[static_cast<std::size_t>(j)] >= lp.lower[static_cast<std::size_t>(j)] - 1e-9);
      CHECK(sol.x[static_cast<std::size_t>(j)] <= lp.upper[static_cast<std::size_t>(j)] + 1e-9);
    }
    CHECK(max_violation(lp, sol.x) <= 1e-7);

    CounterRng rng(seed);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> x = sol.x;
      for (int j : inst.binary_set) {
        const auto uj = static_cast<std::size_t>(j);
        x[uj] = rng.bernoulli(x[uj]) ? 1.0 : 0.0;
      }
      if (max_violation(lp, x) > 1e-9) continue;
      double obj = 0.0;
      for (std::size_t j = 0; j < x.size(); ++j) obj += lp.objective[j] * x[j];
      CHECK(sol.objective <= obj + 1e-9);
    }
  }
}

TEST_CASE("resolving is deterministic") {
  const auto lp = random_box_lp(77, 6, 4);
  const auto a = solve_lp(lp);
  const auto b = solve_lp(lp);
  CHECK(a.status == b.status);
  CHECK(a.objective == b.objective);
  CHECK(a.at_lower == b.at_lower);
  CHECK(a.at_upper == b.at_upper);
  CHECK(a.x == b.x);
}

TEST_CASE("degenerate set packing relaxation") {
  // Dense clique constraints are highly degenerate at the origin.
  LpProblem lp;
  lp.num_vars = 12;
  lp.objective.assign(12, -1.0);
  lp.lower.assign(12, 0.0);
  lp.upper.assign(12, 1.0);
  for (int i = 0; i < 12; ++i)
    for (int j = i + 1; j < 12; ++j) {
      lp.rows.push_back({{i, 1.0}, {j, 1.0}});
      lp.senses.push_back(Sense::kLe);
      lp.rhs.push_back(1.0);
    }
  const auto sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(-6.0));
}
