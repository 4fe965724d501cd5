#include <cmath>
#include <set>

#include "bdlab/generators.hpp"
#include "bdlab/lp_simplex.hpp"
#include "doctest.h"

using namespace bdlab;

TEST_CASE("gisp") {
  const GispParams p{.nodes = 30};
  CHECK(format_instance(gen_gisp(p, 11)) == format_instance(gen_gisp(p, 11)));
  CHECK_FALSE(gen_gisp(p, 11) == gen_gisp(p, 12));

  const auto inst = gen_gisp(p, 11);
  int e2 = 0;
  for (const auto& row : inst.rows) e2 += row.size() == 3 ? 1 : 0;
  const int e1 = inst.num_rows() - e2;
  CHECK(inst.num_vars == p.nodes + e2);
  CHECK(inst.num_rows() == e1 + e2);
  CHECK(static_cast<int>(inst.binary_set.size()) == inst.num_vars);
  for (int i = 0; i < p.nodes; ++i) CHECK(inst.objective[static_cast<std::size_t>(i)] == -100.0);
  for (int j = p.nodes; j < inst.num_vars; ++j) CHECK(inst.objective[static_cast<std::size_t>(j)] == 1.0);
  CHECK(validate_instance(inst).ok());
}

TEST_CASE("gisp defaults hit the small benchmark scale") {
  double vars = 0.0, cons = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = gen_gisp({}, seed);
    vars += inst.num_vars;
    cons += inst.num_rows();
  }
  vars /= 20.0;
  cons /= 20.0;
  CHECK(std::abs(vars - 988.0) <= 98.8);
  CHECK(std::abs(cons - 3253.0) <= 325.3);
}

TEST_CASE("set cover") {
  const auto inst = gen_setcover({}, 3);
  CHECK(inst.num_vars == 1000);
  CHECK(inst.num_rows() == 1200);
  for (const auto& row : inst.rows) CHECK_FALSE(row.empty());
  for (auto s : inst.senses) CHECK(s == Sense::kGe);
  CHECK(validate_instance(inst).ok());

  // Very sparse draws force the coverage patch.
  const auto sparse = gen_setcover({.n_elements = 50, .n_sets = 5, .density = 0.01}, 9);
  for (const auto& row : sparse.rows) CHECK(row.size() >= 1);
  CHECK(format_instance(sparse) == format_instance(gen_setcover({.n_elements = 50, .n_sets = 5, .density = 0.01}, 9)));
}

TEST_CASE("combinatorial auction") {
  const auto inst = gen_combinatorial_auction({}, 5);
  CHECK(inst.num_vars == 750);
  CHECK(inst.num_rows() <= 150);
  std::vector<int> bundle_size(750, 0);
  for (const auto& row : inst.rows) {
    CHECK_FALSE(row.empty());
    for (const auto& e : row) ++bundle_size[static_cast<std::size_t>(e.col)];
  }
  for (int s : bundle_size) CHECK(s >= 1);
  for (double c : inst.objective) CHECK(c < 0.0);
  CHECK(format_instance(inst) == format_instance(gen_combinatorial_auction({}, 5)));
  CHECK(validate_instance(inst).ok());
}

TEST_CASE("maximum independent set") {
  const auto inst = gen_mis({}, 1);
  CHECK(inst.num_vars == 1250);
  std::set<std::pair<int, int>> edges;
  for (const auto& row : inst.rows) {
    REQUIRE(row.size() == 2);
    CHECK(row[0].col != row[1].col);
    CHECK(edges.insert({row[0].col, row[1].col}).second);
  }
  double mean_edges = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) mean_edges += gen_mis({.nodes = 200, .avg_degree = 4}, seed).num_rows();
  mean_edges /= 20.0;
  const double expected = 200 * 4 / 2.0;
  CHECK(std::abs(mean_edges - expected) <= 0.15 * expected);
  CHECK(format_instance(gen_mis({.nodes = 50}, 3)) == format_instance(gen_mis({.nodes = 50}, 3)));
}

TEST_CASE("facility location") {
  const auto full = gen_facility_location({}, 2);
  CHECK(full.binary_set.size() == 100);
  CHECK(full.num_vars - static_cast<int>(full.binary_set.size()) == 20000);
  CHECK(validate_instance(full).ok());

  const FacilityParams small{.facilities = 4, .customers = 8};
  CHECK(format_instance(gen_facility_location(small, 7)) == format_instance(gen_facility_location(small, 7)));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = gen_facility_location(small, seed);
    CHECK(solve_lp(lp_relaxation(inst)).status == LpStatus::kOptimal);
  }
}

TEST_CASE("config validation") {
  CHECK_THROWS_AS(generate({GispParams{.nodes = 1}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate({GispParams{.edge_prob = 1.5}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate({SetCoverParams{.density = 0.0}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate({MisParams{.nodes = 4, .avg_degree = 4}, 0}), std::invalid_argument);
  CHECK_THROWS_AS(generate({FacilityParams{.facilities = 0}, 0}), std::invalid_argument);
  CHECK(family_tag(SetCoverParams{}) == "SC");
  CHECK(generate({MisParams{.nodes = 10}, 4}) == gen_mis({.nodes = 10}, 4));
}
