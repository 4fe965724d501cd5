#include <cmath>
#include <filesystem>
#include <fstream>

#include "bdlab/gnn.hpp"
#include "bdlab/rng.hpp"
#include "doctest.h"
#include "gnn_fixtures.hpp"

using namespace bdlab;
using namespace bdlab::testing;

TEST_CASE("autodiff primitives") {
  SUBCASE("square") {
    Tape t;
    const int x = t.variable(Matrix::Constant(1, 1, 3.0));
    t.backward(t.mul(x, x));
    CHECK(t.grad(x)(0, 0) == 6.0);
  }
  SUBCASE("sigmoid at zero") {
    Tape t;
    const int x = t.variable(Matrix::Zero(1, 1));
    t.backward(t.sigmoid(x));
    CHECK(t.grad(x)(0, 0) == 0.25);
  }
  SUBCASE("constants receive nothing") {
    Tape t;
    const int c = t.constant(Matrix::Constant(1, 1, 2.0));
    const int x = t.variable(Matrix::Constant(1, 1, 5.0));
    t.backward(t.mul(c, x));
    CHECK(t.grad(x)(0, 0) == 2.0);
    CHECK(t.grad(c)(0, 0) == 0.0);
  }
  SUBCASE("shape errors") {
    Tape t;
    const int a = t.variable(Matrix::Zero(2, 3));
    const int b = t.variable(Matrix::Zero(2, 3));
    CHECK_THROWS_AS(t.matmul(a, b), std::invalid_argument);
    CHECK_THROWS_AS(t.backward(a), std::invalid_argument);
  }
}

// Each primitive in isolation against central differences.
TEST_CASE("primitive gradient checks") {
  CounterRng rng(3);
  auto rand = [&](Eigen::Index r, Eigen::Index c) {
    Matrix m(r, c);
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = rng.uniform(0.2, 1.5) * (rng.bernoulli(0.5) ? 1 : -1);
    return m;
  };
  const std::vector<int> seg{0, 1, 1, 2, 0, 2, 2};
  const std::vector<int> rows{2, 0, 2, 1};
  const Matrix w = rand(7, 1);  // random projection to a scalar

  using Build = std::function<int(Tape&, int, int)>;
  const std::vector<std::pair<const char*, Build>> cases{
      {"matmul", [](Tape& t, int a, int b) { return t.matmul(a, t.gather_rows(b, std::vector<int>{0, 1, 2})); }},
      {"add", [](Tape& t, int a, int b) { return t.add(a, b); }},
      {"sub", [](Tape& t, int a, int b) { return t.sub(a, b); }},
      {"mul", [](Tape& t, int a, int b) { return t.mul(a, b); }},
      {"scale", [](Tape& t, int a, int) { return t.scale(a, -1.7); }},
      {"add_row", [](Tape& t, int a, int b) { return t.add_row(a, t.gather_rows(b, std::vector<int>{3})); }},
      {"mul_col",
       [](Tape& t, int a, int b) { return t.mul_col(a, t.gather_rows(t.concat_cols(std::vector<int>{b}), std::vector<int>{0, 1, 2, 3, 4, 5, 6})); }},
      {"relu", [](Tape& t, int a, int) { return t.relu(a); }},
      {"leaky_relu", [](Tape& t, int a, int) { return t.leaky_relu(a, 0.2); }},
      {"sigmoid", [](Tape& t, int a, int) { return t.sigmoid(a); }},
      {"exp", [](Tape& t, int a, int) { return t.exp(a); }},
      {"log", [](Tape& t, int a, int) { return t.log(t.mul(a, a)); }},
      {"gather_rows", [&](Tape& t, int a, int) { return t.gather_rows(a, rows); }},
      {"concat_cols", [](Tape& t, int a, int b) { return t.concat_cols(std::vector<int>{a, b}); }},
      {"concat_rows", [](Tape& t, int a, int b) { return t.concat_rows(std::vector<int>{a, b}); }},
      {"segment_sum", [&](Tape& t, int a, int) { return t.segment_sum(a, seg, 3); }},
      {"segment_softmax",
       [&](Tape& t, int a, int) { return t.segment_softmax(t.matmul(a, t.constant(Matrix::Ones(3, 1))), seg, 3); }},
      {"sum", [](Tape& t, int a, int) { return t.sum(a); }},
      {"mean", [](Tape& t, int a, int) { return t.mean(a); }},
      {"logsumexp", [](Tape& t, int a, int) { return t.logsumexp(a); }},
  };

  for (const auto& [name, build] : cases) {
    CAPTURE(name);
    const std::string op = name;
    const Matrix a0 = rand(7, 3);
    const Matrix b0 = op == "mul_col" ? rand(7, 1) : op == "matmul" ? rand(3, 3) : op == "add_row" ? rand(4, 3) : rand(7, 3);
    auto objective = [&](const Matrix& a, const Matrix& b, Tape& t, int* ia, int* ib) {
      *ia = t.variable(a);
      *ib = t.variable(b);
      const int y = build(t, *ia, *ib);
      // Project to a scalar with fixed random weights so every entry matters.
      Matrix proj = Matrix::Zero(t.value(y).rows(), t.value(y).cols());
      for (Eigen::Index k = 0; k < proj.size(); ++k) proj.data()[k] = w(k % 7, 0) + 0.1 * static_cast<double>(k);
      return t.sum(t.mul(y, t.constant(proj)));
    };
    Tape t;
    int ia, ib;
    const int out = objective(a0, b0, t, &ia, &ib);
    t.backward(out);
    const Matrix ga = t.grad(ia), gb = t.grad(ib);
    const double h = 1e-5;
    for (int which = 0; which < 2; ++which) {
      const Matrix& base = which == 0 ? a0 : b0;
      const Matrix& analytic = which == 0 ? ga : gb;
      for (Eigen::Index k = 0; k < base.size(); ++k) {
        Matrix plus = base, minus = base;
        plus.data()[k] += h;
        minus.data()[k] -= h;
        Tape tp, tm;
        int x0, x1;
        const double fp = tp.value(which == 0 ? objective(plus, b0, tp, &x0, &x1) : objective(a0, plus, tp, &x0, &x1))(0, 0);
        const double fm = tm.value(which == 0 ? objective(minus, b0, tm, &x0, &x1) : objective(a0, minus, tm, &x0, &x1))(0, 0);
        const double numeric = (fp - fm) / (2 * h);
        CHECK(relative_error(analytic.data()[k], numeric) < 1e-6);
      }
    }
  }
}

TEST_CASE("composed model gradient check") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto sample = random_train_sample(seed, 6, 4);
    const auto params = jittered_parameters(small_config(), 100 + seed);
    CHECK(max_gradient_error(params, sample, 0.07) < 1e-4);
  }
}

TEST_CASE("gat_forward") {
  const auto sample = random_train_sample(9, 8, 5);
  const auto params = init_parameters(small_config(), 1);

  SUBCASE("scores in (0,1)") {
    const auto s = gat_scores(params, sample.graph);
    CHECK(s.size() == 8);
    for (Eigen::Index j = 0; j < s.size(); ++j) CHECK((s(j) > 0.0 && s(j) < 1.0));
  }

  SUBCASE("attention weights normalize") {
    AttentionTrace tr;
    gat_scores(params, sample.graph, &tr);
    CHECK(tr.round1.size() == 3);
    CHECK(tr.round2.size() == 3);
    CHECK(max_attention_deviation(tr, sample.graph) < 1e-9);
  }

  SUBCASE("one-neighbor variable has a two-point distribution") {
    BipartiteGraph g = sample.graph;
    // Keep only the first edge incident to variable 0.
    BipartiteGraph h = g;
    h.edge_cons.clear();
    h.edge_var.clear();
    std::vector<Eigen::Index> keep;
    bool seen = false;
    for (int e = 0; e < g.num_edges(); ++e) {
      const auto k = static_cast<std::size_t>(e);
      if (g.edge_var[k] == 0) {
        if (seen) continue;
        seen = true;
      }
      keep.push_back(e);
      h.edge_cons.push_back(g.edge_cons[k]);
      h.edge_var.push_back(g.edge_var[k]);
    }
    REQUIRE(seen);
    h.edge_feats.resize(static_cast<Eigen::Index>(keep.size()), 1);
    for (std::size_t k = 0; k < keep.size(); ++k) h.edge_feats(static_cast<Eigen::Index>(k), 0) = g.edge_feats(keep[k], 0);
    AttentionTrace tr;
    gat_scores(params, h, &tr);
    for (const auto& head : tr.round2) {
      double total = 0.0;
      int count = 0;
      for (std::size_t r = 0; r < head.size(); ++r) {
        if (tr.round2_segments[r] != 0) continue;
        total += head[r];
        ++count;
      }
      CHECK(count == 2);
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }

  SUBCASE("all-zero weights give equal scores") {
    auto zero = zero_parameters(small_config());
    zero.tensors.output.b2(0, 0) = 0.3;
    const auto s = gat_scores(zero, sample.graph);
    for (Eigen::Index j = 0; j < s.size(); ++j) CHECK(s(j) == 1.0 / (1.0 + std::exp(-0.3)));
  }

  SUBCASE("variable permutation equivariance") {
    CounterRng rng(4);
    std::vector<int> perm(8);
    for (int j = 0; j < 8; ++j) perm[static_cast<std::size_t>(j)] = j;
    rng.shuffle(perm);
    BipartiteGraph pg = sample.graph;
    for (int j = 0; j < 8; ++j) {
      pg.var_feats.row(perm[static_cast<std::size_t>(j)]) = sample.graph.var_feats.row(j);
      pg.binary_mask[static_cast<std::size_t>(perm[static_cast<std::size_t>(j)])] = sample.graph.binary_mask[static_cast<std::size_t>(j)];
    }
    for (auto& v : pg.edge_var) v = perm[static_cast<std::size_t>(v)];
    const auto s = gat_scores(params, sample.graph);
    const auto ps = gat_scores(params, pg);
    for (int j = 0; j < 8; ++j) CHECK(std::abs(ps(perm[static_cast<std::size_t>(j)]) - s(j)) < 1e-12);
  }

  SUBCASE("width mismatch") {
    BipartiteGraph bad = sample.graph;
    bad.var_feats.conservativeResize(Eigen::NoChange, 14);
    CHECK_THROWS_AS(gat_scores(params, bad), std::invalid_argument);
  }
}

TEST_CASE("infonce") {
  const Eigen::Vector2d pi(0.9, 0.1);
  SUBCASE("no negatives") {
    CHECK(infonce_loss(pi, {{0}}, {}, 0.07) == 0.0);
    CHECK(infonce_loss(Eigen::Vector3d(0.2, 0.7, 0.4), {{0, 1}, {2}}, {}, 0.5) == 0.0);
  }
  SUBCASE("symmetric pair") {
    const Eigen::Vector2d eq(0.4, 0.4);
    CHECK(std::abs(infonce_loss(eq, {{0}}, {{1}}, 0.07) - std::log(2.0)) < 1e-12);
  }
  SUBCASE("hand computation") {
    const double a = 0.9 / 0.07, b = 0.1 / 0.07;
    const double expected = -std::log(std::exp(a) / (std::exp(a) + std::exp(b)));
    const double got = infonce_loss(pi, {{0}}, {{1}}, 0.07);
    CHECK(got == doctest::Approx(expected).epsilon(1e-9));
    CHECK(got == doctest::Approx(1.11e-5).epsilon(0.01));
  }
  SUBCASE("reordering samples leaves the loss unchanged") {
    const Eigen::Vector4d s(0.1, 0.8, 0.3, 0.6);
    const double l1 = infonce_loss(s, {{0, 1}, {2}}, {{3}, {1, 2}, {0}}, 0.2);
    const double l2 = infonce_loss(s, {{2}, {0, 1}}, {{0}, {3}, {1, 2}}, 0.2);
    CHECK(std::abs(l1 - l2) < 1e-12);
  }
  SUBCASE("shift invariance") {
    // Equal-size samples: adding c to every score adds c*|a| to every dot product.
    const Eigen::Vector4d s(0.1, 0.8, 0.3, 0.6);
    const Eigen::Vector4d shifted = s.array() + 0.37;
    const double l1 = infonce_loss(s, {{0, 1}}, {{2, 3}, {1, 2}}, 0.1);
    const double l2 = infonce_loss(shifted, {{0, 1}}, {{2, 3}, {1, 2}}, 0.1);
    CHECK(std::abs(l1 - l2) < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(infonce_loss(pi, {}, {{1}}, 0.07), std::invalid_argument);
    CHECK_THROWS_AS(infonce_loss(pi, {{0}}, {{1}}, 0.0), std::invalid_argument);
  }
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient without decay") {
    Matrix p = Matrix::Constant(2, 2, 1.5);
    std::vector<Matrix*> ps{&p};
    const std::vector<Matrix> g{Matrix::Zero(2, 2)};
    AdamState st;
    adam_step(ps, g, st, {.lr = 0.1, .weight_decay = 0.0});
    CHECK(p == Matrix::Constant(2, 2, 1.5));
  }
  SUBCASE("first step moves by about lr") {
    for (double g0 : {-3.0, 0.01, 250.0}) {
      Matrix p = Matrix::Zero(1, 1);
      std::vector<Matrix*> ps{&p};
      AdamState st;
      adam_step(ps, std::vector<Matrix>{Matrix::Constant(1, 1, g0)}, st, {.lr = 1e-3, .weight_decay = 0.0});
      CHECK(std::abs(std::abs(p(0, 0)) - 1e-3 * std::abs(g0) / (std::abs(g0) + 1e-8)) < 1e-15);
    }
  }
  SUBCASE("three-step trajectory") {
    // Closed-form recurrence evaluated independently.
    const double lr = 0.01, wd = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double grads[3] = {0.5, -1.2, 0.3};
    double theta = 2.0, m = 0.0, v = 0.0;
    Matrix p = Matrix::Constant(1, 1, 2.0);
    std::vector<Matrix*> ps{&p};
    AdamState st;
    for (int t = 1; t <= 3; ++t) {
      const double g = grads[t - 1];
      theta *= 1.0 - lr * wd;
      m = b1 * m + (1 - b1) * g;
      v = b2 * v + (1 - b2) * g * g;
      theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
      adam_step(ps, std::vector<Matrix>{Matrix::Constant(1, 1, g)}, st, {.lr = lr, .weight_decay = wd});
      CHECK(std::abs(p(0, 0) - theta) < 1e-12);
    }
  }
  SUBCASE("shape mismatch") {
    Matrix p = Matrix::Zero(2, 2);
    std::vector<Matrix*> ps{&p};
    AdamState st;
    CHECK_THROWS_AS(adam_step(ps, std::vector<Matrix>{Matrix::Zero(1, 2)}, st, {}), std::invalid_argument);
  }
}

TEST_CASE("greedy_select") {
  const std::vector<bool> all3(3, true);
  CHECK(greedy_select(Eigen::Vector3d(0.9, 0.1, 0.5), all3, 2).vars == std::vector<int>{0, 2});
  CHECK(greedy_select(Eigen::Vector3d(0.9, 0.1, 0.5), all3, 3).vars == std::vector<int>{0, 1, 2});
  CHECK(greedy_select(Eigen::VectorXd::Constant(5, 0.5), std::vector<bool>(5, true), 3).vars ==
        std::vector<int>{0, 1, 2});
  CHECK(greedy_select(Eigen::Vector3d(0.9, 0.1, 0.5), {false, true, true}, 1).vars == std::vector<int>{2});
  CHECK_THROWS_AS(greedy_select(Eigen::Vector3d(0.9, 0.1, 0.5), {false, true, true}, 3), std::invalid_argument);
}

TEST_CASE("train") {
  std::vector<TrainSample> data;
  for (std::uint64_t s = 0; s < 6; ++s) data.push_back(random_train_sample(s, 6, 4));
  TrainConfig cfg;
  cfg.model = small_config();
  cfg.epochs = 4;
  cfg.batch_size = 4;
  cfg.seed = 11;
  const auto a = train(data, cfg);
  const auto b = train(data, cfg);
  CHECK(a.loss_curve.size() == 4);
  CHECK(a.params == b.params);
  CHECK(a.loss_curve == b.loss_curve);
  CHECK_THROWS_AS(train({}, cfg), std::invalid_argument);
}

TEST_CASE("planted structure is learned") {
  const auto data = planted_dataset(50, 21);
  TrainConfig cfg = planted_train_config();
  const auto res = train(data, cfg);
  CHECK(res.loss_curve.back() <= 0.5 * res.loss_curve.front());
  CHECK(planted_recall(res.params, data) >= 0.8);
}

TEST_CASE("checkpoint") {
  const auto dir = std::filesystem::temp_directory_path() / "bdlab_test_gnn";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.ckpt";
  const auto p = init_parameters(small_config(), 5);
  save_model(p, path);
  CHECK(load_model(path) == p);

  auto bytes = [&] {
    std::ifstream is(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(is), {});
  }();
  auto write = [&](const std::string& s) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    os << s;
  };
  std::string bad = bytes;
  bad[0] = 'X';
  write(bad);
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("bad header"), ModelFormatError);
  bad = bytes;
  bad[8] = 7;
  write(bad);
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("version 7"), ModelFormatError);
  write(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS_WITH_AS(load_model(path), doctest::Contains("truncated"), ModelFormatError);
  std::filesystem::remove_all(dir);
}
