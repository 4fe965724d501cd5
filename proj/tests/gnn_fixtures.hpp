// Synthetic graphs and checks shared by the gnn unit tests and the
// acceptance runner.
#pragma once

#include <algorithm>
#include <cmath>
#include <set>

#include "bdlab/gnn.hpp"
#include "bdlab/rng.hpp"

namespace bdlab::testing {

inline GatConfig small_config() { return {.embed = 4, .heads = 3, .hidden = 5}; }

// |a - n| relative to the larger magnitude, with a 1e-6 floor so entries whose
// true gradient is ~0 are judged on absolute error instead.
inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-6});
}

inline std::vector<int> random_subset(CounterRng& rng, int n, int k) {
  std::vector<int> all(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) all[static_cast<std::size_t>(j)] = j;
  rng.shuffle(all);
  all.resize(static_cast<std::size_t>(k));
  std::sort(all.begin(), all.end());
  return all;
}

// Random features in [-1, 1] and a random bipartite edge set in which every
// node has at least one edge.
inline BipartiteGraph random_graph(CounterRng& rng, int n, int m, double density = 0.4) {
  BipartiteGraph g;
  g.var_feats.resize(n, kVarFeatures);
  g.cons_feats.resize(m, kConsFeatures);
  for (Eigen::Index k = 0; k < g.var_feats.size(); ++k) g.var_feats.data()[k] = rng.uniform(-1.0, 1.0);
  for (Eigen::Index k = 0; k < g.cons_feats.size(); ++k) g.cons_feats.data()[k] = rng.uniform(-1.0, 1.0);
  std::vector<bool> var_seen(static_cast<std::size_t>(n), false);
  for (int i = 0; i < m; ++i) {
    const int forced = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
    for (int j = 0; j < n; ++j) {
      if (j == forced || rng.bernoulli(density)) {
        g.edge_cons.push_back(i);
        g.edge_var.push_back(j);
        var_seen[static_cast<std::size_t>(j)] = true;
      }
    }
  }
  for (int j = 0; j < n; ++j) {
    if (var_seen[static_cast<std::size_t>(j)]) continue;
    g.edge_cons.push_back(static_cast<int>(rng.below(static_cast<std::uint64_t>(m))));
    g.edge_var.push_back(j);
  }
  g.edge_feats.resize(static_cast<Eigen::Index>(g.edge_cons.size()), 1);
  for (Eigen::Index k = 0; k < g.edge_feats.rows(); ++k) g.edge_feats(k, 0) = rng.uniform(-1.0, 1.0);
  g.binary_mask.assign(static_cast<std::size_t>(n), true);
  return g;
}

inline TrainSample random_train_sample(std::uint64_t seed, int n, int m) {
  CounterRng rng(seed);
  TrainSample s;
  s.graph = random_graph(rng, n, m);
  for (int k = 0; k < 2; ++k) s.positives.push_back(random_subset(rng, n, 2));
  for (int k = 0; k < 3; ++k) s.negatives.push_back(random_subset(rng, n, 2));
  return s;
}

// Initialized parameters plus uniform noise on every entry. Zero biases put
// some pre-activations exactly on a rectifier kink, where finite differences
// are meaningless; the jitter moves the check to a generic point.
inline GatParameters jittered_parameters(const GatConfig& cfg, std::uint64_t seed) {
  GatParameters p = init_parameters(cfg, seed);
  CounterRng rng = CounterRng(seed).derive(1);
  for (Matrix* m : p.flat())
    for (Eigen::Index k = 0; k < m->size(); ++k) m->data()[k] += rng.uniform(-0.1, 0.1);
  return p;
}

// Largest relative error, per parameter tensor, between the taped gradient
// and central differences with step 1e-5: ||a - n|| / max(||a||, ||n||).
// Judging whole tensors keeps entries whose gradient is near zero from being
// scored on finite-difference roundoff alone.
inline double max_gradient_error(const GatParameters& params, const TrainSample& sample, double tau) {
  std::vector<Matrix> grads;
  loss_and_grad(params, sample, tau, &grads);
  GatParameters probe = params;
  const auto flat = probe.flat();
  const double h = 1e-5;
  double worst = 0.0;
  for (std::size_t t = 0; t < flat.size(); ++t) {
    Matrix numeric(flat[t]->rows(), flat[t]->cols());
    for (Eigen::Index k = 0; k < flat[t]->size(); ++k) {
      double& x = flat[t]->data()[k];
      const double x0 = x;
      x = x0 + h;
      const double fp = loss_and_grad(probe, sample, tau, nullptr);
      x = x0 - h;
      const double fm = loss_and_grad(probe, sample, tau, nullptr);
      x = x0;
      numeric.data()[k] = (fp - fm) / (2 * h);
    }
    const double scale = std::max({grads[t].norm(), numeric.norm(), 1e-12});
    worst = std::max(worst, (grads[t] - numeric).norm() / scale);
  }
  return worst;
}

// Largest |sum - 1| over every attention neighborhood of both rounds and all
// heads. Also counts the neighborhoods checked.
inline double max_attention_deviation(const AttentionTrace& tr, const BipartiteGraph& g,
                                      std::size_t* neighborhoods = nullptr) {
  double worst = 0.0;
  auto check = [&](const std::vector<std::vector<double>>& heads, const std::vector<int>& seg, int centers) {
    for (const auto& alpha : heads) {
      std::vector<double> total(static_cast<std::size_t>(centers), 0.0);
      for (std::size_t r = 0; r < alpha.size(); ++r) total[static_cast<std::size_t>(seg[r])] += alpha[r];
      for (double s : total) worst = std::max(worst, std::abs(s - 1.0));
      if (neighborhoods) *neighborhoods += total.size();
    }
  };
  check(tr.round1, tr.round1_segments, g.num_cons());
  check(tr.round2, tr.round2_segments, g.num_vars());
  return worst;
}

// Tiny graphs in which variables 0, 1 and 2 carry a distinctive root-LP
// signature (half-integral value, maximal fractionality). The positive sample
// is {0,1,2}; negatives are other random 3-subsets and may share up to two
// planted variables, so only a ranking with all three on top separates them.
inline std::vector<TrainSample> planted_dataset(int count, std::uint64_t seed) {
  const int n = 10, m = 6;
  const std::vector<int> planted{0, 1, 2};
  std::vector<TrainSample> out;
  for (int s = 0; s < count; ++s) {
    CounterRng rng = CounterRng(seed).derive(static_cast<std::uint64_t>(s));
    TrainSample t;
    t.graph = random_graph(rng, n, m);
    for (int j = 0; j < n; ++j) {
      const bool is_planted = j < 3;
      t.graph.var_feats(j, kVfLpValue) = is_planted ? 0.5 : (rng.bernoulli(0.5) ? 1.0 : 0.0);
      t.graph.var_feats(j, kVfFractionality) = is_planted ? 0.5 : 0.0;
    }
    t.positives.push_back(planted);
    while (t.negatives.size() < 5) {
      auto neg = random_subset(rng, n, 3);
      if (neg != planted) t.negatives.push_back(std::move(neg));
    }
    out.push_back(std::move(t));
  }
  return out;
}

inline TrainConfig planted_train_config() {
  TrainConfig cfg;
  cfg.seed = 7;
  return cfg;
}

// Fraction of samples whose three top-scored variables are exactly {0,1,2}.
inline double planted_recall(const GatParameters& params, const std::vector<TrainSample>& data) {
  int hits = 0;
  for (const auto& s : data) {
    const Backdoor b = greedy_select(gat_scores(params, s.graph), s.graph.binary_mask, 3);
    hits += b.vars == std::vector<int>{0, 1, 2};
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

}  // namespace bdlab::testing
