// Graph attention scoring policy, contrastive loss, optimizer and training.
#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "bdlab/autodiff.hpp"
#include "bdlab/backdoor_search.hpp"
#include "bdlab/featurizer.hpp"

namespace bdlab {

struct GatConfig {
  int embed = 64;   // L
  int heads = 8;    // H
  int hidden = 64;  // MLP hidden width
};

// Two-layer perceptron: x W1 + b1, rectifier, W2 + b2.
template <typename T>
struct MlpTensors {
  T w1, b1, w2, b2;
  template <typename F>
  void for_each(F&& f) {
    f(w1);
    f(b1);
    f(w2);
    f(b2);
  }
};

// Per-head projections (L x L, applied as x * theta) and attention vector w
// (3L x 1) acting on [constraint part, variable part, edge part].
template <typename T>
struct HeadTensors {
  T theta_c, theta_v, theta_e, w;
  template <typename F>
  void for_each(F&& f) {
    f(theta_c);
    f(theta_v);
    f(theta_e);
    f(w);
  }
};

template <typename T>
struct GatTensors {
  MlpTensors<T> var_embed, cons_embed, edge_embed, output;
  std::vector<HeadTensors<T>> round1, round2;

  // Fixed traversal order shared by gradients, the optimizer and checkpoints.
  template <typename F>
  void for_each(F&& f) {
    var_embed.for_each(f);
    cons_embed.for_each(f);
    edge_embed.for_each(f);
    for (auto& h : round1) h.for_each(f);
    for (auto& h : round2) h.for_each(f);
    output.for_each(f);
  }
};

struct GatParameters {
  GatConfig config;
  GatTensors<Matrix> tensors;

  std::vector<Matrix*> flat();
  std::vector<const Matrix*> flat() const;
  std::size_t num_scalars() const;
  bool operator==(const GatParameters& o) const;
};

// Glorot-uniform weights, zero biases, drawn in traversal order.
GatParameters init_parameters(const GatConfig& cfg, std::uint64_t seed);
GatParameters zero_parameters(const GatConfig& cfg);

// Attention weights of one forward pass. Round r, head h holds one weight per
// entry of the neighborhood list: the self entries of every center node first
// (in node order), then one entry per edge (in edge order).
struct AttentionTrace {
  std::vector<std::vector<double>> round1, round2;
  std::vector<int> round1_segments, round2_segments;  // center node per entry
};

// Builds the forward pass on `tape`, returning the n x 1 score node.
int gat_forward(Tape& tape, const GatTensors<int>& params, const GatConfig& cfg, const BipartiteGraph& graph,
                AttentionTrace* trace = nullptr);

// Places every tensor on the tape as a variable, in traversal order.
GatTensors<int> bind_parameters(Tape& tape, const GatParameters& params);

// Scores in (0,1) for every variable.
Eigen::VectorXd gat_scores(const GatParameters& params, const BipartiteGraph& graph,
                           AttentionTrace* trace = nullptr);

// Variable-index sets of positive and negative samples.
using SampleSet = std::vector<std::vector<int>>;

// Mean over positives a of -log softmax over {a} and S_n of (a . scores / tau).
// Throws std::invalid_argument for an empty S_p or a non-positive tau.
int infonce(Tape& tape, int scores, const SampleSet& positives, const SampleSet& negatives, double tau);
double infonce_loss(const Eigen::VectorXd& scores, const SampleSet& positives, const SampleSet& negatives,
                    double tau);

struct AdamConfig {
  double lr = 5e-4;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::int64_t t = 0;
  std::vector<Matrix> m, v;
};

// Decoupled decay (theta -= lr * wd * theta), then the bias-corrected Adam
// update. State is sized on the first call.
void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainSample {
  BipartiteGraph graph;
  SampleSet positives;
  SampleSet negatives;
};

struct TrainConfig {
  double tau = 0.07;
  double lr = 5e-4;
  double weight_decay = 0.01;
  int batch_size = 32;
  int epochs = 100;
  std::uint64_t seed = 0;
  GatConfig model;
};

struct TrainResult {
  GatParameters params;
  std::vector<double> loss_curve;  // mean sample loss per epoch
};

// Loss and gradient (in traversal order) for one sample.
double loss_and_grad(const GatParameters& params, const TrainSample& sample, double tau,
                     std::vector<Matrix>* grads);

TrainResult train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg);

// The K highest-scoring binary variables, ties to the lowest index.
Backdoor greedy_select(const Eigen::VectorXd& scores, const std::vector<bool>& binary_mask, int K);

class ModelFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::uint8_t kModelFormatVersion = 1;

void save_model(const GatParameters& params, const std::filesystem::path& path);
GatParameters load_model(const std::filesystem::path& path);

}  // namespace bdlab
