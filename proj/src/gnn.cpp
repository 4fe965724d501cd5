#include "bdlab/gnn.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "bdlab/rng.hpp"

namespace bdlab {

namespace {

constexpr double kAttentionSlope = 0.2;

template <typename T>
GatTensors<T> make_layout(const GatConfig& cfg) {
  GatTensors<T> t;
  t.round1.resize(static_cast<std::size_t>(cfg.heads));
  t.round2.resize(static_cast<std::size_t>(cfg.heads));
  return t;
}

void validate_config(const GatConfig& cfg) {
  if (cfg.embed < 1 || cfg.heads < 1 || cfg.hidden < 1)
    throw std::invalid_argument("model sizes must be positive");
}

// Shapes of every tensor in traversal order.
std::vector<std::array<Eigen::Index, 2>> tensor_shapes(const GatConfig& cfg) {
  const Eigen::Index L = cfg.embed, h = cfg.hidden;
  std::vector<std::array<Eigen::Index, 2>> out;
  auto mlp = [&](Eigen::Index in, Eigen::Index width) {
    out.push_back({in, h});
    out.push_back({1, h});
    out.push_back({h, width});
    out.push_back({1, width});
  };
  mlp(kVarFeatures, L);
  mlp(kConsFeatures, L);
  mlp(kEdgeFeatures, L);
  for (int r = 0; r < 2; ++r) {
    for (int k = 0; k < cfg.heads; ++k) {
      for (int m = 0; m < 3; ++m) out.push_back({L, L});
      out.push_back({3 * L, 1});
    }
  }
  mlp(L, 1);
  return out;
}

GatParameters shaped_parameters(const GatConfig& cfg) {
  validate_config(cfg);
  GatParameters p{cfg, make_layout<Matrix>(cfg)};
  const auto shapes = tensor_shapes(cfg);
  std::size_t k = 0;
  p.tensors.for_each([&](Matrix& m) {
    m = Matrix::Zero(shapes[k][0], shapes[k][1]);
    ++k;
  });
  return p;
}

int mlp(Tape& t, int x, const MlpTensors<int>& p, bool final_relu) {
  const int h = t.relu(t.add_row(t.matmul(x, p.w1), p.b1));
  const int o = t.add_row(t.matmul(h, p.w2), p.b2);
  return final_relu ? t.relu(o) : o;
}

// One attention round. Each center node attends to itself and to its
// neighbors across edges. Logits take [constraint part, variable part, edge
// part]; the self entry puts the center projection in both node slots and
// zeros in the edge slot.
int attention_round(Tape& t, const std::vector<HeadTensors<int>>& heads, bool center_is_cons, int center,
                    int neighbor, int edges, const std::vector<int>& center_of_edge,
                    const std::vector<int>& neighbor_of_edge, int num_centers, int embed,
                    std::vector<std::vector<double>>* trace, std::vector<int>* trace_seg) {
  std::vector<int> seg(static_cast<std::size_t>(num_centers));
  std::iota(seg.begin(), seg.end(), 0);
  seg.insert(seg.end(), center_of_edge.begin(), center_of_edge.end());
  if (trace_seg) *trace_seg = seg;
  const int zeros = t.constant(Matrix::Zero(num_centers, embed));

  int total = -1;
  for (const auto& h : heads) {
    const int pc = t.matmul(center, center_is_cons ? h.theta_c : h.theta_v);
    const int pn = t.matmul(neighbor, center_is_cons ? h.theta_v : h.theta_c);
    const int pe = t.matmul(edges, h.theta_e);
    const int pn_edge = t.gather_rows(pn, neighbor_of_edge);
    const int pc_edge = t.gather_rows(pc, center_of_edge);
    const std::array<int, 3> self_parts{pc, pc, zeros};
    const std::array<int, 3> edge_parts =
        center_is_cons ? std::array<int, 3>{pc_edge, pn_edge, pe} : std::array<int, 3>{pn_edge, pc_edge, pe};
    const std::array<int, 2> both{t.concat_cols(self_parts), t.concat_cols(edge_parts)};
    const int logits = t.matmul(t.leaky_relu(t.concat_rows(both), kAttentionSlope), h.w);
    const int alpha = t.segment_softmax(logits, seg, num_centers);
    if (trace) {
      const Matrix& a = t.value(alpha);
      trace->emplace_back(a.data(), a.data() + a.size());
    }
    const std::array<int, 2> msgs{pc, pn_edge};
    const int out = t.segment_sum(t.mul_col(t.concat_rows(msgs), alpha), seg, num_centers);
    total = total < 0 ? out : t.add(total, out);
  }
  return t.scale(total, 1.0 / static_cast<double>(heads.size()));
}

double glorot(CounterRng& rng, Eigen::Index fan_in, Eigen::Index fan_out) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  return rng.uniform(-a, a);
}

}  // namespace

std::vector<Matrix*> GatParameters::flat() {
  std::vector<Matrix*> out;
  tensors.for_each([&](Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> GatParameters::flat() const {
  std::vector<const Matrix*> out;
  const_cast<GatTensors<Matrix>&>(tensors).for_each([&](Matrix& m) { out.push_back(&m); });
  return out;
}

std::size_t GatParameters::num_scalars() const {
  std::size_t n = 0;
  for (const Matrix* m : flat()) n += static_cast<std::size_t>(m->size());
  return n;
}

bool GatParameters::operator==(const GatParameters& o) const {
  if (config.embed != o.config.embed || config.heads != o.config.heads || config.hidden != o.config.hidden)
    return false;
  const auto a = flat(), b = o.flat();
  for (std::size_t k = 0; k < a.size(); ++k) {
    if (a[k]->rows() != b[k]->rows() || a[k]->cols() != b[k]->cols()) return false;
    if (std::memcmp(a[k]->data(), b[k]->data(), sizeof(double) * static_cast<std::size_t>(a[k]->size())) != 0)
      return false;
  }
  return true;
}

GatParameters zero_parameters(const GatConfig& cfg) { return shaped_parameters(cfg); }

GatParameters init_parameters(const GatConfig& cfg, std::uint64_t seed) {
  GatParameters p = shaped_parameters(cfg);
  CounterRng rng(seed);
  std::vector<const Matrix*> biases;
  auto note_biases = [&](MlpTensors<Matrix>& mlp) {
    biases.push_back(&mlp.b1);
    biases.push_back(&mlp.b2);
  };
  note_biases(p.tensors.var_embed);
  note_biases(p.tensors.cons_embed);
  note_biases(p.tensors.edge_embed);
  note_biases(p.tensors.output);
  p.tensors.for_each([&](Matrix& m) {
    if (std::find(biases.begin(), biases.end(), &m) != biases.end()) return;
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = glorot(rng, m.rows(), m.cols());
  });
  return p;
}

GatTensors<int> bind_parameters(Tape& tape, const GatParameters& params) {
  GatTensors<int> ids = make_layout<int>(params.config);
  const auto flat = params.flat();
  std::size_t k = 0;
  ids.for_each([&](int& id) { id = tape.variable(*flat[k++]); });
  return ids;
}

int gat_forward(Tape& tape, const GatTensors<int>& params, const GatConfig& cfg, const BipartiteGraph& graph,
                AttentionTrace* trace) {
  validate_graph(graph);
  if (params.round1.size() != static_cast<std::size_t>(cfg.heads) ||
      params.round2.size() != static_cast<std::size_t>(cfg.heads))
    throw std::invalid_argument("gat_forward: head count mismatch");
  const int n = graph.num_vars(), m = graph.num_cons();
  if (trace) *trace = AttentionTrace{};

  const int v1 = mlp(tape, tape.constant(graph.var_feats), params.var_embed, true);
  const int c1 = mlp(tape, tape.constant(graph.cons_feats), params.cons_embed, true);
  const int e1 = mlp(tape, tape.constant(graph.edge_feats), params.edge_embed, true);
  if (tape.value(v1).cols() != cfg.embed) throw std::invalid_argument("gat_forward: embedding width mismatch");

  const int c2 = attention_round(tape, params.round1, true, c1, v1, e1, graph.edge_cons, graph.edge_var, m,
                                 cfg.embed, trace ? &trace->round1 : nullptr,
                                 trace ? &trace->round1_segments : nullptr);
  const int v2 = attention_round(tape, params.round2, false, v1, c2, e1, graph.edge_var, graph.edge_cons, n,
                                 cfg.embed, trace ? &trace->round2 : nullptr,
                                 trace ? &trace->round2_segments : nullptr);
  return tape.sigmoid(mlp(tape, v2, params.output, false));
}

Eigen::VectorXd gat_scores(const GatParameters& params, const BipartiteGraph& graph, AttentionTrace* trace) {
  Tape tape;
  GatTensors<int> ids = make_layout<int>(params.config);
  const auto flat = params.flat();
  std::size_t k = 0;
  ids.for_each([&](int& id) { id = tape.constant(*flat[k++]); });
  return tape.value(gat_forward(tape, ids, params.config, graph, trace)).col(0);
}

int infonce(Tape& tape, int scores, const SampleSet& positives, const SampleSet& negatives, double tau) {
  if (positives.empty()) throw std::invalid_argument("infonce: no positive samples");
  if (!(tau > 0.0)) throw std::invalid_argument("infonce: temperature must be positive");
  const Eigen::Index n = tape.value(scores).rows();
  if (tape.value(scores).cols() != 1) throw std::invalid_argument("infonce: scores must be a column vector");
  auto membership = [&](const SampleSet& set) {
    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(set.size()), n);
    for (std::size_t s = 0; s < set.size(); ++s) {
      for (int j : set[s]) {
        if (j < 0 || j >= n) throw std::invalid_argument("infonce: sample index out of range");
        a(static_cast<Eigen::Index>(s), j) = 1.0;
      }
    }
    return a;
  };
  const int pos = tape.scale(tape.matmul(tape.constant(membership(positives)), scores), 1.0 / tau);
  const int neg = negatives.empty()
                      ? -1
                      : tape.scale(tape.matmul(tape.constant(membership(negatives)), scores), 1.0 / tau);
  std::vector<int> terms;
  for (std::size_t k = 0; k < positives.size(); ++k) {
    const std::array<int, 1> row{static_cast<int>(k)};
    const int own = tape.gather_rows(pos, row);
    int lse;
    if (neg < 0) {
      lse = tape.logsumexp(own);
    } else {
      const std::array<int, 2> parts{own, neg};
      lse = tape.logsumexp(tape.concat_rows(parts));
    }
    terms.push_back(tape.sub(lse, own));
  }
  return tape.mean(tape.concat_rows(terms));
}

double infonce_loss(const Eigen::VectorXd& scores, const SampleSet& positives, const SampleSet& negatives,
                    double tau) {
  Tape tape;
  const int s = tape.constant(scores);
  return tape.value(infonce(tape, s, positives, negatives, tau))(0, 0);
}

void adam_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdamState& state,
               const AdamConfig& cfg) {
  if (params.size() != grads.size()) throw std::invalid_argument("adam_step: gradient count mismatch");
  if (state.t == 0 && state.m.empty()) {
    for (const Matrix* p : params) {
      state.m.push_back(Matrix::Zero(p->rows(), p->cols()));
      state.v.push_back(Matrix::Zero(p->rows(), p->cols()));
    }
  }
  if (state.m.size() != params.size()) throw std::invalid_argument("adam_step: state size mismatch");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k]->rows() || grads[k].cols() != params[k]->cols() ||
        state.m[k].rows() != params[k]->rows() || state.m[k].cols() != params[k]->cols())
      throw std::invalid_argument("adam_step: shape mismatch");
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    p -= cfg.lr * cfg.weight_decay * p;
    state.m[k] = cfg.beta1 * state.m[k] + (1.0 - cfg.beta1) * grads[k];
    state.v[k] = cfg.beta2 * state.v[k] + (1.0 - cfg.beta2) * grads[k].cwiseProduct(grads[k]);
    p.array() -= cfg.lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + cfg.eps);
  }
}

double loss_and_grad(const GatParameters& params, const TrainSample& sample, double tau,
                     std::vector<Matrix>* grads) {
  Tape tape;
  GatTensors<int> ids = bind_parameters(tape, params);
  const int scores = gat_forward(tape, ids, params.config, sample.graph);
  const int loss = infonce(tape, scores, sample.positives, sample.negatives, tau);
  if (grads) {
    tape.backward(loss);
    grads->clear();
    ids.for_each([&](int& id) { grads->push_back(tape.grad(id)); });
  }
  return tape.value(loss)(0, 0);
}

TrainResult train(const std::vector<TrainSample>& dataset, const TrainConfig& cfg) {
  if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw std::invalid_argument("train: bad batch size or epoch count");
  for (const auto& s : dataset)
    if (s.positives.empty() || s.negatives.empty()) throw std::invalid_argument("train: sample with an empty side");

  TrainResult out{init_parameters(cfg.model, cfg.seed), {}};
  const CounterRng root(cfg.seed);
  AdamState state;
  const AdamConfig adam{cfg.lr, cfg.weight_decay};
  const auto params = out.params.flat();
  std::vector<std::size_t> order(dataset.size());
  std::vector<Matrix> sample_grads, batch_grads;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    CounterRng rng = root.derive(static_cast<std::uint64_t>(epoch));
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      batch_grads.clear();
      for (std::size_t k = start; k < stop; ++k) {
        epoch_loss += loss_and_grad(out.params, dataset[order[k]], cfg.tau, &sample_grads);
        if (batch_grads.empty())
          batch_grads = std::move(sample_grads);
        else
          for (std::size_t g = 0; g < batch_grads.size(); ++g) batch_grads[g] += sample_grads[g];
      }
      for (auto& g : batch_grads) g /= static_cast<double>(stop - start);
      adam_step(params, batch_grads, state, adam);
    }
    out.loss_curve.push_back(epoch_loss / static_cast<double>(dataset.size()));
  }
  return out;
}

Backdoor greedy_select(const Eigen::VectorXd& scores, const std::vector<bool>& binary_mask, int K) {
  if (static_cast<std::size_t>(scores.size()) != binary_mask.size())
    throw std::invalid_argument("greedy_select: score and mask lengths differ");
  std::vector<int> cand;
  for (std::size_t j = 0; j < binary_mask.size(); ++j)
    if (binary_mask[j]) cand.push_back(static_cast<int>(j));
  if (K < 1 || K > static_cast<int>(cand.size()))
    throw std::invalid_argument("greedy_select: K must lie in [1, number of binaries]");
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return scores(a) > scores(b); });
  Backdoor b{std::vector<int>(cand.begin(), cand.begin() + K)};
  std::sort(b.vars.begin(), b.vars.end());
  return b;
}

// Checkpoint layout (native little-endian): 8-byte magic, version byte,
// int32 embed/heads/hidden, uint64 tensor count, then per tensor int64 rows,
// int64 cols and the column-major doubles.
namespace {

constexpr std::array<char, 8> kMagic{'B', 'D', 'L', 'A', 'B', 'G', 'A', 'T'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw ModelFormatError("model file is truncated");
  return v;
}

}  // namespace

void save_model(const GatParameters& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  put<std::uint8_t>(os, kModelFormatVersion);
  put<std::int32_t>(os, params.config.embed);
  put<std::int32_t>(os, params.config.heads);
  put<std::int32_t>(os, params.config.hidden);
  const auto flat = params.flat();
  put<std::uint64_t>(os, flat.size());
  for (const Matrix* m : flat) {
    put<std::int64_t>(os, m->rows());
    put<std::int64_t>(os, m->cols());
    os.write(reinterpret_cast<const char*>(m->data()), static_cast<std::streamsize>(sizeof(double) * m->size()));
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

GatParameters load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw ModelFormatError("not a model checkpoint (bad header)");
  const auto version = get<std::uint8_t>(is);
  if (version != kModelFormatVersion)
    throw ModelFormatError("unsupported model format version " + std::to_string(version) + " (expected " +
                           std::to_string(kModelFormatVersion) + ")");
  GatConfig cfg;
  cfg.embed = get<std::int32_t>(is);
  cfg.heads = get<std::int32_t>(is);
  cfg.hidden = get<std::int32_t>(is);
  if (cfg.embed < 1 || cfg.heads < 1 || cfg.hidden < 1 || cfg.embed > (1 << 16) || cfg.heads > (1 << 12) ||
      cfg.hidden > (1 << 16))
    throw ModelFormatError("model header has invalid sizes");
  GatParameters p = shaped_parameters(cfg);
  const auto flat = p.flat();
  if (get<std::uint64_t>(is) != flat.size()) throw ModelFormatError("model tensor count does not match its header");
  for (Matrix* m : flat) {
    const auto rows = get<std::int64_t>(is);
    const auto cols = get<std::int64_t>(is);
    if (rows != m->rows() || cols != m->cols()) throw ModelFormatError("model tensor shape does not match its header");
    if (!is.read(reinterpret_cast<char*>(m->data()), static_cast<std::streamsize>(sizeof(double) * m->size())))
      throw ModelFormatError("model file is truncated");
  }
  if (is.peek() != std::char_traits<char>::eof()) throw ModelFormatError("trailing bytes after model data");
  return p;
}

}  // namespace bdlab
