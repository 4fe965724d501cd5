#include "bdlab/generators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "bdlab/rng.hpp"

namespace bdlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

MilpInstance binary_instance(std::string name, int n) {
  MilpInstance inst;
  inst.name = std::move(name);
  inst.num_vars = n;
  inst.objective.assign(static_cast<std::size_t>(n), 0.0);
  inst.lower.assign(static_cast<std::size_t>(n), 0.0);
  inst.upper.assign(static_cast<std::size_t>(n), 1.0);
  inst.binary_set.resize(static_cast<std::size_t>(n));
  std::iota(inst.binary_set.begin(), inst.binary_set.end(), 0);
  return inst;
}

void add_row(MilpInstance& inst, SparseRow row, Sense sense, double rhs) {
  inst.rows.push_back(std::move(row));
  inst.senses.push_back(sense);
  inst.rhs.push_back(rhs);
}

std::string seed_suffix(std::uint64_t seed) { return "_s" + std::to_string(seed); }

}  // namespace

std::string family_tag(const GenParams& params) {
  return std::visit(Overloaded{
                        [](const GispParams&) { return std::string("GISP"); },
                        [](const SetCoverParams&) { return std::string("SC"); },
                        [](const AuctionParams&) { return std::string("CA"); },
                        [](const MisParams&) { return std::string("MIS"); },
                        [](const FacilityParams&) { return std::string("FC"); },
                    },
                    params);
}

void validate_config(const GenConfig& cfg) {
  std::visit(Overloaded{
                 [](const GispParams& p) {
                   require(p.nodes >= 2, "gisp: nodes must be >= 2");
                   require(is_probability(p.edge_prob), "gisp: edge_prob outside [0,1]");
                   require(is_probability(p.removable_frac), "gisp: removable_frac outside [0,1]");
                   require(p.node_reward > 0.0 && p.edge_cost > 0.0,
                           "gisp: reward and cost must be positive");
                 },
                 [](const SetCoverParams& p) {
                   require(p.n_elements >= 1 && p.n_sets >= 1, "sc: counts must be positive");
                   require(p.density > 0.0 && p.density <= 1.0, "sc: density outside (0,1]");
                 },
                 [](const AuctionParams& p) {
                   require(p.items >= 1 && p.bids >= 1, "ca: counts must be positive");
                 },
                 [](const MisParams& p) {
                   require(p.nodes >= 2, "mis: nodes must be >= 2");
                   require(p.avg_degree > 0.0 && p.avg_degree < p.nodes,
                           "mis: avg_degree must lie in (0, nodes)");
                 },
                 [](const FacilityParams& p) {
                   require(p.facilities >= 1 && p.customers >= 1, "fc: counts must be positive");
                 },
             },
             cfg.params);
}

// Draw order: for i < j lexicographically, one Bernoulli(edge_prob) draw; if
// the edge exists, one Bernoulli(removable_frac) draw. Variables are x_0..x_{V-1}
// followed by y_e for removable edges in edge order; rows follow edge order.
MilpInstance gen_gisp(const GispParams& p, std::uint64_t seed) {
  validate_config({p, seed});
  CounterRng rng(seed);
  struct Edge {
    int u, v;
    bool removable;
  };
  std::vector<Edge> edges;
  for (int i = 0; i < p.nodes; ++i) {
    for (int j = i + 1; j < p.nodes; ++j) {
      if (!rng.bernoulli(p.edge_prob)) continue;
      edges.push_back({i, j, rng.bernoulli(p.removable_frac)});
    }
  }
  const auto n_removable =
      static_cast<int>(std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.removable; }));
  MilpInstance inst =
      binary_instance("gisp_n" + std::to_string(p.nodes) + seed_suffix(seed), p.nodes + n_removable);
  for (int i = 0; i < p.nodes; ++i) inst.objective[static_cast<std::size_t>(i)] = -p.node_reward;
  int next_y = p.nodes;
  for (const auto& e : edges) {
    if (e.removable) {
      inst.objective[static_cast<std::size_t>(next_y)] = p.edge_cost;
      add_row(inst, {{e.u, 1.0}, {e.v, 1.0}, {next_y, -1.0}}, Sense::kLe, 1.0);
      ++next_y;
    } else {
      add_row(inst, {{e.u, 1.0}, {e.v, 1.0}}, Sense::kLe, 1.0);
    }
  }
  return inst;
}

// Draw order: element-major; for each element, one Bernoulli(density) per set
// in index order, then (only if the element is uncovered) one below(n_sets)
// draw for the patch set.
MilpInstance gen_setcover(const SetCoverParams& p, std::uint64_t seed) {
  validate_config({p, seed});
  CounterRng rng(seed);
  MilpInstance inst = binary_instance("sc_e" + std::to_string(p.n_elements) + "_s" +
                                          std::to_string(p.n_sets) + seed_suffix(seed),
                                      p.n_sets);
  std::fill(inst.objective.begin(), inst.objective.end(), 1.0);
  for (int e = 0; e < p.n_elements; ++e) {
    SparseRow row;
    for (int s = 0; s < p.n_sets; ++s) {
      if (rng.bernoulli(p.density)) row.push_back({s, 1.0});
    }
    if (row.empty()) row.push_back({static_cast<int>(rng.below(static_cast<std::uint64_t>(p.n_sets))), 1.0});
    add_row(inst, std::move(row), Sense::kGe, 1.0);
  }
  return inst;
}

// Draw order: one uniform(1,100) base value per item; then per bid:
// (items-1) Bernoulli(3/items) draws for the bundle size, one below() draw per
// bundle slot (partial Fisher-Yates over the item list), one uniform01 for the
// price noise. Rows are emitted per item in index order, skipping items no bid
// contains.
MilpInstance gen_combinatorial_auction(const AuctionParams& p, std::uint64_t seed) {
  validate_config({p, seed});
  CounterRng rng(seed);
  std::vector<double> base(static_cast<std::size_t>(p.items));
  for (auto& v : base) v = rng.uniform(1.0, 100.0);

  MilpInstance inst = binary_instance(
      "ca_i" + std::to_string(p.items) + "_b" + std::to_string(p.bids) + seed_suffix(seed), p.bids);
  std::vector<std::vector<int>> bids_of_item(static_cast<std::size_t>(p.items));
  const double q = std::min(1.0, 3.0 / p.items);
  std::vector<int> pool(static_cast<std::size_t>(p.items));
  for (int b = 0; b < p.bids; ++b) {
    int size = 1;
    for (int t = 0; t + 1 < p.items; ++t) size += rng.bernoulli(q) ? 1 : 0;
    std::iota(pool.begin(), pool.end(), 0);
    double value = 0.0;
    for (int k = 0; k < size; ++k) {
      const auto pick = static_cast<std::size_t>(k) +
                        static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(p.items - k)));
      std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
      const int item = pool[static_cast<std::size_t>(k)];
      value += base[static_cast<std::size_t>(item)];
      bids_of_item[static_cast<std::size_t>(item)].push_back(b);
    }
    const double price = value + 0.1 * value * rng.uniform01();
    inst.objective[static_cast<std::size_t>(b)] = -price;
  }
  for (const auto& bids : bids_of_item) {
    if (bids.empty()) continue;
    SparseRow row;
    for (int b : bids) row.push_back({b, 1.0});
    add_row(inst, std::move(row), Sense::kLe, 1.0);
  }
  return inst;
}

// Draw order: one Bernoulli(avg_degree/(nodes-1)) per pair i < j, lexicographic.
MilpInstance gen_mis(const MisParams& p, std::uint64_t seed) {
  validate_config({p, seed});
  CounterRng rng(seed);
  const double prob = p.avg_degree / (p.nodes - 1);
  MilpInstance inst = binary_instance("mis_n" + std::to_string(p.nodes) + seed_suffix(seed), p.nodes);
  std::fill(inst.objective.begin(), inst.objective.end(), -1.0);
  for (int i = 0; i < p.nodes; ++i) {
    for (int j = i + 1; j < p.nodes; ++j) {
      if (rng.bernoulli(prob)) add_row(inst, {{i, 1.0}, {j, 1.0}}, Sense::kLe, 1.0);
    }
  }
  return inst;
}

// Draw order: facility points (x, y) for each facility, customer points, then
// fixed costs uniform(1,100), demands uniform(5,35), raw capacities
// uniform(10,160). Capacities are scaled up when needed so that total capacity
// is at least twice total demand.
// Variables: y_0..y_{F-1} (binary) then x_ij at F + i*C + j (continuous, [0,1]).
// Rows: C assignment equalities, F*C linking rows x_ij - y_i <= 0, F capacity rows.
MilpInstance gen_facility_location(const FacilityParams& p, std::uint64_t seed) {
  validate_config({p, seed});
  CounterRng rng(seed);
  const int nf = p.facilities;
  const int nc = p.customers;
  const auto ufac = static_cast<std::size_t>(nf);
  const auto ucus = static_cast<std::size_t>(nc);
  std::vector<std::pair<double, double>> fac(ufac), cus(ucus);
  for (auto& pt : fac) {
    pt.first = rng.uniform01();
    pt.second = rng.uniform01();
  }
  for (auto& pt : cus) {
    pt.first = rng.uniform01();
    pt.second = rng.uniform01();
  }
  std::vector<double> fixed(ufac), demand(ucus), capacity(ufac);
  for (auto& f : fixed) f = rng.uniform(1.0, 100.0);
  for (auto& d : demand) d = rng.uniform(5.0, 35.0);
  for (auto& s : capacity) s = rng.uniform(10.0, 160.0);
  const double total_demand = std::accumulate(demand.begin(), demand.end(), 0.0);
  const double total_capacity = std::accumulate(capacity.begin(), capacity.end(), 0.0);
  if (total_capacity < 2.0 * total_demand) {
    const double scale = 2.0 * total_demand / total_capacity;
    for (auto& s : capacity) s *= scale;
  }

  MilpInstance inst;
  inst.name = "fc_f" + std::to_string(nf) + "_c" + std::to_string(nc) + seed_suffix(seed);
  inst.num_vars = nf + nf * nc;
  const auto n = static_cast<std::size_t>(inst.num_vars);
  inst.objective.assign(n, 0.0);
  inst.lower.assign(n, 0.0);
  inst.upper.assign(n, 1.0);
  auto xvar = [nf, nc](int i, int j) { return nf + i * nc + j; };
  for (int i = 0; i < nf; ++i) {
    inst.binary_set.push_back(i);
    inst.objective[static_cast<std::size_t>(i)] = fixed[static_cast<std::size_t>(i)];
    for (int j = 0; j < nc; ++j) {
      const double dx = fac[static_cast<std::size_t>(i)].first - cus[static_cast<std::size_t>(j)].first;
      const double dy = fac[static_cast<std::size_t>(i)].second - cus[static_cast<std::size_t>(j)].second;
      inst.objective[static_cast<std::size_t>(xvar(i, j))] = 10.0 * std::sqrt(dx * dx + dy * dy);
    }
  }
  for (int j = 0; j < nc; ++j) {
    SparseRow row;
    for (int i = 0; i < nf; ++i) row.push_back({xvar(i, j), 1.0});
    add_row(inst, std::move(row), Sense::kEq, 1.0);
  }
  for (int i = 0; i < nf; ++i) {
    for (int j = 0; j < nc; ++j) add_row(inst, {{xvar(i, j), 1.0}, {i, -1.0}}, Sense::kLe, 0.0);
  }
  for (int i = 0; i < nf; ++i) {
    SparseRow row;
    for (int j = 0; j < nc; ++j) row.push_back({xvar(i, j), demand[static_cast<std::size_t>(j)]});
    row.push_back({i, -capacity[static_cast<std::size_t>(i)]});
    add_row(inst, std::move(row), Sense::kLe, 0.0);
  }
  return inst;
}

MilpInstance generate(const GenConfig& cfg) {
  return std::visit(Overloaded{
                        [&](const GispParams& p) { return gen_gisp(p, cfg.seed); },
                        [&](const SetCoverParams& p) { return gen_setcover(p, cfg.seed); },
                        [&](const AuctionParams& p) { return gen_combinatorial_auction(p, cfg.seed); },
                        [&](const MisParams& p) { return gen_mis(p, cfg.seed); },
                        [&](const FacilityParams& p) { return gen_facility_location(p, cfg.seed); },
                    },
                    cfg.params);
}

}  // namespace bdlab
