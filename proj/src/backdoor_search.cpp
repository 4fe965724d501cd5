#include "bdlab/backdoor_search.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include "bdlab/bnb.hpp"
#include "bdlab/parallel.hpp"
#include "bdlab/rng.hpp"

namespace bdlab {

namespace {

constexpr double kWeightFloor = 1e-6;
constexpr double kFractionalTol = 1e-6;

// Draws `need` distinct entries of `pool` (variable ids) with the mixed
// weighted/uniform scheme; returns them unsorted in draw order.
std::vector<int> draw_subset(std::vector<int> pool, const std::vector<double>& x, int need,
                             CounterRng& rng) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(need));
  while (static_cast<int>(out.size()) < need) {
    double total = 0.0;
    bool any_fractional = false;
    for (int j : pool) {
      const double f = fractionality(x[static_cast<std::size_t>(j)]);
      if (f > kFractionalTol) any_fractional = true;
      total += f + kWeightFloor;
    }
    std::size_t pick;
    if (any_fractional) {
      const double u = rng.uniform01() * total;
      double acc = 0.0;
      pick = pool.size() - 1;
      for (std::size_t k = 0; k < pool.size(); ++k) {
        acc += fractionality(x[static_cast<std::size_t>(pool[k])]) + kWeightFloor;
        if (u < acc) {
          pick = k;
          break;
        }
      }
    } else {
      pick = static_cast<std::size_t>(rng.below(pool.size()));
    }
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

void require_root(const MilpInstance& inst, const LpSolution& root_lp) {
  if (root_lp.status != LpStatus::kOptimal) throw std::invalid_argument("root LP is not optimal");
  if (root_lp.x.size() != static_cast<std::size_t>(inst.num_vars))
    throw std::invalid_argument("root LP does not match the instance");
}

std::int64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::int64_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

const char* to_string(SampleLabel l) { return l == SampleLabel::kPositive ? "positive" : "negative"; }

void validate_backdoor(const MilpInstance& inst, const Backdoor& b) {
  if (b.vars.empty()) throw std::invalid_argument("backdoor is empty");
  const auto mask = inst.binary_mask();
  for (std::size_t k = 0; k < b.vars.size(); ++k) {
    const int j = b.vars[k];
    if (j < 0 || j >= inst.num_vars || !mask[static_cast<std::size_t>(j)])
      throw std::invalid_argument("backdoor variable " + std::to_string(j) + " is not binary");
    if (k > 0 && b.vars[k - 1] >= j) throw std::invalid_argument("backdoor must be sorted and unique");
  }
}

std::vector<Backdoor> biased_sample(const MilpInstance& inst, const LpSolution& root_lp, int K,
                                    int count, std::uint64_t seed) {
  require_root(inst, root_lp);
  if (K < 1 || K > static_cast<int>(inst.binary_set.size()))
    throw std::invalid_argument("biased_sample: K must lie in [1, |I|]");
  if (count < 0) throw std::invalid_argument("biased_sample: negative count");
  CounterRng rng(seed);
  std::vector<Backdoor> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    Backdoor b{draw_subset(inst.binary_set, root_lp.x, K, rng)};
    std::sort(b.vars.begin(), b.vars.end());
    out.push_back(std::move(b));
  }
  return out;
}

std::int64_t mcts_exhaustive_budget(int num_binaries, int K) {
  std::int64_t total = 0;
  for (int d = 1; d <= K; ++d) total += binomial(num_binaries - K + d, d);
  return total;
}

namespace {

struct TreeNode {
  int depth = 0;
  int last_pos = -1;          // position into I of the last added variable
  int parent = -1;
  int next_child_pos = 0;     // next position to expand
  std::vector<int> children;  // node indices, in position order
  std::int64_t visits = 0;
  double total_reward = 0.0;
  bool exhausted = false;     // every descendant down to depth K exists
};

}  // namespace

MctsResult mcts_search(const MilpInstance& inst, const LpSolution& root_lp, const MctsConfig& cfg) {
  require_root(inst, root_lp);
  const int nb = static_cast<int>(inst.binary_set.size());
  if (cfg.K < 1 || cfg.K > nb) throw std::invalid_argument("mcts_search: K must lie in [1, |I|]");
  if (cfg.iteration_budget < 1) throw std::invalid_argument("mcts_search: budget exhausted before any evaluation");
  if (cfg.top_k < 1) throw std::invalid_argument("mcts_search: top_k must be positive");

  CounterRng rng(cfg.seed);
  std::vector<TreeNode> tree(1);
  std::map<std::vector<int>, double> evaluated;

  auto prefix_positions = [&](int node) {
    std::vector<int> pos;
    for (int v = node; v != 0; v = tree[static_cast<std::size_t>(v)].parent)
      pos.push_back(tree[static_cast<std::size_t>(v)].last_pos);
    std::reverse(pos.begin(), pos.end());
    return pos;
  };
  auto max_child_pos = [&](const TreeNode& n) { return nb - (cfg.K - n.depth); };

  auto evaluate = [&](std::vector<int> vars) {
    std::sort(vars.begin(), vars.end());
    const auto it = evaluated.find(vars);
    if (it != evaluated.end()) return it->second;
    const double w = restricted_probe(inst, vars, cfg.probe_node_limit).tree_weight;
    evaluated.emplace(std::move(vars), w);
    return w;
  };

  MctsResult result;
  for (int iter = 0; iter < cfg.iteration_budget; ++iter) {
    int node = 0;
    std::vector<int> path{0};
    while (tree[static_cast<std::size_t>(node)].depth < cfg.K) {
      TreeNode& cur = tree[static_cast<std::size_t>(node)];
      if (cur.next_child_pos <= max_child_pos(cur)) {
        TreeNode child;
        child.depth = cur.depth + 1;
        child.last_pos = cur.next_child_pos;
        child.parent = node;
        child.next_child_pos = child.last_pos + 1;
        ++cur.next_child_pos;
        const int idx = static_cast<int>(tree.size());
        cur.children.push_back(idx);
        tree.push_back(child);
        node = idx;
        path.push_back(node);
        break;
      }
      // Fully expanded: UCT, unvisited children first, ties to the lowest position.
      const double log_n = std::log(static_cast<double>(std::max<std::int64_t>(cur.visits, 1)));
      int best = -1;
      double best_score = -kInf;
      for (int c : cur.children) {
        const TreeNode& ch = tree[static_cast<std::size_t>(c)];
        // Finished subtrees are skipped until the whole tree is finished.
        if (ch.exhausted && !cur.exhausted) continue;
        const double score = ch.visits == 0
                                 ? kInf
                                 : ch.total_reward / static_cast<double>(ch.visits) +
                                       cfg.exploration * std::sqrt(log_n / static_cast<double>(ch.visits));
        if (score > best_score) {
          best_score = score;
          best = c;
        }
      }
      node = best;
      path.push_back(node);
    }

    const TreeNode& leaf = tree[static_cast<std::size_t>(node)];
    std::vector<int> vars;
    for (int pos : prefix_positions(node)) vars.push_back(inst.binary_set[static_cast<std::size_t>(pos)]);
    if (leaf.depth < cfg.K) {
      std::vector<int> pool(inst.binary_set.begin() + leaf.last_pos + 1, inst.binary_set.end());
      const auto extra = draw_subset(std::move(pool), root_lp.x, cfg.K - leaf.depth, rng);
      vars.insert(vars.end(), extra.begin(), extra.end());
    }
    const double reward = evaluate(std::move(vars));
    for (auto it = path.rbegin(); it != path.rend(); ++it) {
      TreeNode& n = tree[static_cast<std::size_t>(*it)];
      n.visits += 1;
      n.total_reward += reward;
      if (n.depth == cfg.K) {
        n.exhausted = true;
      } else if (n.next_child_pos > max_child_pos(n)) {
        n.exhausted = std::all_of(n.children.begin(), n.children.end(),
                                  [&](int c) { return tree[static_cast<std::size_t>(c)].exhausted; });
      }
    }
    ++result.iterations;
  }

  result.probes = static_cast<int>(evaluated.size());
  for (const auto& [vars, w] : evaluated) result.ranked.push_back({Backdoor{vars}, w});
  std::stable_sort(result.ranked.begin(), result.ranked.end(),
                   [](const ScoredBackdoor& a, const ScoredBackdoor& b) { return a.tree_weight > b.tree_weight; });
  if (static_cast<int>(result.ranked.size()) > cfg.top_k) result.ranked.resize(static_cast<std::size_t>(cfg.top_k));
  return result;
}

LabelSplit split_by_effort(const std::vector<std::int64_t>& efforts, std::int64_t baseline, int p, int q) {
  if (p < 1 || q < 1) throw std::invalid_argument("p and q must be >= 1");
  LabelSplit split;
  std::vector<std::size_t> order(efforts.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return efforts[a] < efforts[b]; });
  for (std::size_t i : order) {
    if (efforts[i] < baseline && static_cast<int>(split.positive.size()) < p) split.positive.push_back(i);
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return efforts[a] > efforts[b]; });
  for (std::size_t i : order) {
    if (efforts[i] > baseline && static_cast<int>(split.negative.size()) < q) split.negative.push_back(i);
  }
  return split;
}

LabelResult label_samples(const MilpInstance& inst, const std::vector<Backdoor>& candidates,
                          const LabelConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("label_samples: no candidates");
  for (const auto& c : candidates) validate_backdoor(inst, c);

  LabelResult out;
  out.efforts.assign(candidates.size(), 0);
  out.censored.assign(candidates.size(), false);

  // Slot 0 is the baseline, slot i+1 candidate i.
  std::vector<SolveResult> solves(candidates.size() + 1);
  parallel_for(solves.size(), cfg.workers, [&](std::size_t i) {
    BnbConfig bc;
    bc.node_limit = cfg.node_limit;
    if (i > 0) bc.priorities = backdoor_priorities(inst, candidates[i - 1].vars);
    solves[i] = solve_bnb(inst, bc);
  });
  out.baseline_effort = solves[0].nodes_processed;
  out.baseline_censored = solves[0].status == BnbStatus::kNodeLimit;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    out.efforts[i] = solves[i + 1].nodes_processed;
    out.censored[i] = solves[i + 1].status == BnbStatus::kNodeLimit;
  }

  const LabelSplit split = split_by_effort(out.efforts, out.baseline_effort, cfg.p, cfg.q);
  out.skipped = split.skipped();
  if (out.skipped) return out;
  auto make = [&](std::size_t i, SampleLabel label) {
    return LabeledSample{inst.name, candidates[i], out.efforts[i], label, out.baseline_effort};
  };
  for (std::size_t i : split.positive) out.positives.push_back(make(i, SampleLabel::kPositive));
  for (std::size_t i : split.negative) out.negatives.push_back(make(i, SampleLabel::kNegative));
  return out;
}

}  // namespace bdlab
