// Candidate backdoor collection and contrastive labeling.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/lp_simplex.hpp"
#include "bdlab/milp.hpp"

namespace bdlab {

// Sorted, duplicate-free subset of the binary variables.
struct Backdoor {
  std::vector<int> vars;

  std::size_t size() const { return vars.size(); }
  auto operator<=>(const Backdoor&) const = default;
};

// Throws std::invalid_argument unless vars is sorted, unique, non-empty and
// inside I.
void validate_backdoor(const MilpInstance& inst, const Backdoor& b);

enum class SampleLabel { kPositive, kNegative };

const char* to_string(SampleLabel l);

struct LabeledSample {
  std::string instance;
  Backdoor backdoor;
  std::int64_t effort = 0;
  SampleLabel label = SampleLabel::kPositive;
  std::int64_t baseline_effort = 0;
};

// Draws `count` size-K candidates. Within a candidate, variables are drawn
// without replacement with weight fractionality + 1e-6 while fractional
// variables remain; any remaining slots are filled uniformly from the rest of
// I. Candidates may repeat.
std::vector<Backdoor> biased_sample(const MilpInstance& inst, const LpSolution& root_lp, int K,
                                    int count, std::uint64_t seed);

struct MctsConfig {
  int K = 8;
  int iteration_budget = 100;
  std::optional<std::int64_t> probe_node_limit = 500;
  int top_k = 50;
  double exploration = 1.4142135623730951;
  std::uint64_t seed = 0;
};

struct ScoredBackdoor {
  Backdoor backdoor;
  double tree_weight = 0.0;
};

struct MctsResult {
  // Distinct evaluated size-K subsets, best tree weight first (ties by
  // lexicographic variable list), truncated to top_k.
  std::vector<ScoredBackdoor> ranked;
  int iterations = 0;
  int probes = 0;  // distinct subsets probed
};

// UCT over subset-growing states. A state is an increasing list of positions
// into I; its children append one later position, so each size-K subset has
// exactly one path from the root. Rollouts complete a state with the
// fractionality-biased draw restricted to positions after its last one.
MctsResult mcts_search(const MilpInstance& inst, const LpSolution& root_lp, const MctsConfig& cfg);

// Iterations after which every node of the search tree has been expanded,
// so every size-K subset has been probed: sum_{d=1..K} C(|I|-K+d, d).
std::int64_t mcts_exhaustive_budget(int num_binaries, int K);

struct LabelConfig {
  int p = 5;
  int q = 5;
  std::optional<std::int64_t> node_limit;
  int workers = 1;
};

struct LabelResult {
  bool skipped = true;
  std::int64_t baseline_effort = 0;
  bool baseline_censored = false;
  // One entry per candidate, in candidate order.
  std::vector<std::int64_t> efforts;
  std::vector<bool> censored;
  std::vector<LabeledSample> positives;  // ascending effort
  std::vector<LabeledSample> negatives;  // descending effort
};

// Pure selection step: given efforts and the baseline, pick up to p strictly
// better (lowest first) and up to q strictly worse (highest first) candidate
// indices. Ties break by candidate index.
struct LabelSplit {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
  bool skipped() const { return positive.empty() || negative.empty(); }
};
LabelSplit split_by_effort(const std::vector<std::int64_t>& efforts, std::int64_t baseline, int p, int q);

// Solves the instance with each candidate as branching priorities and with
// default priorities, then labels via split_by_effort.
LabelResult label_samples(const MilpInstance& inst, const std::vector<Backdoor>& candidates,
                          const LabelConfig& cfg);

}  // namespace bdlab
