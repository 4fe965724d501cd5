// End-to-end orchestration: instance sets, dataset collection, evaluation and
// reporting. Effort is always the branch-and-bound node count.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "bdlab/backdoor_search.hpp"
#include "bdlab/featurizer.hpp"
#include "bdlab/generators.hpp"
#include "bdlab/gnn.hpp"

namespace bdlab {

namespace fs = std::filesystem;

// Sorted *.bdmilp files directly inside dir.
std::vector<fs::path> list_instances(const fs::path& dir);

// Writes `count` instances with seeds seed, seed+1, ... as <name>.bdmilp.
std::vector<fs::path> generate_instances(const GenParams& params, int count, std::uint64_t seed,
                                         const fs::path& dir, int workers);

struct CollectConfig {
  int K = 8;
  int top_k = 50;  // MCTS candidates kept, or biased samples drawn
  int budget = 100;
  std::optional<std::int64_t> probe_node_limit = 500;
  int p = 5;
  int q = 5;
  std::optional<std::int64_t> node_limit;
  bool use_sampling = false;  // biased sampling instead of MCTS
  std::uint64_t seed = 0;
};

struct DatasetSample {
  Backdoor backdoor;
  std::int64_t effort = 0;
  double tree_weight = 0.0;  // 0 for sampled candidates
  SampleLabel label = SampleLabel::kPositive;
};

struct DatasetRecord {
  std::string instance;
  std::int64_t baseline = 0;
  BipartiteGraph graph;
  std::vector<DatasetSample> samples;
};

std::string record_to_json(const DatasetRecord& r);
DatasetRecord record_from_json(const std::string& line);

struct CollectOutcome {
  std::string instance;
  std::string status;  // "ok", "skip" or "error"
  std::string reason;
  std::optional<DatasetRecord> record;
};

// One instance: root LP, candidates, labels, features. Never throws for
// instance-level failures; they come back as status "error".
CollectOutcome collect_instance(const fs::path& file, const CollectConfig& cfg);

struct CollectSummary {
  std::vector<CollectOutcome> outcomes;  // instance order; records dropped
  int records = 0;
};

// Runs collect_instance over every file (instance-parallel) and writes one
// JSONL line per kept instance, in input order.
CollectSummary collect_dataset(const std::vector<fs::path>& files, const CollectConfig& cfg, int workers,
                               const fs::path& out_jsonl);

std::vector<DatasetRecord> read_dataset(const fs::path& jsonl);
std::vector<TrainSample> to_train_samples(const std::vector<DatasetRecord>& records);

enum class Outcome { kWin, kTie, kLoss };
const char* to_string(Outcome o);

struct EvalRecord {
  std::string instance;
  std::int64_t baseline = 0;
  std::int64_t method = 0;
  double improvement_pct = 0.0;
  Outcome outcome = Outcome::kTie;
  bool baseline_censored = false;
  bool method_censored = false;
  Backdoor backdoor;
  // Filled only when wall-clock timing is requested.
  double baseline_seconds = 0.0;
  double method_seconds = 0.0;
  double overhead_seconds = 0.0;  // featurize + scoring
};

// 100 * (baseline - method) / baseline. A zero baseline gives 0 when the
// method is also 0 and -100 otherwise.
double improvement_pct(double baseline, double method);
Outcome compare_efforts(std::int64_t baseline, std::int64_t method);

struct EvalConfig {
  int K = 8;
  std::optional<std::int64_t> node_cap;
  int workers = 1;
  bool wallclock = false;
};

EvalRecord evaluate_instance(const GatParameters& model, const fs::path& file, const EvalConfig& cfg);
std::vector<EvalRecord> evaluate(const GatParameters& model, const std::vector<fs::path>& files,
                                 const EvalConfig& cfg);

// Sample standard deviation (n - 1); percentiles interpolate linearly between
// order statistics at position p * (n - 1).
struct Stats {
  double mean = 0.0, std = 0.0, p25 = 0.0, median = 0.0, p75 = 0.0;
};
double percentile(std::vector<double> values, double p);
Stats summarize(const std::vector<double>& values);

struct EvalSummary {
  int n = 0;
  Stats baseline, method, improvement;
  int wins = 0, ties = 0, losses = 0;
  int baseline_censored = 0, method_censored = 0;
};
EvalSummary summarize(const std::vector<EvalRecord>& records);

// Writes results.csv, summary.txt, summary.json, scatter.csv, finishrate.csv
// (and timing.csv when any record carries timings). Throws on empty input.
void report(const std::vector<EvalRecord>& records, const fs::path& out_dir, bool with_timing = false);

// Text of results.csv.
std::string results_csv(const std::vector<EvalRecord>& records);

// Parses results.csv back into records (no backdoors or timings). Throws
// std::runtime_error on a malformed file.
std::vector<EvalRecord> read_results_csv(const fs::path& path);

// Finish-rate curve: for every distinct effort value t, the fraction of
// uncensored solves finished within t nodes.
struct FinishPoint {
  std::int64_t nodes;
  double baseline_rate;
  double method_rate;
};
std::vector<FinishPoint> finish_rate(const std::vector<EvalRecord>& records);

}  // namespace bdlab
