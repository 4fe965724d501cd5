#include "bdlab/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "bdlab/bnb.hpp"
#include "bdlab/lp_simplex.hpp"
#include "bdlab/parallel.hpp"
#include "bdlab/rng.hpp"
#include "json.hpp"

namespace bdlab {

using nlohmann::json;

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

json matrix_rows(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix rows_matrix(const json& rows, Eigen::Index cols) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != static_cast<std::size_t>(cols)) throw std::runtime_error("dataset: feature row width mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  os << text;
  if (!os) throw std::runtime_error("failed writing " + path.string());
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<fs::path> list_instances(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".bdmilp") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> generate_instances(const GenParams& params, int count, std::uint64_t seed,
                                         const fs::path& dir, int workers) {
  if (count < 0) throw std::invalid_argument("generate: negative count");
  validate_config({params, seed});
  fs::create_directories(dir);
  std::vector<fs::path> paths(static_cast<std::size_t>(count));
  parallel_for(paths.size(), workers, [&](std::size_t i) {
    const MilpInstance inst = generate({params, seed + i});
    paths[i] = dir / (inst.name + ".bdmilp");
    write_instance(inst, paths[i]);
  });
  return paths;
}

std::string record_to_json(const DatasetRecord& r) {
  json edges = json::array();
  for (int e = 0; e < r.graph.num_edges(); ++e)
    edges.push_back({r.graph.edge_cons[static_cast<std::size_t>(e)], r.graph.edge_var[static_cast<std::size_t>(e)]});
  json edge_feats = json::array();
  for (Eigen::Index e = 0; e < r.graph.edge_feats.rows(); ++e) edge_feats.push_back(r.graph.edge_feats(e, 0));
  json mask = json::array();
  for (bool b : r.graph.binary_mask) mask.push_back(b ? 1 : 0);
  json samples = json::array();
  for (const auto& s : r.samples) {
    samples.push_back({{"backdoor", s.backdoor.vars},
                       {"effort", s.effort},
                       {"baseline", r.baseline},
                       {"tree_weight", s.tree_weight},
                       {"label", to_string(s.label)}});
  }
  json j = {{"instance", r.instance},
            {"baseline", r.baseline},
            {"graph",
             {{"var_feats", matrix_rows(r.graph.var_feats)},
              {"cons_feats", matrix_rows(r.graph.cons_feats)},
              {"edges", std::move(edges)},
              {"edge_feats", std::move(edge_feats)},
              {"binary_mask", std::move(mask)}}},
            {"samples", std::move(samples)}};
  return j.dump();
}

DatasetRecord record_from_json(const std::string& line) {
  const json j = json::parse(line);
  DatasetRecord r;
  r.instance = j.at("instance").get<std::string>();
  r.baseline = j.at("baseline").get<std::int64_t>();
  const json& g = j.at("graph");
  r.graph.var_feats = rows_matrix(g.at("var_feats"), kVarFeatures);
  r.graph.cons_feats = rows_matrix(g.at("cons_feats"), kConsFeatures);
  for (const auto& e : g.at("edges")) {
    r.graph.edge_cons.push_back(e.at(0).get<int>());
    r.graph.edge_var.push_back(e.at(1).get<int>());
  }
  const json& ef = g.at("edge_feats");
  r.graph.edge_feats.resize(static_cast<Eigen::Index>(ef.size()), 1);
  for (std::size_t e = 0; e < ef.size(); ++e) r.graph.edge_feats(static_cast<Eigen::Index>(e), 0) = ef[e].get<double>();
  for (const auto& b : g.at("binary_mask")) r.graph.binary_mask.push_back(b.get<int>() != 0);
  validate_graph(r.graph);
  for (const auto& s : j.at("samples")) {
    DatasetSample d;
    d.backdoor.vars = s.at("backdoor").get<std::vector<int>>();
    d.effort = s.at("effort").get<std::int64_t>();
    d.tree_weight = s.at("tree_weight").get<double>();
    const auto label = s.at("label").get<std::string>();
    if (label != "positive" && label != "negative") throw std::runtime_error("dataset: unknown label '" + label + "'");
    d.label = label == "positive" ? SampleLabel::kPositive : SampleLabel::kNegative;
    r.samples.push_back(std::move(d));
  }
  return r;
}

CollectOutcome collect_instance(const fs::path& file, const CollectConfig& cfg) {
  CollectOutcome out;
  out.instance = file.stem().string();
  try {
    const MilpInstance inst = read_instance(file);
    out.instance = inst.name;
    const int nb = static_cast<int>(inst.binary_set.size());
    if (nb == 0 || cfg.K > nb) {
      out.status = "skip";
      out.reason = "K exceeds the number of binary variables";
      return out;
    }
    const LpSolution root = solve_lp(lp_relaxation(inst));
    if (root.status != LpStatus::kOptimal) {
      out.status = "skip";
      out.reason = std::string("root LP is ") + to_string(root.status);
      return out;
    }
    const std::uint64_t seed = CounterRng(cfg.seed).derive(fnv1a(inst.name)).next_u64();

    std::vector<Backdoor> candidates;
    std::map<Backdoor, double> weights;
    if (cfg.use_sampling) {
      std::set<Backdoor> seen;
      for (auto& b : biased_sample(inst, root, cfg.K, cfg.top_k, seed))
        if (seen.insert(b).second) candidates.push_back(std::move(b));
    } else {
      MctsConfig mc;
      mc.K = cfg.K;
      mc.iteration_budget = cfg.budget;
      mc.probe_node_limit = cfg.probe_node_limit;
      mc.top_k = cfg.top_k;
      mc.seed = seed;
      for (auto& s : mcts_search(inst, root, mc).ranked) {
        weights[s.backdoor] = s.tree_weight;
        candidates.push_back(std::move(s.backdoor));
      }
    }

    LabelConfig lc;
    lc.p = cfg.p;
    lc.q = cfg.q;
    lc.node_limit = cfg.node_limit;
    const LabelResult labels = label_samples(inst, candidates, lc);
    if (labels.skipped) {
      out.status = "skip";
      const bool any_better = std::any_of(labels.efforts.begin(), labels.efforts.end(),
                                          [&](std::int64_t e) { return e < labels.baseline_effort; });
      out.reason = any_better ? "no candidate is worse than the baseline" : "no candidate beats the baseline";
      return out;
    }

    DatasetRecord rec;
    rec.instance = inst.name;
    rec.baseline = labels.baseline_effort;
    rec.graph = featurize(inst, root);
    for (const auto* side : {&labels.positives, &labels.negatives}) {
      for (const auto& s : *side) {
        const auto w = weights.find(s.backdoor);
        rec.samples.push_back({s.backdoor, s.effort, w == weights.end() ? 0.0 : w->second, s.label});
      }
    }
    out.status = "ok";
    out.record = std::move(rec);
  } catch (const std::exception& e) {
    out.status = "error";
    out.reason = e.what();
  }
  return out;
}

CollectSummary collect_dataset(const std::vector<fs::path>& files, const CollectConfig& cfg, int workers,
                               const fs::path& out_jsonl) {
  std::vector<CollectOutcome> outcomes(files.size());
  parallel_for(files.size(), workers, [&](std::size_t i) { outcomes[i] = collect_instance(files[i], cfg); });
  if (out_jsonl.has_parent_path()) fs::create_directories(out_jsonl.parent_path());
  std::ofstream os(out_jsonl, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open " + out_jsonl.string() + " for writing");
  CollectSummary summary;
  for (auto& o : outcomes) {
    if (o.record) {
      os << record_to_json(*o.record) << '\n';
      ++summary.records;
      o.record.reset();
    }
    summary.outcomes.push_back(std::move(o));
  }
  if (!os) throw std::runtime_error("failed writing " + out_jsonl.string());
  return summary;
}

std::vector<DatasetRecord> read_dataset(const fs::path& jsonl) {
  std::ifstream is(jsonl);
  if (!is) throw std::runtime_error("cannot open " + jsonl.string());
  std::vector<DatasetRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(line));
    } catch (const std::exception& e) {
      throw std::runtime_error(jsonl.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<TrainSample> to_train_samples(const std::vector<DatasetRecord>& records) {
  std::vector<TrainSample> out;
  for (const auto& r : records) {
    TrainSample t;
    t.graph = r.graph;
    for (const auto& s : r.samples)
      (s.label == SampleLabel::kPositive ? t.positives : t.negatives).push_back(s.backdoor.vars);
    if (!t.positives.empty() && !t.negatives.empty()) out.push_back(std::move(t));
  }
  return out;
}

const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::kWin:
      return "WIN";
    case Outcome::kTie:
      return "TIE";
    case Outcome::kLoss:
      return "LOSS";
  }
  return "?";
}

double improvement_pct(double baseline, double method) {
  if (baseline <= 0.0) return method <= 0.0 ? 0.0 : -100.0;
  return 100.0 * (baseline - method) / baseline;
}

Outcome compare_efforts(std::int64_t baseline, std::int64_t method) {
  if (method < baseline) return Outcome::kWin;
  if (method > baseline) return Outcome::kLoss;
  return Outcome::kTie;
}

EvalRecord evaluate_instance(const GatParameters& model, const fs::path& file, const EvalConfig& cfg) {
  const MilpInstance inst = read_instance(file);
  EvalRecord rec;
  rec.instance = inst.name;

  auto t0 = std::chrono::steady_clock::now();
  const LpSolution root = solve_lp(lp_relaxation(inst));
  if (root.status != LpStatus::kOptimal)
    throw std::runtime_error(inst.name + ": root LP is " + to_string(root.status));
  rec.backdoor = greedy_select(gat_scores(model, featurize(inst, root)), inst.binary_mask(), cfg.K);
  if (cfg.wallclock) rec.overhead_seconds = seconds_since(t0);

  BnbConfig base;
  base.node_limit = cfg.node_cap;
  t0 = std::chrono::steady_clock::now();
  const SolveResult b = solve_bnb(inst, base);
  if (cfg.wallclock) rec.baseline_seconds = seconds_since(t0);

  BnbConfig with = base;
  with.priorities = backdoor_priorities(inst, rec.backdoor.vars);
  t0 = std::chrono::steady_clock::now();
  const SolveResult m = solve_bnb(inst, with);
  if (cfg.wallclock) rec.method_seconds = seconds_since(t0);

  rec.baseline = b.nodes_processed;
  rec.method = m.nodes_processed;
  rec.baseline_censored = b.status == BnbStatus::kNodeLimit;
  rec.method_censored = m.status == BnbStatus::kNodeLimit;
  rec.improvement_pct = improvement_pct(static_cast<double>(rec.baseline), static_cast<double>(rec.method));
  rec.outcome = compare_efforts(rec.baseline, rec.method);
  return rec;
}

std::vector<EvalRecord> evaluate(const GatParameters& model, const std::vector<fs::path>& files,
                                 const EvalConfig& cfg) {
  std::vector<EvalRecord> out(files.size());
  parallel_for(files.size(), cfg.workers, [&](std::size_t i) { out[i] = evaluate_instance(model, files[i], cfg); });
  return out;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of an empty set");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("percentile must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Stats summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summary of an empty set");
  Stats s;
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.p25 = percentile(values, 0.25);
  s.median = percentile(values, 0.5);
  s.p75 = percentile(values, 0.75);
  return s;
}

EvalSummary summarize(const std::vector<EvalRecord>& records) {
  if (records.empty()) throw std::invalid_argument("summary of no records");
  EvalSummary s;
  s.n = static_cast<int>(records.size());
  std::vector<double> base, meth, impr;
  for (const auto& r : records) {
    base.push_back(static_cast<double>(r.baseline));
    meth.push_back(static_cast<double>(r.method));
    impr.push_back(r.improvement_pct);
    s.wins += r.outcome == Outcome::kWin;
    s.ties += r.outcome == Outcome::kTie;
    s.losses += r.outcome == Outcome::kLoss;
    s.baseline_censored += r.baseline_censored;
    s.method_censored += r.method_censored;
  }
  s.baseline = summarize(base);
  s.method = summarize(meth);
  s.improvement = summarize(impr);
  return s;
}

std::string results_csv(const std::vector<EvalRecord>& records) {
  std::ostringstream os;
  os << "instance,baseline,method,improvement_pct,outcome,baseline_censored,method_censored\n";
  for (const auto& r : records) {
    os << r.instance << ',' << r.baseline << ',' << r.method << ',' << format_real(r.improvement_pct) << ','
       << to_string(r.outcome) << ',' << (r.baseline_censored ? 1 : 0) << ',' << (r.method_censored ? 1 : 0)
       << '\n';
  }
  return os.str();
}

std::vector<EvalRecord> read_results_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line) || line.rfind("instance,baseline,method", 0) != 0)
    throw std::runtime_error(path.string() + ": missing results header");
  std::vector<EvalRecord> out;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 7) throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected 7 columns");
    EvalRecord r;
    try {
      r.instance = cells[0];
      r.baseline = std::stoll(cells[1]);
      r.method = std::stoll(cells[2]);
      r.improvement_pct = std::stod(cells[3]);
      r.baseline_censored = cells[5] == "1";
      r.method_censored = cells[6] == "1";
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
    r.outcome = compare_efforts(r.baseline, r.method);
    if (cells[4] != to_string(r.outcome))
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": outcome disagrees with efforts");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<FinishPoint> finish_rate(const std::vector<EvalRecord>& records) {
  std::set<std::int64_t> grid;
  for (const auto& r : records) {
    if (!r.baseline_censored) grid.insert(r.baseline);
    if (!r.method_censored) grid.insert(r.method);
  }
  const double n = static_cast<double>(records.size());
  std::vector<FinishPoint> out;
  for (std::int64_t t : grid) {
    int b = 0, m = 0;
    for (const auto& r : records) {
      b += !r.baseline_censored && r.baseline <= t;
      m += !r.method_censored && r.method <= t;
    }
    out.push_back({t, b / n, m / n});
  }
  return out;
}

namespace {

std::string table_row(const char* label, double base, double method) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-8s %12.2f %12.2f (%.1f%%)\n", label, base, method, improvement_pct(base, method));
  return buf;
}

json stats_json(const Stats& s) {
  return {{"mean", s.mean}, {"std", s.std}, {"p25", s.p25}, {"median", s.median}, {"p75", s.p75}};
}

}  // namespace

void report(const std::vector<EvalRecord>& records, const fs::path& out_dir, bool with_timing) {
  if (records.empty()) throw std::invalid_argument("report: no records");
  fs::create_directories(out_dir);
  write_text(out_dir / "results.csv", results_csv(records));

  const EvalSummary s = summarize(records);
  std::ostringstream txt;
  txt << "instances " << s.n << "\n";
  txt << "effort: branch-and-bound nodes\n";
  txt << "stat         baseline       method (improvement)\n";
  txt << table_row("mean", s.baseline.mean, s.method.mean);
  txt << table_row("std", s.baseline.std, s.method.std);
  txt << table_row("p25", s.baseline.p25, s.method.p25);
  txt << table_row("median", s.baseline.median, s.method.median);
  txt << table_row("p75", s.baseline.p75, s.method.p75);
  txt << "W/T/L " << s.wins << '/' << s.ties << '/' << s.losses << "\n";
  char buf[160];
  std::snprintf(buf, sizeof buf, "per-instance improvement: mean %.2f%%, median %.2f%%\n", s.improvement.mean,
                s.improvement.median);
  txt << buf;
  txt << "censored solves: baseline " << s.baseline_censored << ", method " << s.method_censored << "\n";
  write_text(out_dir / "summary.txt", txt.str());

  const json sj = {{"instances", s.n},
                   {"baseline", stats_json(s.baseline)},
                   {"method", stats_json(s.method)},
                   {"improvement_pct", stats_json(s.improvement)},
                   {"wins", s.wins},
                   {"ties", s.ties},
                   {"losses", s.losses},
                   {"baseline_censored", s.baseline_censored},
                   {"method_censored", s.method_censored}};
  write_text(out_dir / "summary.json", sj.dump(2) + "\n");

  std::ostringstream scatter;
  scatter << "instance,baseline,improvement_pct\n";
  for (const auto& r : records) scatter << r.instance << ',' << r.baseline << ',' << format_real(r.improvement_pct) << '\n';
  write_text(out_dir / "scatter.csv", scatter.str());

  std::ostringstream finish;
  finish << "nodes,baseline_rate,method_rate\n";
  for (const auto& p : finish_rate(records))
    finish << p.nodes << ',' << format_real(p.baseline_rate) << ',' << format_real(p.method_rate) << '\n';
  write_text(out_dir / "finishrate.csv", finish.str());

  if (with_timing) {
    std::ostringstream t;
    t << "instance,baseline_seconds,method_seconds,overhead_seconds\n";
    for (const auto& r : records)
      t << r.instance << ',' << format_real(r.baseline_seconds) << ',' << format_real(r.method_seconds) << ','
        << format_real(r.overhead_seconds) << '\n';
    write_text(out_dir / "timing.csv", t.str());
  }
}

}  // namespace bdlab
