#include <cmath>
#include <fstream>
#include <sstream>

#include "bdlab/pipeline.hpp"
#include "doctest.h"

using namespace bdlab;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream is(slurp(p));
  std::string line;
  while (std::getline(is, line)) {
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

EvalRecord make_record(const std::string& name, std::int64_t base, std::int64_t method) {
  EvalRecord r;
  r.instance = name;
  r.baseline = base;
  r.method = method;
  r.improvement_pct = improvement_pct(static_cast<double>(base), static_cast<double>(method));
  r.outcome = compare_efforts(base, method);
  return r;
}

}  // namespace

TEST_CASE("statistics") {
  const auto s = summarize(std::vector<double>{1, 2, 3, 4});
  CHECK(s.mean == 2.5);
  CHECK(s.median == 2.5);
  CHECK(s.p25 == 1.75);
  CHECK(s.p75 == 3.25);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
  CHECK(summarize(std::vector<double>{7}).std == 0.0);
  CHECK(percentile({5, 1, 3}, 0.5) == 3.0);
  CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);

  CHECK(std::round(improvement_pct(633, 533) * 10) / 10 == 15.8);
  CHECK(compare_efforts(10, 9) == Outcome::kWin);
  CHECK(compare_efforts(10, 10) == Outcome::kTie);
  CHECK(compare_efforts(10, 11) == Outcome::kLoss);

  std::vector<EvalRecord> recs;
  for (int i = 0; i < 6; ++i) recs.push_back(make_record("i" + std::to_string(i), 20 + i, 10 + i));
  const auto sum = summarize(recs);
  CHECK(sum.wins == 6);
  CHECK(sum.ties == 0);
  CHECK(sum.losses == 0);
}

TEST_CASE("report files") {
  TempDir dir("bdlab_test_report");
  SUBCASE("single record") {
    report({make_record("a", 633, 533)}, dir.path);
    const auto rows = read_csv(dir.path / "results.csv");
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][0] == "instance");
    CHECK(rows[1][4] == "WIN");
  }
  SUBCASE("columns and summary recompute exactly") {
    std::vector<EvalRecord> recs{make_record("a", 10, 7), make_record("b", 30, 30), make_record("c", 15, 40),
                                 make_record("d", 9, 3)};
    recs[2].method_censored = true;
    report(recs, dir.path);
    const auto rows = read_csv(dir.path / "results.csv");
    REQUIRE(rows.size() == 5);
    std::vector<EvalRecord> back;
    for (std::size_t r = 1; r < rows.size(); ++r) {
      const double b = std::stod(rows[r][1]), m = std::stod(rows[r][2]);
      CHECK(std::stod(rows[r][3]) == improvement_pct(b, m));
      back.push_back(make_record(rows[r][0], std::stoll(rows[r][1]), std::stoll(rows[r][2])));
      back.back().method_censored = rows[r][6] == "1";
    }
    const auto from_csv = summarize(back);
    const auto emitted = summarize(recs);
    CHECK(from_csv.method.mean == emitted.method.mean);
    CHECK(from_csv.method.std == emitted.method.std);
    CHECK(from_csv.improvement.median == emitted.improvement.median);
    CHECK(from_csv.wins == emitted.wins);
    CHECK(results_csv(read_results_csv(dir.path / "results.csv")) == results_csv(recs));

    const auto curve = read_csv(dir.path / "finishrate.csv");
    double prev_b = 0, prev_m = 0;
    for (std::size_t r = 1; r < curve.size(); ++r) {
      CHECK(std::stod(curve[r][1]) >= prev_b);
      CHECK(std::stod(curve[r][2]) >= prev_m);
      prev_b = std::stod(curve[r][1]);
      prev_m = std::stod(curve[r][2]);
    }
    CHECK(prev_b == 1.0);
    CHECK(prev_m == 0.75);  // one censored method solve
    CHECK(fs::exists(dir.path / "summary.txt"));
    CHECK(fs::exists(dir.path / "scatter.csv"));
  }
  SUBCASE("empty input") { CHECK_THROWS_AS(report({}, dir.path), std::invalid_argument); }
  SUBCASE("malformed results") {
    std::ofstream(dir.path / "bad.csv") << "instance,baseline,method,improvement_pct,outcome,baseline_censored,"
                                           "method_censored\na,10,7,30,LOSS,0,0\n";
    CHECK_THROWS_AS(read_results_csv(dir.path / "bad.csv"), std::runtime_error);
  }
}

TEST_CASE("collect and evaluate") {
  TempDir dir("bdlab_test_collect");
  const auto files = generate_instances(GispParams{.nodes = 10, .edge_prob = 0.4}, 4, 30, dir.path / "inst", 2);
  CHECK(list_instances(dir.path / "inst") == files);

  CollectConfig cfg;
  cfg.K = 3;
  cfg.top_k = 12;
  cfg.budget = 30;
  cfg.probe_node_limit = 6;
  cfg.p = 3;
  cfg.q = 3;
  cfg.seed = 5;

  SUBCASE("worker count does not change the dataset") {
    const auto s1 = collect_dataset(files, cfg, 1, dir.path / "d1.jsonl");
    const auto s3 = collect_dataset(files, cfg, 3, dir.path / "d3.jsonl");
    CHECK(slurp(dir.path / "d1.jsonl") == slurp(dir.path / "d3.jsonl"));
    CHECK(s1.outcomes.size() == 4);
    CHECK(s1.records == s3.records);
    int ok = 0;
    for (const auto& o : s1.outcomes) {
      CHECK((o.status == "ok" || o.status == "skip"));
      ok += o.status == "ok";
    }
    CHECK(ok == s1.records);

    const auto records = read_dataset(dir.path / "d1.jsonl");
    CHECK(static_cast<int>(records.size()) == s1.records);
    for (const auto& r : records) {
      CHECK(record_from_json(record_to_json(r)).graph.var_feats == r.graph.var_feats);
      for (const auto& s : r.samples) {
        if (s.label == SampleLabel::kPositive) CHECK(s.effort < r.baseline);
        if (s.label == SampleLabel::kNegative) CHECK(s.effort > r.baseline);
        CHECK(s.backdoor.size() == 3);
      }
    }
    CHECK(to_train_samples(records).size() == records.size());
  }

  SUBCASE("biased sampling variant") {
    cfg.use_sampling = true;
    const auto s = collect_dataset(files, cfg, 2, dir.path / "ds.jsonl");
    CHECK(s.outcomes.size() == 4);
    for (const auto& r : read_dataset(dir.path / "ds.jsonl"))
      for (const auto& smp : r.samples) CHECK(smp.tree_weight == 0.0);
  }

  SUBCASE("every instance skipped") {
    cfg.K = 1000;
    const auto s = collect_dataset(files, cfg, 2, dir.path / "empty.jsonl");
    CHECK(s.records == 0);
    CHECK(slurp(dir.path / "empty.jsonl").empty());
    for (const auto& o : s.outcomes) {
      CHECK(o.status == "skip");
      CHECK_FALSE(o.reason.empty());
    }
  }

  SUBCASE("unreadable instance is isolated") {
    std::ofstream(dir.path / "inst" / "broken.bdmilp") << "garbage\n";
    auto with_bad = files;
    with_bad.push_back(dir.path / "inst" / "broken.bdmilp");
    const auto s = collect_dataset(with_bad, cfg, 2, dir.path / "d.jsonl");
    CHECK(s.outcomes.back().status == "error");
  }

  SUBCASE("evaluate") {
    const auto model = init_parameters({.embed = 8, .heads = 2, .hidden = 8}, 3);
    EvalConfig ec;
    ec.K = 3;
    const auto a = evaluate(model, files, ec);
    ec.workers = 3;
    const auto b = evaluate(model, files, ec);
    REQUIRE(a.size() == 4);
    CHECK(results_csv(a) == results_csv(b));
    for (const auto& r : a) {
      CHECK(r.backdoor.size() == 3);
      CHECK(r.outcome == compare_efforts(r.baseline, r.method));
      CHECK_FALSE(r.baseline_censored);
    }
    ec.node_cap = 1;
    for (const auto& r : evaluate(model, files, ec)) CHECK(r.baseline <= 1);
  }
}
