// bdlab command line tool. Every subcommand that writes files puts them under
// the run directory given by --out together with a manifest.json.
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "bdlab/bnb.hpp"
#include "bdlab/lp_simplex.hpp"
#include "bdlab/pipeline.hpp"
#include "json.hpp"

using json = nlohmann::ordered_json;
using namespace bdlab;

namespace {

struct Global {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string out = "run";
};

void write_manifest(const Global& g, const std::string& command, json config, json extra = json::object()) {
  json m;
  m["tool"] = "bdlab";
  m["command"] = command;
  m["seed"] = g.seed;
  m["workers"] = g.workers;
  m["config"] = std::move(config);
  for (auto& [k, v] : extra.items()) m[k] = v;
  fs::create_directories(g.out);
  std::ofstream os(fs::path(g.out) / "manifest.json");
  os << m.dump(2) << '\n';
  if (!os) throw std::runtime_error("cannot write manifest in " + g.out);
}

json optional_json(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

json real_json(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
void set_if(T& field, const std::optional<T>& v) {
  if (v) field = *v;
}

struct GenerateArgs {
  std::string family = "gisp";
  int count = 10;
  std::optional<int> nodes, elements, sets, items, bids, facilities, customers;
  std::optional<double> edge_prob, removable_frac, node_reward, edge_cost, density, avg_degree;
};

GenParams make_params(const GenerateArgs& a) {
  if (a.family == "gisp") {
    GispParams p;
    set_if(p.nodes, a.nodes);
    set_if(p.edge_prob, a.edge_prob);
    set_if(p.removable_frac, a.removable_frac);
    set_if(p.node_reward, a.node_reward);
    set_if(p.edge_cost, a.edge_cost);
    return p;
  }
  if (a.family == "sc") {
    SetCoverParams p;
    set_if(p.n_elements, a.elements);
    set_if(p.n_sets, a.sets);
    set_if(p.density, a.density);
    return p;
  }
  if (a.family == "ca") {
    AuctionParams p;
    set_if(p.items, a.items);
    set_if(p.bids, a.bids);
    return p;
  }
  if (a.family == "mis") {
    MisParams p;
    set_if(p.nodes, a.nodes);
    set_if(p.avg_degree, a.avg_degree);
    return p;
  }
  FacilityParams p;
  set_if(p.facilities, a.facilities);
  set_if(p.customers, a.customers);
  return p;
}

json params_json(const GenParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, GispParams>)
          return {{"nodes", p.nodes}, {"edge_prob", p.edge_prob}, {"removable_frac", p.removable_frac},
                  {"node_reward", p.node_reward}, {"edge_cost", p.edge_cost}};
        else if constexpr (std::is_same_v<P, SetCoverParams>)
          return {{"elements", p.n_elements}, {"sets", p.n_sets}, {"density", p.density}};
        else if constexpr (std::is_same_v<P, AuctionParams>)
          return {{"items", p.items}, {"bids", p.bids}};
        else if constexpr (std::is_same_v<P, MisParams>)
          return {{"nodes", p.nodes}, {"avg_degree", p.avg_degree}};
        else
          return {{"facilities", p.facilities}, {"customers", p.customers}};
      },
      params);
}

void run_generate(const Global& g, const GenerateArgs& a) {
  const GenParams params = make_params(a);
  validate_config({params, g.seed});
  const auto files = generate_instances(params, a.count, g.seed, g.out, g.workers);
  json list = json::array();
  for (std::size_t i = 0; i < files.size(); ++i) {
    const MilpInstance inst = read_instance(files[i]);
    list.push_back({{"file", files[i].filename().string()},
                    {"seed", g.seed + i},
                    {"n", inst.num_vars},
                    {"m", inst.num_rows()}});
  }
  write_manifest(g, "generate", {{"family", family_tag(params)}, {"params", params_json(params)}, {"count", a.count}},
                 {{"instances", list}});
  std::cout << "wrote " << files.size() << " instances to " << g.out << '\n';
}

std::vector<int> read_priorities(const fs::path& path, const MilpInstance& inst) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  const json j = json::parse(is);
  // Either a full priority vector or an object with a "backdoor" list.
  if (j.is_array()) {
    auto p = j.get<std::vector<int>>();
    if (static_cast<int>(p.size()) != inst.num_vars)
      throw std::runtime_error("priority vector length does not match the instance");
    return p;
  }
  return backdoor_priorities(inst, j.at("backdoor").get<std::vector<int>>());
}

void run_solve(const std::string& instance, const std::string& priorities, std::optional<std::int64_t> node_limit) {
  const MilpInstance inst = read_instance(instance);
  BnbConfig cfg;
  cfg.node_limit = node_limit;
  if (!priorities.empty()) cfg.priorities = read_priorities(priorities, inst);
  const SolveResult r = solve_bnb(inst, cfg);
  const json out = {{"instance", inst.name},
                    {"status", to_string(r.status)},
                    {"objective", real_json(r.objective)},
                    {"nodes", r.nodes_processed},
                    {"tree_weight", r.tree_weight}};
  std::cout << out.dump() << '\n';
}

void run_collect(const Global& g, const std::string& dir, CollectConfig cfg) {
  cfg.seed = g.seed;
  const auto files = list_instances(dir);
  const fs::path dataset = fs::path(g.out) / "dataset.jsonl";
  fs::create_directories(g.out);
  const CollectSummary s = collect_dataset(files, cfg, g.workers, dataset);
  json outcomes = json::array();
  int skips = 0, errors = 0;
  for (const auto& o : s.outcomes) {
    json e = {{"instance", o.instance}, {"status", o.status}};
    if (!o.reason.empty()) e["reason"] = o.reason;
    outcomes.push_back(e);
    skips += o.status == "skip";
    errors += o.status == "error";
    if (o.status == "error") std::cerr << "error: " << o.instance << ": " << o.reason << '\n';
  }
  write_manifest(g, "collect",
                 {{"instances", dir},
                  {"K", cfg.K},
                  {"k", cfg.top_k},
                  {"budget", cfg.budget},
                  {"probe_node_limit", optional_json(cfg.probe_node_limit)},
                  {"p", cfg.p},
                  {"q", cfg.q},
                  {"node_limit", optional_json(cfg.node_limit)},
                  {"sampling", cfg.use_sampling}},
                 {{"dataset", "dataset.jsonl"}, {"records", s.records}, {"outcomes", outcomes}});
  std::cout << s.records << " records, " << skips << " skipped, " << errors << " errors\n";
}

void run_train(const Global& g, const std::string& dataset, TrainConfig cfg) {
  cfg.seed = g.seed;
  const auto samples = to_train_samples(read_dataset(dataset));
  if (samples.empty()) throw std::runtime_error("dataset " + dataset + " has no records");
  const TrainResult r = train(samples, cfg);
  fs::create_directories(g.out);
  save_model(r.params, fs::path(g.out) / "model.ckpt");
  std::ofstream curve(fs::path(g.out) / "loss.csv");
  curve << "epoch,loss\n";
  char buf[64];
  for (std::size_t e = 0; e < r.loss_curve.size(); ++e) {
    std::snprintf(buf, sizeof buf, "%.17g", r.loss_curve[e]);
    curve << e + 1 << ',' << buf << '\n';
  }
  write_manifest(g, "train",
                 {{"dataset", dataset},
                  {"tau", cfg.tau},
                  {"lr", cfg.lr},
                  {"weight_decay", cfg.weight_decay},
                  {"batch_size", cfg.batch_size},
                  {"epochs", cfg.epochs},
                  {"embed", cfg.model.embed},
                  {"heads", cfg.model.heads},
                  {"hidden", cfg.model.hidden}},
                 {{"model", "model.ckpt"}, {"samples", samples.size()}, {"loss_curve", "loss.csv"}});
  std::cout << "trained on " << samples.size() << " instances, final loss " << r.loss_curve.back() << '\n';
}

void run_predict(const std::string& model, const std::string& instance, int K) {
  const GatParameters params = load_model(model);
  const MilpInstance inst = read_instance(instance);
  const LpSolution root = solve_lp(lp_relaxation(inst));
  if (root.status != LpStatus::kOptimal) throw std::runtime_error("root LP is " + std::string(to_string(root.status)));
  const Backdoor b = greedy_select(gat_scores(params, featurize(inst, root)), inst.binary_mask(), K);
  std::cout << json({{"instance", inst.name}, {"backdoor", b.vars}}).dump() << '\n';
}

void run_evaluate(const Global& g, const std::string& model, const std::string& dir, EvalConfig cfg) {
  cfg.workers = g.workers;
  const auto files = list_instances(dir);
  if (files.empty()) throw std::runtime_error("no .bdmilp files in " + dir);
  const auto records = evaluate(load_model(model), files, cfg);
  report(records, g.out, cfg.wallclock);
  json backdoors = json::array();
  for (const auto& r : records) backdoors.push_back({{"instance", r.instance}, {"backdoor", r.backdoor.vars}});
  write_manifest(g, "evaluate",
                 {{"model", model},
                  {"instances", dir},
                  {"K", cfg.K},
                  {"node_cap", optional_json(cfg.node_cap)},
                  {"wallclock", cfg.wallclock}},
                 {{"results", "results.csv"}, {"backdoors", backdoors}});
  const EvalSummary s = summarize(records);
  std::cout << "W/T/L " << s.wins << '/' << s.ties << '/' << s.losses << ", median improvement "
            << s.improvement.median << "%\n";
}

void run_report(const Global& g, const std::string& results) {
  const auto records = read_results_csv(results);
  report(records, g.out);
  write_manifest(g, "report", {{"results", results}});
  std::cout << "report for " << records.size() << " instances in " << g.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning MILP backdoors with contrastive graph attention"};
  app.require_subcommand(1);
  app.fallthrough();
  Global g;
  app.add_option("--seed", g.seed, "Base random seed");
  app.add_option("--workers", g.workers, "Instance-level worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out", g.out, "Run directory");

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write seeded benchmark instances");
  generate->add_option("--family", gen.family)->check(CLI::IsMember({"gisp", "sc", "ca", "mis", "fc"}));
  generate->add_option("--count", gen.count)->check(CLI::PositiveNumber);
  generate->add_option("--nodes", gen.nodes, "GISP/MIS graph size");
  generate->add_option("--edge-prob", gen.edge_prob);
  generate->add_option("--removable-frac", gen.removable_frac);
  generate->add_option("--node-reward", gen.node_reward);
  generate->add_option("--edge-cost", gen.edge_cost);
  generate->add_option("--elements", gen.elements, "Set cover rows");
  generate->add_option("--sets", gen.sets, "Set cover columns");
  generate->add_option("--density", gen.density);
  generate->add_option("--items", gen.items);
  generate->add_option("--bids", gen.bids);
  generate->add_option("--avg-degree", gen.avg_degree);
  generate->add_option("--facilities", gen.facilities);
  generate->add_option("--customers", gen.customers);

  std::string instance, priorities;
  std::optional<std::int64_t> node_limit;
  auto* solve = app.add_subcommand("solve", "Solve one instance and print the result as JSON");
  solve->add_option("--instance", instance)->required();
  solve->add_option("--priorities", priorities, "JSON priority vector or {\"backdoor\": [...]}");
  solve->add_option("--node-limit", node_limit);

  CollectConfig cc;
  std::string inst_dir;
  std::optional<std::int64_t> probe_limit;
  bool no_probe_limit = false;
  auto* collect = app.add_subcommand("collect", "Search backdoors and write a labeled dataset");
  collect->add_option("--instances", inst_dir)->required();
  collect->add_option("--k", cc.top_k, "Candidates kept per instance");
  collect->add_option("--K", cc.K, "Backdoor size");
  collect->add_option("--budget", cc.budget, "MCTS iterations");
  collect->add_option("--probe-node-limit", probe_limit);
  collect->add_flag("--no-probe-limit", no_probe_limit);
  collect->add_option("--p", cc.p, "Positives kept");
  collect->add_option("--q", cc.q, "Negatives kept");
  collect->add_option("--node-limit", cc.node_limit, "Node cap for labeling solves");
  collect->add_flag("--sampling", cc.use_sampling, "Biased LP sampling instead of MCTS");

  TrainConfig tc;
  std::string dataset;
  auto* trainc = app.add_subcommand("train", "Fit the attention model");
  trainc->add_option("--dataset", dataset)->required();
  trainc->add_option("--epochs", tc.epochs)->check(CLI::PositiveNumber);
  trainc->add_option("--batch-size", tc.batch_size)->check(CLI::PositiveNumber);
  trainc->add_option("--lr", tc.lr);
  trainc->add_option("--weight-decay", tc.weight_decay);
  trainc->add_option("--tau", tc.tau);
  trainc->add_option("--embed", tc.model.embed)->check(CLI::PositiveNumber);
  trainc->add_option("--heads", tc.model.heads)->check(CLI::PositiveNumber);
  trainc->add_option("--hidden", tc.model.hidden)->check(CLI::PositiveNumber);

  std::string model;
  int K = 8;
  auto* predict = app.add_subcommand("predict", "Print the predicted backdoor as JSON");
  predict->add_option("--model", model)->required();
  predict->add_option("--instance", instance)->required();
  predict->add_option("--K", K)->check(CLI::PositiveNumber);

  EvalConfig ec;
  auto* evaluatec = app.add_subcommand("evaluate", "Compare default and backdoor-prioritized solves");
  evaluatec->add_option("--model", model)->required();
  evaluatec->add_option("--instances", inst_dir)->required();
  evaluatec->add_option("--K", ec.K)->check(CLI::PositiveNumber);
  evaluatec->add_option("--node-cap", ec.node_cap);
  evaluatec->add_flag("--wallclock", ec.wallclock, "Also record seconds");

  std::string results;
  auto* reportc = app.add_subcommand("report", "Rebuild summaries from results.csv");
  reportc->add_option("--results", results)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) run_generate(g, gen);
    if (*solve) run_solve(instance, priorities, node_limit);
    if (*collect) {
      if (probe_limit) cc.probe_node_limit = probe_limit;
      if (no_probe_limit) cc.probe_node_limit.reset();
      run_collect(g, inst_dir, cc);
    }
    if (*trainc) run_train(g, dataset, tc);
    if (*predict) run_predict(model, instance, K);
    if (*evaluatec) run_evaluate(g, model, inst_dir, ec);
    if (*reportc) run_report(g, results);
  } catch (const std::exception& e) {
    std::cerr << "bdlab: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
