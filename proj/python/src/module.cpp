// Python bindings for the bdlab library.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "bdlab/bnb.hpp"
#include "bdlab/lp_simplex.hpp"
#include "bdlab/pipeline.hpp"

namespace py = pybind11;
using namespace bdlab;

namespace {

GenParams make_params(const std::string& family, const py::dict& kw) {
  auto get = [&](const char* key, auto fallback) {
    return kw.contains(key) ? kw[key].cast<decltype(fallback)>() : fallback;
  };
  if (family == "gisp") {
    GispParams p;
    p.nodes = get("nodes", p.nodes);
    p.edge_prob = get("edge_prob", p.edge_prob);
    p.removable_frac = get("removable_frac", p.removable_frac);
    p.node_reward = get("node_reward", p.node_reward);
    p.edge_cost = get("edge_cost", p.edge_cost);
    return p;
  }
  if (family == "sc") {
    SetCoverParams p;
    p.n_elements = get("elements", p.n_elements);
    p.n_sets = get("sets", p.n_sets);
    p.density = get("density", p.density);
    return p;
  }
  if (family == "ca") {
    AuctionParams p;
    p.items = get("items", p.items);
    p.bids = get("bids", p.bids);
    return p;
  }
  if (family == "mis") {
    MisParams p;
    p.nodes = get("nodes", p.nodes);
    p.avg_degree = get("avg_degree", p.avg_degree);
    return p;
  }
  if (family == "fc") {
    FacilityParams p;
    p.facilities = get("facilities", p.facilities);
    p.customers = get("customers", p.customers);
    return p;
  }
  throw std::invalid_argument("unknown family " + family);
}

LpSolution root_lp(const MilpInstance& inst) {
  LpSolution lp = solve_lp(lp_relaxation(inst));
  if (lp.status != LpStatus::kOptimal) throw std::runtime_error("root LP is " + std::string(to_string(lp.status)));
  return lp;
}

py::dict eval_dict(const EvalRecord& r) {
  py::dict d;
  d["instance"] = r.instance;
  d["baseline"] = r.baseline;
  d["method"] = r.method;
  d["improvement_pct"] = r.improvement_pct;
  d["outcome"] = to_string(r.outcome);
  d["baseline_censored"] = r.baseline_censored;
  d["method_censored"] = r.method_censored;
  d["backdoor"] = r.backdoor.vars;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "MILP backdoor search and contrastive graph attention";

  py::class_<MilpInstance>(m, "Instance")
      .def_readonly("name", &MilpInstance::name)
      .def_readonly("num_vars", &MilpInstance::num_vars)
      .def_property_readonly("num_rows", &MilpInstance::num_rows)
      .def_property_readonly("binary_mask", &MilpInstance::binary_mask)
      .def("write", [](const MilpInstance& inst, const fs::path& p) { write_instance(inst, p); });

  m.def(
      "generate",
      [](const std::string& family, std::uint64_t seed, const py::kwargs& kw) {
        return generate({make_params(family, kw), seed});
      },
      py::arg("family"), py::arg("seed") = 0, "Generate one instance; family is gisp, sc, ca, mis or fc.");
  m.def("read_instance", &read_instance, py::arg("path"));

  m.def(
      "solve",
      [](const MilpInstance& inst, std::vector<int> priorities, std::optional<std::int64_t> node_limit) {
        BnbConfig cfg;
        cfg.priorities = std::move(priorities);
        cfg.node_limit = node_limit;
        const SolveResult r = solve_bnb(inst, cfg);
        py::dict d;
        d["status"] = to_string(r.status);
        d["objective"] = r.objective;
        d["nodes"] = r.nodes_processed;
        d["tree_weight"] = r.tree_weight;
        d["incumbent"] = r.incumbent;
        return d;
      },
      py::arg("instance"), py::arg("priorities") = std::vector<int>{}, py::arg("node_limit") = py::none());
  m.def(
      "backdoor_priorities",
      [](const MilpInstance& inst, const std::vector<int>& backdoor) { return backdoor_priorities(inst, backdoor); },
      py::arg("instance"), py::arg("backdoor"));
  m.def("tree_weight", [](const std::vector<int>& depths) { return tree_weight(depths); }, py::arg("leaf_depths"));

  m.def(
      "mcts_search",
      [](const MilpInstance& inst, int K, int budget, std::optional<std::int64_t> probe_node_limit, int top_k,
         std::uint64_t seed) {
        MctsConfig cfg;
        cfg.K = K;
        cfg.iteration_budget = budget;
        cfg.probe_node_limit = probe_node_limit;
        cfg.top_k = top_k;
        cfg.seed = seed;
        const MctsResult r = mcts_search(inst, root_lp(inst), cfg);
        py::list out;
        for (const auto& s : r.ranked) out.append(py::make_tuple(s.backdoor.vars, s.tree_weight));
        return out;
      },
      py::arg("instance"), py::arg("K"), py::arg("budget"), py::arg("probe_node_limit") = 500, py::arg("top_k") = 50,
      py::arg("seed") = 0, "Ranked (backdoor, tree_weight) pairs.");

  m.def(
      "featurize",
      [](const MilpInstance& inst) {
        const BipartiteGraph g = featurize(inst, root_lp(inst));
        py::dict d;
        d["var_feats"] = g.var_feats;
        d["cons_feats"] = g.cons_feats;
        d["edge_feats"] = g.edge_feats;
        d["edge_cons"] = g.edge_cons;
        d["edge_var"] = g.edge_var;
        return d;
      },
      py::arg("instance"));

  m.def(
      "infonce_loss",
      [](const Eigen::VectorXd& scores, const SampleSet& pos, const SampleSet& neg, double tau) {
        return infonce_loss(scores, pos, neg, tau);
      },
      py::arg("scores"), py::arg("positives"), py::arg("negatives"), py::arg("tau") = 0.07);

  py::class_<GatParameters>(m, "Model")
      .def_property_readonly("num_scalars", &GatParameters::num_scalars)
      .def("save", [](const GatParameters& p, const fs::path& path) { save_model(p, path); })
      .def("__eq__", [](const GatParameters& a, const GatParameters& b) { return a == b; });
  m.def(
      "init_model",
      [](int embed, int heads, int hidden, std::uint64_t seed) { return init_parameters({embed, heads, hidden}, seed); },
      py::arg("embed") = 64, py::arg("heads") = 8, py::arg("hidden") = 64, py::arg("seed") = 0);
  m.def("load_model", &load_model, py::arg("path"));
  m.def(
      "scores", [](const GatParameters& p, const MilpInstance& inst) { return gat_scores(p, featurize(inst, root_lp(inst))); },
      py::arg("model"), py::arg("instance"));
  m.def(
      "predict",
      [](const GatParameters& p, const MilpInstance& inst, int K) {
        return greedy_select(gat_scores(p, featurize(inst, root_lp(inst))), inst.binary_mask(), K).vars;
      },
      py::arg("model"), py::arg("instance"), py::arg("K") = 8);

  m.def(
      "collect",
      [](const std::vector<fs::path>& files, const fs::path& out, int K, int top_k, int budget,
         std::optional<std::int64_t> probe_node_limit, bool sampling, std::uint64_t seed, int workers) {
        CollectConfig cfg;
        cfg.K = K;
        cfg.top_k = top_k;
        cfg.budget = budget;
        cfg.probe_node_limit = probe_node_limit;
        cfg.use_sampling = sampling;
        cfg.seed = seed;
        py::gil_scoped_release release;
        const CollectSummary s = collect_dataset(files, cfg, workers, out);
        py::gil_scoped_acquire acquire;
        py::list outcomes;
        for (const auto& o : s.outcomes) outcomes.append(py::make_tuple(o.instance, o.status, o.reason));
        return outcomes;
      },
      py::arg("files"), py::arg("out"), py::arg("K") = 8, py::arg("top_k") = 50, py::arg("budget") = 100,
      py::arg("probe_node_limit") = 500, py::arg("sampling") = false, py::arg("seed") = 0, py::arg("workers") = 1,
      "Writes a JSONL dataset; returns (instance, status, reason) per file.");

  m.def(
      "train",
      [](const fs::path& dataset, int epochs, int batch_size, double lr, double tau, int embed, int heads, int hidden,
         std::uint64_t seed) {
        TrainConfig cfg;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.lr = lr;
        cfg.tau = tau;
        cfg.model = {embed, heads, hidden};
        cfg.seed = seed;
        const auto samples = to_train_samples(read_dataset(dataset));
        py::gil_scoped_release release;
        TrainResult r = train(samples, cfg);
        py::gil_scoped_acquire acquire;
        return py::make_tuple(std::move(r.params), r.loss_curve);
      },
      py::arg("dataset"), py::arg("epochs") = 100, py::arg("batch_size") = 32, py::arg("lr") = 5e-4,
      py::arg("tau") = 0.07, py::arg("embed") = 64, py::arg("heads") = 8, py::arg("hidden") = 64, py::arg("seed") = 0,
      "Returns (model, loss_curve).");

  m.def(
      "evaluate",
      [](const GatParameters& model, const std::vector<fs::path>& files, int K, std::optional<std::int64_t> node_cap,
         int workers) {
        EvalConfig cfg;
        cfg.K = K;
        cfg.node_cap = node_cap;
        cfg.workers = workers;
        std::vector<EvalRecord> records;
        {
          py::gil_scoped_release release;
          records = evaluate(model, files, cfg);
        }
        py::list out;
        for (const auto& r : records) out.append(eval_dict(r));
        return out;
      },
      py::arg("model"), py::arg("files"), py::arg("K") = 8, py::arg("node_cap") = py::none(), py::arg("workers") = 1);

  m.def(
      "report",
      [](const fs::path& results_csv, const fs::path& out_dir) { report(read_results_csv(results_csv), out_dir); },
      py::arg("results_csv"), py::arg("out_dir"), "Rebuild summary files from a results.csv.");
  m.def("generate_instances", [](const std::string& family, int count, std::uint64_t seed, const fs::path& dir,
                                 int workers, const py::kwargs& kw) {
    return generate_instances(make_params(family, kw), count, seed, dir, workers);
  }, py::arg("family"), py::arg("count"), py::arg("seed"), py::arg("dir"), py::arg("workers") = 1);
}
