#include "bdlab/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bdlab/bnb.hpp"

namespace bdlab {

namespace {

double guard(double norm) { return norm > 0.0 ? norm : 1.0; }

}  // namespace

BipartiteGraph featurize(const MilpInstance& inst, const LpSolution& root_lp) {
  require_valid(inst);
  const auto n = static_cast<std::size_t>(inst.num_vars);
  const auto m = inst.num_rows();
  if (root_lp.status != LpStatus::kOptimal) throw std::invalid_argument("featurize: root LP is not optimal");
  if (root_lp.x.size() != n || root_lp.reduced_costs.size() != n || root_lp.at_lower.size() != n ||
      root_lp.at_upper.size() != n)
    throw std::invalid_argument("featurize: root LP does not match the instance");

  double c_norm = 0.0, bound_norm = 0.0, a_norm = 0.0, b_norm = 0.0;
  for (double c : inst.objective) c_norm = std::max(c_norm, std::abs(c));
  for (std::size_t j = 0; j < n; ++j) {
    if (std::isfinite(inst.lower[j])) bound_norm = std::max(bound_norm, std::abs(inst.lower[j]));
    if (std::isfinite(inst.upper[j])) bound_norm = std::max(bound_norm, std::abs(inst.upper[j]));
  }
  for (const auto& row : inst.rows)
    for (const auto& e : row) a_norm = std::max(a_norm, std::abs(e.coef));
  for (double b : inst.rhs) b_norm = std::max(b_norm, std::abs(b));
  c_norm = guard(c_norm);
  bound_norm = guard(bound_norm);
  a_norm = guard(a_norm);
  b_norm = guard(b_norm);

  BipartiteGraph g;
  g.binary_mask = inst.binary_mask();
  g.cons_feats = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), kConsFeatures);
  std::vector<int> col_count(n, 0);
  std::vector<double> col_abs(n, 0.0);
  const std::size_t nnz = inst.num_nonzeros();
  g.edge_feats.resize(static_cast<Eigen::Index>(nnz), kEdgeFeatures);
  g.edge_cons.reserve(nnz);
  g.edge_var.reserve(nnz);
  for (std::size_t r = 0; r < static_cast<std::size_t>(m); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    g.cons_feats(i, 0) = inst.rhs[r] / b_norm;
    g.cons_feats(i, 1) = inst.senses[r] == Sense::kLe;
    g.cons_feats(i, 2) = inst.senses[r] == Sense::kGe;
    g.cons_feats(i, 3) = inst.senses[r] == Sense::kEq;
    for (const auto& e : inst.rows[r]) {
      g.edge_feats(static_cast<Eigen::Index>(g.edge_cons.size()), 0) = e.coef / a_norm;
      g.edge_cons.push_back(static_cast<int>(r));
      g.edge_var.push_back(e.col);
      col_count[static_cast<std::size_t>(e.col)] += 1;
      col_abs[static_cast<std::size_t>(e.col)] += std::abs(e.coef);
    }
  }

  g.var_feats = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), kVarFeatures);
  for (std::size_t j = 0; j < n; ++j) {
    auto v = g.var_feats.row(static_cast<Eigen::Index>(j));
    const double lo = inst.lower[j], up = inst.upper[j], x = root_lp.x[j];
    v(kVfObjective) = inst.objective[j] / c_norm;
    v(kVfIsBinary) = g.binary_mask[j];
    v(kVfIsContinuous) = !g.binary_mask[j];
    v(kVfHasLower) = std::isfinite(lo);
    v(kVfHasUpper) = std::isfinite(up);
    v(kVfLower) = std::isfinite(lo) ? lo / bound_norm : 0.0;
    v(kVfUpper) = std::isfinite(up) ? up / bound_norm : 0.0;
    v(kVfLpValue) = x;
    v(kVfFractionality) = fractionality(x);
    v(kVfAtLower) = root_lp.at_lower[j];
    v(kVfAtUpper) = root_lp.at_upper[j];
    v(kVfReducedCost) = std::clamp(root_lp.reduced_costs[j] / c_norm, -1.0, 1.0);
    v(kVfColumnDensity) = m > 0 ? static_cast<double>(col_count[j]) / static_cast<double>(m) : 0.0;
    v(kVfMeanCoef) = col_count[j] > 0 ? col_abs[j] / col_count[j] / a_norm : 0.0;
    v(kVfHasObjective) = inst.objective[j] != 0.0;
  }
  return g;
}

void validate_graph(const BipartiteGraph& g) {
  if (g.var_feats.cols() != kVarFeatures || g.cons_feats.cols() != kConsFeatures ||
      g.edge_feats.cols() != kEdgeFeatures)
    throw std::invalid_argument("graph: feature width mismatch");
  if (g.edge_cons.size() != g.edge_var.size() || static_cast<Eigen::Index>(g.edge_cons.size()) != g.edge_feats.rows())
    throw std::invalid_argument("graph: edge list length mismatch");
  if (g.binary_mask.size() != static_cast<std::size_t>(g.var_feats.rows()))
    throw std::invalid_argument("graph: binary mask length mismatch");
  for (std::size_t e = 0; e < g.edge_cons.size(); ++e) {
    if (g.edge_cons[e] < 0 || g.edge_cons[e] >= g.num_cons() || g.edge_var[e] < 0 || g.edge_var[e] >= g.num_vars())
      throw std::invalid_argument("graph: edge endpoint out of range");
  }
  if (!g.var_feats.allFinite() || !g.cons_feats.allFinite() || !g.edge_feats.allFinite())
    throw std::invalid_argument("graph: non-finite feature");
}

}  // namespace bdlab
