#include "bdlab/milp.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace bdlab {

std::size_t MilpInstance::num_nonzeros() const {
  std::size_t nnz = 0;
  for (const auto& row : rows) nnz += row.size();
  return nnz;
}

std::vector<bool> MilpInstance::binary_mask() const {
  std::vector<bool> mask(static_cast<std::size_t>(std::max(num_vars, 0)), false);
  for (int i : binary_set) {
    if (i >= 0 && i < num_vars) mask[static_cast<std::size_t>(i)] = true;
  }
  return mask;
}

namespace {

void check_structure(int n, const std::vector<double>& objective,
                     const std::vector<SparseRow>& rows,
                     const std::vector<double>& rhs,
                     const std::vector<Sense>& senses,
                     const std::vector<double>& lower,
                     const std::vector<double>& upper,
                     std::vector<std::string>& out) {
  if (n < 0) out.push_back("negative variable count");
  const auto un = static_cast<std::size_t>(std::max(n, 0));
  if (objective.size() != un) out.push_back("objective length differs from num_vars");
  if (lower.size() != un || upper.size() != un) out.push_back("bound vectors differ from num_vars");
  if (rhs.size() != rows.size() || senses.size() != rows.size())
    out.push_back("rhs/senses/rows length mismatch");
  for (std::size_t j = 0; j < objective.size(); ++j) {
    if (!std::isfinite(objective[j]))
      out.push_back("column " + std::to_string(j) + ": non-finite objective");
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::unordered_set<int> seen;
    for (const auto& e : rows[r]) {
      if (e.col < 0 || e.col >= n) {
        out.push_back("row " + std::to_string(r) + ": column out of range (" +
                      std::to_string(e.col) + ")");
        continue;
      }
      if (!seen.insert(e.col).second)
        out.push_back("row " + std::to_string(r) + ": duplicate column " + std::to_string(e.col));
      if (!std::isfinite(e.coef))
        out.push_back("row " + std::to_string(r) + ": non-finite coefficient");
    }
    if (r < rhs.size() && !std::isfinite(rhs[r]))
      out.push_back("row " + std::to_string(r) + ": non-finite rhs");
  }
  const std::size_t nb = std::min(lower.size(), upper.size());
  for (std::size_t j = 0; j < nb; ++j) {
    if (std::isnan(lower[j]) || std::isnan(upper[j]) || lower[j] > upper[j] ||
        lower[j] == kInf || upper[j] == -kInf)
      out.push_back("column " + std::to_string(j) + ": invalid bounds");
  }
}

}  // namespace

ValidationReport validate_instance(const MilpInstance& inst) {
  ValidationReport report;
  check_structure(inst.num_vars, inst.objective, inst.rows, inst.rhs, inst.senses, inst.lower,
                  inst.upper, report.violations);
  if (inst.binary_set.empty()) report.violations.push_back("binary set is empty");
  for (std::size_t k = 0; k < inst.binary_set.size(); ++k) {
    const int i = inst.binary_set[k];
    if (k > 0 && inst.binary_set[k - 1] >= i) {
      report.violations.push_back("binary set not strictly increasing at position " +
                                  std::to_string(k));
    }
    if (i < 0 || i >= inst.num_vars) {
      report.violations.push_back("binary index out of range (" + std::to_string(i) + ")");
      continue;
    }
    const auto ui = static_cast<std::size_t>(i);
    if (ui < inst.lower.size() && ui < inst.upper.size() &&
        (inst.lower[ui] != 0.0 || inst.upper[ui] != 1.0)) {
      report.violations.push_back("column " + std::to_string(i) + ": binary bound must be [0,1]");
    }
  }
  return report;
}

ValidationReport validate_lp(const LpProblem& lp) {
  ValidationReport report;
  check_structure(lp.num_vars, lp.objective, lp.rows, lp.rhs, lp.senses, lp.lower, lp.upper,
                  report.violations);
  return report;
}

void require_valid(const MilpInstance& inst) {
  const auto report = validate_instance(inst);
  if (!report.ok()) throw InvalidInstance("invalid instance '" + inst.name + "': " + report.violations.front());
}

LpProblem lp_relaxation(const MilpInstance& inst) {
  require_valid(inst);
  LpProblem lp;
  lp.num_vars = inst.num_vars;
  lp.objective = inst.objective;
  lp.rows = inst.rows;
  lp.rhs = inst.rhs;
  lp.senses = inst.senses;
  lp.lower = inst.lower;
  lp.upper = inst.upper;
  return lp;
}

MilpInstance wrap_lp(const LpProblem& lp, std::string name) {
  MilpInstance inst;
  inst.name = std::move(name);
  inst.num_vars = lp.num_vars;
  inst.objective = lp.objective;
  inst.rows = lp.rows;
  inst.rhs = lp.rhs;
  inst.senses = lp.senses;
  inst.lower = lp.lower;
  inst.upper = lp.upper;
  return inst;
}

double row_activity(const SparseRow& row, const std::vector<double>& x) {
  double acc = 0.0;
  for (const auto& e : row) acc += e.coef * x[static_cast<std::size_t>(e.col)];
  return acc;
}

double max_violation(const LpProblem& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (int j = 0; j < lp.num_vars; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    worst = std::max({worst, lp.lower[uj] - x[uj], x[uj] - lp.upper[uj]});
  }
  for (int r = 0; r < lp.num_rows(); ++r) {
    const auto ur = static_cast<std::size_t>(r);
    const double act = row_activity(lp.rows[ur], x);
    const double b = lp.rhs[ur];
    switch (lp.senses[ur]) {
      case Sense::kLe: worst = std::max(worst, act - b); break;
      case Sense::kGe: worst = std::max(worst, b - act); break;
      case Sense::kEq: worst = std::max(worst, std::abs(act - b)); break;
    }
  }
  return worst;
}

const char* sense_token(Sense s) {
  switch (s) {
    case Sense::kLe: return "<=";
    case Sense::kGe: return ">=";
    case Sense::kEq: return "=";
  }
  return "?";
}

std::string format_real(double v) {
  if (v == kInf) return "inf";
  if (v == -kInf) return "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_instance(const MilpInstance& inst) {
  require_valid(inst);
  std::string out;
  out.reserve(64 + inst.num_nonzeros() * 28 + static_cast<std::size_t>(inst.num_vars) * 60);
  out += "bdmilp 1\n";
  out += "name " + inst.name + "\n";
  out += "dims " + std::to_string(inst.num_vars) + " " + std::to_string(inst.num_rows()) + " " +
         std::to_string(inst.binary_set.size()) + "\n";
  out += "obj";
  for (double c : inst.objective) out += " " + format_real(c);
  out += "\n";
  for (int r = 0; r < inst.num_rows(); ++r) {
    const auto ur = static_cast<std::size_t>(r);
    out += "row ";
    out += sense_token(inst.senses[ur]);
    out += " " + format_real(inst.rhs[ur]) + " " + std::to_string(inst.rows[ur].size());
    for (const auto& e : inst.rows[ur]) out += " " + std::to_string(e.col) + ":" + format_real(e.coef);
    out += "\n";
  }
  out += "bounds";
  for (int j = 0; j < inst.num_vars; ++j) {
    const auto uj = static_cast<std::size_t>(j);
    out += " " + format_real(inst.lower[uj]) + " " + format_real(inst.upper[uj]);
  }
  out += "\nbinaries";
  for (int i : inst.binary_set) out += " " + std::to_string(i);
  out += "\nend\n";
  return out;
}

namespace {

class LineReader {
 public:
  explicit LineReader(const std::string& text) : in_(text) {}

  // Next line split into tokens; false at end of input.
  bool next(std::vector<std::string>& tokens, std::string& raw) {
    if (!std::getline(in_, raw)) return false;
    ++line_;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    tokens.clear();
    std::istringstream ls(raw);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
    return true;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("line " + std::to_string(line_) + ": " + what);
  }

  int line() const { return line_; }

 private:
  std::istringstream in_;
  int line_ = 0;
};

double parse_real(const LineReader& lr, const std::string& tok) {
  if (tok == "inf") return kInf;
  if (tok == "-inf") return -kInf;
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE || !std::isfinite(v))
    lr.fail("non-numeric coefficient '" + tok + "'");
  return v;
}

long parse_int(const LineReader& lr, const std::string& tok) {
  errno = 0;
  char* end = nullptr;
  const long v = std::strtol(tok.c_str(), &end, 10);
  if (tok.empty() || end != tok.c_str() + tok.size() || errno == ERANGE)
    lr.fail("non-integer token '" + tok + "'");
  return v;
}

void expect_keyword(const LineReader& lr, const std::vector<std::string>& tokens, const char* kw) {
  if (tokens.empty() || tokens.front() != kw) lr.fail(std::string("expected '") + kw + "'");
}

}  // namespace

MilpInstance parse_instance(const std::string& text) {
  LineReader lr(text);
  std::vector<std::string> tok;
  std::string raw;
  if (!lr.next(tok, raw) || tok.empty()) throw ParseError("missing header");
  if (tok.size() != 2 || tok[0] != "bdmilp") lr.fail("malformed header");
  if (tok[1] != "1") lr.fail("unsupported format version '" + tok[1] + "'");

  MilpInstance inst;
  if (!lr.next(tok, raw)) lr.fail("unexpected end of file");
  expect_keyword(lr, tok, "name");
  inst.name = raw.size() > 5 ? raw.substr(5) : std::string{};

  if (!lr.next(tok, raw)) lr.fail("unexpected end of file");
  expect_keyword(lr, tok, "dims");
  if (tok.size() != 4) lr.fail("malformed dims line");
  const long n = parse_int(lr, tok[1]);
  const long m = parse_int(lr, tok[2]);
  const long nb = parse_int(lr, tok[3]);
  if (n < 0 || m < 0 || nb < 0) lr.fail("negative dimension");
  inst.num_vars = static_cast<int>(n);

  if (!lr.next(tok, raw)) lr.fail("unexpected end of file");
  expect_keyword(lr, tok, "obj");
  if (static_cast<long>(tok.size()) != n + 1) lr.fail("objective has wrong length");
  inst.objective.reserve(static_cast<std::size_t>(n));
  for (long j = 0; j < n; ++j) inst.objective.push_back(parse_real(lr, tok[static_cast<std::size_t>(j + 1)]));

  inst.rows.reserve(static_cast<std::size_t>(m));
  for (long r = 0; r < m; ++r) {
    if (!lr.next(tok, raw)) lr.fail("unexpected end of file");
    expect_keyword(lr, tok, "row");
    if (tok.size() < 4) lr.fail("malformed row");
    Sense s;
    if (tok[1] == "<=") s = Sense::kLe;
    else if (tok[1] == ">=") s = Sense::kGe;
    else if (tok[1] == "=") s = Sense::kEq;
    else lr.fail("unknown sense token '" + tok[1] + "'");
    const double b = parse_real(lr, tok[2]);
    const long nnz = parse_int(lr, tok[3]);
    if (nnz < 0 || static_cast<long>(tok.size()) != nnz + 4) lr.fail("row nonzero count mismatch");
    SparseRow row;
    row.reserve(static_cast<std::size_t>(nnz));
    for (long k = 0; k < nnz; ++k) {
      const std::string& t = tok[static_cast<std::size_t>(k + 4)];
      const auto colon = t.find(':');
      if (colon == std::string::npos) lr.fail("malformed entry '" + t + "'");
      const long col = parse_int(lr, t.substr(0, colon));
      row.push_back({static_cast<int>(col), parse_real(lr, t.substr(colon + 1))});
    }
    inst.rows.push_back(std::move(row));
    inst.senses.push_back(s);
    inst.rhs.push_back(b);
  }

  if (!lr.next(tok, raw)) lr.fail("unexpected end of file");
  expect_keyword(lr, tok, "bounds");
  if (static_cast<long>(tok.size()) != 2 * n + 1) lr.fail("bounds have wrong length");
  for (long j = 0; j < n; ++j) {
    inst.lower.push_back(parse_real(lr, tok[static_cast<std::size_t>(2 * j + 1)]));
    inst.upper.push_back(parse_real(lr, tok[static_cast<std::size_t>(2 * j + 2)]));
  }

  if (!lr.next(tok, raw)) lr.fail("unexpected end of file");
  expect_keyword(lr, tok, "binaries");
  if (static_cast<long>(tok.size()) != nb + 1) lr.fail("binary list has wrong length");
  for (long k = 0; k < nb; ++k)
    inst.binary_set.push_back(static_cast<int>(parse_int(lr, tok[static_cast<std::size_t>(k + 1)])));

  if (!lr.next(tok, raw)) lr.fail("unexpected end of file");
  expect_keyword(lr, tok, "end");

  const auto report = validate_instance(inst);
  if (!report.ok()) throw ParseError("invalid instance: " + report.violations.front());
  return inst;
}

void write_instance(const MilpInstance& inst, const std::filesystem::path& path) {
  const std::string text = format_instance(inst);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

MilpInstance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_instance(ss.str());
}

}  // namespace bdlab
