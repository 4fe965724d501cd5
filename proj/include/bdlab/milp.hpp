// Mixed-binary linear programs: data model, validation, relaxation and the
// .bdmilp text format.
#pragma once

#include <cstddef>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bdlab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Sense { kLe, kGe, kEq };

struct Entry {
  int col = 0;
  double coef = 0.0;
  bool operator==(const Entry&) const = default;
};

using SparseRow = std::vector<Entry>;

// min c'x  s.t.  rows[r] (sense[r]) rhs[r],  lower <= x <= upper,
// x_j in {0,1} for j in binary_set. Minimization is the only sense stored.
struct MilpInstance {
  std::string name;
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<SparseRow> rows;
  std::vector<double> rhs;
  std::vector<Sense> senses;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<int> binary_set;  // sorted ascending

  int num_rows() const { return static_cast<int>(rows.size()); }
  std::size_t num_nonzeros() const;
  std::vector<bool> binary_mask() const;

  bool operator==(const MilpInstance&) const = default;
};

// Same layout with integrality dropped.
struct LpProblem {
  int num_vars = 0;
  std::vector<double> objective;
  std::vector<SparseRow> rows;
  std::vector<double> rhs;
  std::vector<Sense> senses;
  std::vector<double> lower;
  std::vector<double> upper;

  int num_rows() const { return static_cast<int>(rows.size()); }
  bool operator==(const LpProblem&) const = default;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

class InvalidInstance : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

ValidationReport validate_instance(const MilpInstance& inst);
ValidationReport validate_lp(const LpProblem& lp);

// Throws InvalidInstance carrying the first violation.
void require_valid(const MilpInstance& inst);

LpProblem lp_relaxation(const MilpInstance& inst);

// Wraps an LP back into an instance with an empty binary set. Only used to
// feed LPs through code paths that take instances; the result does not pass
// validate_instance (I must be non-empty).
MilpInstance wrap_lp(const LpProblem& lp, std::string name = {});

// Row activity a_r'x.
double row_activity(const SparseRow& row, const std::vector<double>& x);

// Max violation over rows and bounds; 0 for a feasible point.
double max_violation(const LpProblem& lp, const std::vector<double>& x);

const char* sense_token(Sense s);

// .bdmilp format, line oriented:
//   bdmilp 1
//   name <token>
//   dims <n> <m> <|I|>
//   obj <c_0> ... <c_{n-1}>
//   row <sense> <rhs> <nnz> <col>:<coef> ...      (m lines)
//   bounds <lo_0> <up_0> ... <lo_{n-1}> <up_{n-1}>
//   binaries <i_0> ...
//   end
// Reals use 17 significant digits; infinities are written as inf / -inf.
std::string format_instance(const MilpInstance& inst);
MilpInstance parse_instance(const std::string& text);

void write_instance(const MilpInstance& inst, const std::filesystem::path& path);
MilpInstance read_instance(const std::filesystem::path& path);

std::string format_real(double v);

}  // namespace bdlab
