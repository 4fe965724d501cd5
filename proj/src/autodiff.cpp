#include "bdlab/autodiff.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace bdlab {

namespace {

void require(bool ok, const char* op, const std::string& what) {
  if (!ok) throw std::invalid_argument(std::string(op) + ": " + what);
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op, "shape mismatch");
}

void require_segments(std::span<const int> seg, Eigen::Index rows, int num_segments, const char* op) {
  require(static_cast<Eigen::Index>(seg.size()) == rows, op, "segment list length mismatch");
  for (int s : seg) require(s >= 0 && s < num_segments, op, "segment id out of range");
}

}  // namespace

int Tape::push(Matrix value, bool requires_grad, std::function<void()> backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), requires_grad, requires_grad ? std::move(backward) : nullptr});
  return static_cast<int>(nodes_.size()) - 1;
}

template <typename M>
void Tape::accumulate(int id, const M& delta) {
  Node& n = at(id);
  if (!n.requires_grad) return;
  if (n.grad.size() == 0)
    n.grad = delta;
  else
    n.grad += delta;
}

int Tape::variable(Matrix value) { return push(std::move(value), true); }

int Tape::constant(Matrix value) { return push(std::move(value), false); }

Matrix Tape::grad(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(int out) {
  require(value(out).rows() == 1 && value(out).cols() == 1, "backward", "output must be 1 x 1");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  at(out).grad = Matrix::Ones(1, 1);
  for (int i = out; i >= 0; --i) {
    Node& n = at(i);
    if (n.backward && n.grad.size() != 0) n.backward();
  }
}

int Tape::matmul(int a, int b) {
  require(value(a).cols() == value(b).rows(), "matmul", "inner dimension mismatch");
  const int out = static_cast<int>(nodes_.size());
  return push(value(a) * value(b), needs(a) || needs(b), [this, a, b, out] {
    if (needs(a)) accumulate(a, g(out) * value(b).transpose());
    if (needs(b)) accumulate(b, value(a).transpose() * g(out));
  });
}

int Tape::add(int a, int b) {
  require_same_shape(value(a), value(b), "add");
  const int out = static_cast<int>(nodes_.size());
  return push(value(a) + value(b), needs(a) || needs(b), [this, a, b, out] {
    accumulate(a, g(out));
    accumulate(b, g(out));
  });
}

int Tape::sub(int a, int b) {
  require_same_shape(value(a), value(b), "sub");
  const int out = static_cast<int>(nodes_.size());
  return push(value(a) - value(b), needs(a) || needs(b), [this, a, b, out] {
    accumulate(a, g(out));
    accumulate(b, Matrix(-g(out)));
  });
}

int Tape::mul(int a, int b) {
  require_same_shape(value(a), value(b), "mul");
  const int out = static_cast<int>(nodes_.size());
  return push(value(a).cwiseProduct(value(b)), needs(a) || needs(b), [this, a, b, out] {
    if (needs(a)) accumulate(a, g(out).cwiseProduct(value(b)));
    if (needs(b)) accumulate(b, g(out).cwiseProduct(value(a)));
  });
}

int Tape::scale(int a, double s) {
  const int out = static_cast<int>(nodes_.size());
  return push(value(a) * s, needs(a), [this, a, s, out] { accumulate(a, g(out) * s); });
}

int Tape::add_row(int a, int b) {
  require(value(b).rows() == 1 && value(b).cols() == value(a).cols(), "add_row", "bias shape mismatch");
  const int out = static_cast<int>(nodes_.size());
  Matrix v = value(a);
  v.rowwise() += value(b).row(0);
  return push(std::move(v), needs(a) || needs(b), [this, a, b, out] {
    accumulate(a, g(out));
    if (needs(b)) accumulate(b, g(out).colwise().sum());
  });
}

int Tape::mul_col(int a, int s) {
  require(value(s).cols() == 1 && value(s).rows() == value(a).rows(), "mul_col", "scale shape mismatch");
  const int out = static_cast<int>(nodes_.size());
  Matrix v = value(a).array().colwise() * value(s).col(0).array();
  return push(std::move(v), needs(a) || needs(s), [this, a, s, out] {
    if (needs(a)) accumulate(a, Matrix(g(out).array().colwise() * value(s).col(0).array()));
    if (needs(s)) accumulate(s, g(out).cwiseProduct(value(a)).rowwise().sum());
  });
}

int Tape::relu(int a) {
  const int out = static_cast<int>(nodes_.size());
  return push(value(a).cwiseMax(0.0), needs(a), [this, a, out] {
    accumulate(a, Matrix((value(a).array() > 0.0).select(g(out), 0.0)));
  });
}

int Tape::leaky_relu(int a, double slope) {
  const int out = static_cast<int>(nodes_.size());
  Matrix v = (value(a).array() > 0.0).select(value(a), slope * value(a));
  return push(std::move(v), needs(a), [this, a, slope, out] {
    accumulate(a, Matrix((value(a).array() > 0.0).select(g(out), slope * g(out))));
  });
}

int Tape::sigmoid(int a) {
  const int out = static_cast<int>(nodes_.size());
  Matrix v = value(a).unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return push(std::move(v), needs(a), [this, a, out] {
    const Matrix& y = value(out);
    accumulate(a, Matrix(g(out).array() * y.array() * (1.0 - y.array())));
  });
}

int Tape::exp(int a) {
  const int out = static_cast<int>(nodes_.size());
  return push(value(a).array().exp().matrix(), needs(a), [this, a, out] {
    accumulate(a, g(out).cwiseProduct(value(out)));
  });
}

int Tape::log(int a) {
  const int out = static_cast<int>(nodes_.size());
  return push(value(a).array().log().matrix(), needs(a), [this, a, out] {
    accumulate(a, g(out).cwiseQuotient(value(a)));
  });
}

int Tape::gather_rows(int a, std::span<const int> rows) {
  const Matrix& src = value(a);
  Matrix v(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    require(rows[r] >= 0 && rows[r] < src.rows(), "gather_rows", "row index out of range");
    v.row(static_cast<Eigen::Index>(r)) = src.row(rows[r]);
  }
  const int out = static_cast<int>(nodes_.size());
  std::vector<int> idx(rows.begin(), rows.end());
  return push(std::move(v), needs(a), [this, a, out, idx = std::move(idx)] {
    Matrix ga = Matrix::Zero(value(a).rows(), value(a).cols());
    for (std::size_t r = 0; r < idx.size(); ++r) ga.row(idx[r]) += g(out).row(static_cast<Eigen::Index>(r));
    accumulate(a, ga);
  });
}

int Tape::concat_cols(std::span<const int> parts) {
  require(!parts.empty(), "concat_cols", "no inputs");
  const Eigen::Index rows = value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool grad = false;
  for (int p : parts) {
    require(value(p).rows() == rows, "concat_cols", "row count mismatch");
    cols += value(p).cols();
    grad = grad || needs(p);
  }
  Matrix v(rows, cols);
  Eigen::Index at_col = 0;
  for (int p : parts) {
    v.middleCols(at_col, value(p).cols()) = value(p);
    at_col += value(p).cols();
  }
  const int out = static_cast<int>(nodes_.size());
  std::vector<int> ids(parts.begin(), parts.end());
  return push(std::move(v), grad, [this, out, ids = std::move(ids)] {
    Eigen::Index c = 0;
    for (int p : ids) {
      const Eigen::Index w = value(p).cols();
      if (needs(p)) accumulate(p, Matrix(g(out).middleCols(c, w)));
      c += w;
    }
  });
}

int Tape::concat_rows(std::span<const int> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const Eigen::Index cols = value(parts[0]).cols();
  Eigen::Index rows = 0;
  bool grad = false;
  for (int p : parts) {
    require(value(p).cols() == cols, "concat_rows", "column count mismatch");
    rows += value(p).rows();
    grad = grad || needs(p);
  }
  Matrix v(rows, cols);
  Eigen::Index at_row = 0;
  for (int p : parts) {
    v.middleRows(at_row, value(p).rows()) = value(p);
    at_row += value(p).rows();
  }
  const int out = static_cast<int>(nodes_.size());
  std::vector<int> ids(parts.begin(), parts.end());
  return push(std::move(v), grad, [this, out, ids = std::move(ids)] {
    Eigen::Index r = 0;
    for (int p : ids) {
      const Eigen::Index h = value(p).rows();
      if (needs(p)) accumulate(p, Matrix(g(out).middleRows(r, h)));
      r += h;
    }
  });
}

int Tape::segment_sum(int a, std::span<const int> seg, int num_segments) {
  require_segments(seg, value(a).rows(), num_segments, "segment_sum");
  Matrix v = Matrix::Zero(num_segments, value(a).cols());
  for (std::size_t r = 0; r < seg.size(); ++r) v.row(seg[r]) += value(a).row(static_cast<Eigen::Index>(r));
  const int out = static_cast<int>(nodes_.size());
  std::vector<int> ids(seg.begin(), seg.end());
  return push(std::move(v), needs(a), [this, a, out, ids = std::move(ids)] {
    Matrix ga(value(a).rows(), value(a).cols());
    for (std::size_t r = 0; r < ids.size(); ++r) ga.row(static_cast<Eigen::Index>(r)) = g(out).row(ids[r]);
    accumulate(a, ga);
  });
}

int Tape::segment_softmax(int a, std::span<const int> seg, int num_segments) {
  require(value(a).cols() == 1, "segment_softmax", "input must be a column vector");
  require_segments(seg, value(a).rows(), num_segments, "segment_softmax");
  const Matrix& x = value(a);
  std::vector<double> top(static_cast<std::size_t>(num_segments), -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < seg.size(); ++r) {
    auto& t = top[static_cast<std::size_t>(seg[r])];
    t = std::max(t, x(static_cast<Eigen::Index>(r), 0));
  }
  Matrix v(x.rows(), 1);
  std::vector<double> denom(static_cast<std::size_t>(num_segments), 0.0);
  for (std::size_t r = 0; r < seg.size(); ++r) {
    const auto s = static_cast<std::size_t>(seg[r]);
    v(static_cast<Eigen::Index>(r), 0) = std::exp(x(static_cast<Eigen::Index>(r), 0) - top[s]);
    denom[s] += v(static_cast<Eigen::Index>(r), 0);
  }
  for (std::size_t r = 0; r < seg.size(); ++r) v(static_cast<Eigen::Index>(r), 0) /= denom[static_cast<std::size_t>(seg[r])];
  const int out = static_cast<int>(nodes_.size());
  std::vector<int> ids(seg.begin(), seg.end());
  return push(std::move(v), needs(a), [this, a, out, num_segments, ids = std::move(ids)] {
    const Matrix& y = value(out);
    const Matrix& gy = g(out);
    std::vector<double> dot(static_cast<std::size_t>(num_segments), 0.0);
    for (std::size_t r = 0; r < ids.size(); ++r)
      dot[static_cast<std::size_t>(ids[r])] += gy(static_cast<Eigen::Index>(r), 0) * y(static_cast<Eigen::Index>(r), 0);
    Matrix ga(y.rows(), 1);
    for (std::size_t r = 0; r < ids.size(); ++r) {
      const auto i = static_cast<Eigen::Index>(r);
      ga(i, 0) = y(i, 0) * (gy(i, 0) - dot[static_cast<std::size_t>(ids[r])]);
    }
    accumulate(a, ga);
  });
}

int Tape::sum(int a) {
  const int out = static_cast<int>(nodes_.size());
  return push(Matrix::Constant(1, 1, value(a).sum()), needs(a), [this, a, out] {
    accumulate(a, Matrix::Constant(value(a).rows(), value(a).cols(), g(out)(0, 0)));
  });
}

int Tape::mean(int a) {
  require(value(a).size() > 0, "mean", "empty input");
  const int out = static_cast<int>(nodes_.size());
  const double n = static_cast<double>(value(a).size());
  return push(Matrix::Constant(1, 1, value(a).sum() / n), needs(a), [this, a, out, n] {
    accumulate(a, Matrix::Constant(value(a).rows(), value(a).cols(), g(out)(0, 0) / n));
  });
}

int Tape::logsumexp(int a) {
  require(value(a).size() > 0, "logsumexp", "empty input");
  const double top = value(a).maxCoeff();
  const double lse = top + std::log((value(a).array() - top).exp().sum());
  const int out = static_cast<int>(nodes_.size());
  return push(Matrix::Constant(1, 1, lse), needs(a), [this, a, out, lse] {
    accumulate(a, Matrix((value(a).array() - lse).exp() * g(out)(0, 0)));
  });
}

}  // namespace bdlab
