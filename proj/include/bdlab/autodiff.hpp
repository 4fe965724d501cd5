// Minimal reverse-mode differentiation over dense double matrices.
//
// A Tape records each operation's value and a closure that pushes the output
// gradient back to its inputs. Nodes are addressed by integer handles and
// evaluated eagerly, so the tape order is a valid topological order.
#pragma once

#include <Eigen/Dense>
#include <functional>
#include <span>
#include <vector>

namespace bdlab {

using Matrix = Eigen::MatrixXd;

class Tape {
 public:
  // A leaf whose gradient is collected.
  int variable(Matrix value);
  // A leaf that never receives a gradient.
  int constant(Matrix value);

  int matmul(int a, int b);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);  // elementwise, same shape
  int scale(int a, double s);
  // a (r x k) plus row vector b (1 x k) on every row.
  int add_row(int a, int b);
  // a (r x k) with row i scaled by s(i), s is r x 1.
  int mul_col(int a, int s);

  int relu(int a);
  int leaky_relu(int a, double slope);
  int sigmoid(int a);
  int exp(int a);
  int log(int a);

  int gather_rows(int a, std::span<const int> rows);
  int concat_cols(std::span<const int> parts);
  int concat_rows(std::span<const int> parts);

  // Sums rows of a into num_segments rows; row r goes to segment seg[r].
  int segment_sum(int a, std::span<const int> seg, int num_segments);
  // Softmax of a column vector within each segment.
  int segment_softmax(int a, std::span<const int> seg, int num_segments);

  int sum(int a);   // 1 x 1
  int mean(int a);  // 1 x 1
  // log(sum(exp(a))) with the maximum subtracted first; 1 x 1.
  int logsumexp(int a);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  // Zero matrix of the right shape when no gradient reached the node.
  Matrix grad(int id) const;

  // Seeds d(out)/d(out) = 1 for a 1 x 1 node and propagates to every leaf.
  void backward(int out);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool requires_grad = false;
    std::function<void()> backward;
  };

  int push(Matrix value, bool requires_grad, std::function<void()> backward = {});
  bool needs(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
  Node& at(int id) { return nodes_[static_cast<std::size_t>(id)]; }
  const Matrix& g(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
  template <typename M>
  void accumulate(int id, const M& delta);

  std::vector<Node> nodes_;
};

}  // namespace bdlab
