#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace descseq::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A learnable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  /// Subject to decoupled weight decay.
  bool decay = true;
};

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
};

/// Reverse-mode autodiff tape over dense row-major matrices. Nodes are
/// appended in evaluation order and differentiated in reverse.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Var constant(Matrix value);
  /// Leaf that reads the parameter in place; backward accumulates into
  /// parameter.grad.
  Var parameter(Parameter& p);
  /// Leaf whose gradient is kept on the tape (see grad()).
  Var leaf(Matrix value);

  Var push(Matrix value, std::vector<int> inputs, Backward backward);

  const Matrix& value(Var v) const { return value(v.id); }
  const Matrix& value(int id) const;
  /// Gradient buffer of a node (zero-initialized on first access).
  Matrix& grad(int id);
  const Matrix& grad(Var v) { return grad(v.id); }
  bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }

  /// Seeds d(out)/d(out) = seed (out must be 1x1) and propagates.
  void backward(Var out, double seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* external = nullptr;
    Matrix* external_grad = nullptr;
    Matrix grad;
    bool requires_grad = false;
    std::vector<int> inputs;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace descseq::nn
