#include "descseq/nn/tape.h"

#include "descseq/error.h"

namespace descseq::nn {

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::parameter(Parameter& p) {
  if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
    p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
  }
  Node n;
  n.external = &p.value;
  n.external_grad = &p.grad;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

Var Tape::push(Matrix value, std::vector<int> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (int in : inputs) n.requires_grad = n.requires_grad || requires_grad(in);
  n.inputs = std::move(inputs);
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return {static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Tape::value(int id) const {
  const Node& n = nodes_[static_cast<std::size_t>(id)];
  return n.external != nullptr ? *n.external : n.value;
}

Matrix& Tape::grad(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.external_grad != nullptr) return *n.external_grad;
  if (n.grad.size() == 0) {
    const Matrix& v = value(id);
    n.grad = Matrix::Zero(v.rows(), v.cols());
  }
  return n.grad;
}

void Tape::backward(Var out, double seed) {
  if (value(out).size() != 1) {
    throw Error(ErrorCode::kDimensionMismatch, "backward needs a scalar output");
  }
  if (!requires_grad(out.id)) return;
  grad(out.id)(0, 0) += seed;
  for (int id = out.id; id >= 0; --id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (!n.backward || n.grad.size() == 0) continue;
    n.backward(*this, id);
    // intermediate gradients are no longer needed
    n.grad.resize(0, 0);
  }
}

}  // namespace descseq::nn
