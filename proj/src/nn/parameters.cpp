#include "descseq/nn/parameters.h"

#include "descseq/error.h"

namespace descseq::nn {

Parameter& ParameterSet::add(const std::string& name, Matrix value, bool decay) {
  if (find(name) != nullptr) {
    throw Error(ErrorCode::kConfigMismatch, "duplicate parameter " + name);
  }
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->grad = Matrix::Zero(value.rows(), value.cols());
  p->value = std::move(value);
  p->decay = decay;
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParameterSet::add_normal(const std::string& name, int rows, int cols, double stddev,
                                    Rng& rng, bool decay) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = stddev * standard_normal(rng);
  return add(name, std::move(m), decay);
}

Parameter& ParameterSet::add_constant(const std::string& name, int rows, int cols, double value,
                                      bool decay) {
  return add(name, Matrix::Constant(rows, cols, value), decay);
}

Parameter* ParameterSet::find(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

const Parameter* ParameterSet::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p->grad.setZero();
}

std::size_t ParameterSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p->value.size());
  return n;
}

}  // namespace descseq::nn
