#include "descseq/nn/adam.h"

#include <cmath>

namespace descseq::nn {

void Adam::step(ParameterSet& params, double lr) {
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
      v_.push_back(Matrix::Zero(params[i].value.rows(), params[i].value.cols()));
    }
  }
  ++steps_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = params[i];
    m_[i] = b1 * m_[i] + (1.0 - b1) * p.grad;
    v_[i] = b2 * v_[i] + (1.0 - b2) * p.grad.cwiseAbs2();
    if (p.decay && config_.weight_decay > 0.0) p.value *= 1.0 - lr * config_.weight_decay;
    p.value.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace descseq::nn
