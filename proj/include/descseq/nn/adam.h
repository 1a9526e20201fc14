#pragma once

#include <cstdint>
#include <vector>

#include "descseq/nn/parameters.h"

namespace descseq::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-6;
  double weight_decay = 0.01;
};

/// Adam with bias correction and decoupled weight decay (applied to
/// parameters flagged `decay`).
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// One update from the accumulated gradients; gradients are left intact.
  void step(ParameterSet& params, double lr);

  std::uint64_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

  /// Moment buffers in parameter order (empty before the first step).
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  const std::vector<Matrix>& first_moments() const { return m_; }
  const std::vector<Matrix>& second_moments() const { return v_; }
  void set_steps(std::uint64_t n) { steps_ = n; }

 private:
  AdamConfig config_;
  std::uint64_t steps_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace descseq::nn
