#pragma once

#include <memory>
#include <string>
#include <vector>

#include "descseq/nn/tape.h"
#include "descseq/random.h"

namespace descseq::nn {

/// Owning, ordered collection of named parameters. Addresses stay stable
/// for the lifetime of the set.
class ParameterSet {
 public:
  Parameter& add(const std::string& name, Matrix value, bool decay = true);
  /// N(0, std^2) initialization.
  Parameter& add_normal(const std::string& name, int rows, int cols, double stddev, Rng& rng,
                        bool decay = true);
  Parameter& add_constant(const std::string& name, int rows, int cols, double value,
                          bool decay = false);

  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  std::size_t size() const { return params_.size(); }
  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace descseq::nn
