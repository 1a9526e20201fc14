#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "descseq/nn/adam.h"
#include "descseq/nn/parameters.h"

namespace descseq::model {

/// Binary checkpoint: "DSQM", version, JSON header, named tensors and an
/// optional optimizer state. Doubles are stored little-endian.
struct CheckpointData {
  nlohmann::json header;
  std::vector<std::pair<std::string, nn::Matrix>> tensors;
  struct AdamState {
    std::uint64_t steps = 0;
    std::vector<nn::Matrix> first;
    std::vector<nn::Matrix> second;
  };
  std::optional<AdamState> adam;
};

void save_checkpoint(const std::filesystem::path& path, const nlohmann::json& header,
                     const nn::ParameterSet& params, const nn::Adam* adam = nullptr);

/// Throws IoError or CheckpointError.
CheckpointData load_checkpoint(const std::filesystem::path& path);

/// Copies tensors into `params` (names and shapes must match exactly) and,
/// when both are present, the optimizer state into `adam`.
void restore_parameters(nn::ParameterSet& params, const CheckpointData& data,
                        nn::Adam* adam = nullptr);

}  // namespace descseq::model
