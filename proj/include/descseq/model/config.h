#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"

namespace descseq::model {

/// How learned (VQ) descriptions reach the encoder.
enum class LatentMode {
  kNone,
  /// Code_k tokens inside the description token stream.
  kCodeTokens,
  /// Frozen codebook rows of a bar, concatenated and projected, added to
  /// every description token of that bar.
  kInjection,
};

struct ModelConfig {
  std::string preset = "desk";
  int d_model = 64;
  int n_heads = 4;
  int d_ff = 256;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int context_length = 128;
  int sequence_vocab = 0;     // filled from the REMI vocabulary
  int description_vocab = 0;  // filled from the description vocabulary
  int bar_table = 513;        // bar indices 0..512
  int beat_table = 288;       // positions 0..287
  double dropout = 0.1;
  std::uint64_t seed = 1;
  LatentMode latent_mode = LatentMode::kNone;
  int latent_dim = 8;  // per slice

  /// d_model 512, 8 heads, d_ff 2048, 4 encoder / 6 decoder layers, context 256.
  static ModelConfig paper();
  /// d_model 64, 4 heads, d_ff 256, 2 / 2 layers, context 128.
  static ModelConfig desk();
  /// Throws UsageError for unknown names.
  static ModelConfig preset_named(const std::string& name);

  /// Throws ConfigMismatch on inconsistent sizes.
  void validate() const;

  nlohmann::ordered_json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);

  bool operator==(const ModelConfig&) const = default;
};

std::string latent_mode_name(LatentMode mode);
LatentMode latent_mode_from_name(const std::string& name);

/// Closed-form trainable parameter count of the sequence model.
std::size_t parameter_count(const ModelConfig& config);

}  // namespace descseq::model
