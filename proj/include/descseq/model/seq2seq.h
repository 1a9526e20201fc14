#pragma once

#include <optional>
#include <span>
#include <vector>

#include "descseq/description.h"
#include "descseq/model/config.h"
#include "descseq/model/layers.h"
#include "descseq/vq.h"

namespace descseq::model {

/// Description window fed to the encoder.
struct EncoderInput {
  std::vector<int> tokens;
  std::vector<int> bars;  // 0..512 per token
  /// Injection pathway only: per-token concatenated codebook rows
  /// (tokens x 16 * latent_dim); zero rows for tokens outside any bar.
  std::optional<Matrix> latent;
  /// Index of the first window token in the full description.
  std::size_t source_offset = 0;
};

/// Target window fed to the decoder.
struct DecoderInput {
  std::vector<int> tokens;
  std::vector<int> bars;       // 0..512
  std::vector<int> positions;  // 0..287
};

/// Transformer encoder-decoder over description and REMI+ tokens.
/// Embeddings: token + bar on the encoder side, token + bar + beat position
/// on the decoder side; attention positions are relative only.
class Seq2Seq {
 public:
  explicit Seq2Seq(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  const nn::ParameterSet& params() const { return params_; }

  /// Token + bar (+ injected latent) embeddings of the description window.
  Var embed_description(Tape& t, const EncoderInput& in);
  /// Token + bar + beat embeddings of the target window.
  Var embed_target(Tape& t, const DecoderInput& in);

  Var encode(Tape& t, const EncoderInput& in, bool training, Rng& rng);
  /// Logits (rows x vocabulary); with `last_only` only the final row.
  Var decode(Tape& t, Var memory, const DecoderInput& in, bool training, Rng& rng,
             bool last_only = false);

  /// Inference helpers (dropout off).
  Matrix memory(const EncoderInput& in);
  Matrix next_logits(const Matrix& memory, const DecoderInput& in);
  Matrix log_probs(const EncoderInput& enc, const DecoderInput& dec);

 private:
  ModelConfig config_;
  nn::ParameterSet params_;
  nn::Parameter* target_tokens_ = nullptr;
  nn::Parameter* description_tokens_ = nullptr;
  nn::Parameter* encoder_bars_ = nullptr;
  nn::Parameter* decoder_bars_ = nullptr;
  nn::Parameter* beats_ = nullptr;
  std::optional<Linear> latent_projection_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Linear head_;
};

/// Decoder input for ids[start, start + count) with absolute bar and beat
/// alignment from the full sequence.
DecoderInput target_window(std::span<const int> ids, std::size_t start, std::size_t count);

/// Description window whose first bar is `bar` (the <bos> token is kept
/// for bar <= 1), at most `max_tokens` long.
EncoderInput description_window(std::span<const int> description_ids, int bar,
                                std::size_t max_tokens);

/// Per-token latent rows for the injection pathway.
Matrix injection_rows(std::span<const int> description_ids,
                      std::span<const desc::LatentCodes> codes, const vq::Codebook& codebook);

}  // namespace descseq::model
