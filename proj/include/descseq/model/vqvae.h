#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "descseq/description.h"
#include "descseq/model/config.h"
#include "descseq/model/layers.h"
#include "descseq/nn/adam.h"
#include "descseq/vq.h"

namespace descseq::model {

/// Per-bar autoencoder with a sliced VQ bottleneck. The encoder reads the
/// bar's tokens, its first (<bos>) output is projected to 16 * latent_dim,
/// sliced and quantized against the shared codebook; the decoder rebuilds
/// the bar from the 16 projected code vectors.
class VqVae {
 public:
  VqVae(const ModelConfig& config, const vq::VqConfig& vq_config);

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& params() { return params_; }
  vq::Codebook& codebook() { return codebook_; }
  const vq::Codebook& codebook() const { return codebook_; }

  struct Forward {
    Var loss;  // mean NLL + beta * commitment
    double nll = 0.0;  // summed
    std::size_t tokens = 0;
    vq::Matrix slices;  // encoder slices before quantization
    vq::Quantized quantized;
  };

  /// `bar_tokens` is <bos> + one bar + <eos>, at most context + 1 tokens.
  Forward forward(Tape& t, std::span<const int> bar_tokens, bool training, Rng& rng);

  desc::LatentCodes codes(std::span<const int> bar_tokens);

  /// Encoder half of forward(): the 16 x latent_dim slices of the bar.
  Var encode_slices(Tape& t, std::span<const int> bar_tokens, bool training, Rng& rng);
  /// Decoder half of forward(): summed NLL of bar_tokens[1:] given the
  /// (quantized) latent rows.
  Var reconstruction_nll(Tape& t, std::span<const int> bar_tokens, Var latent, bool training,
                         Rng& rng);

 private:
  Var embed(Tape& t, std::span<const int> tokens);

  ModelConfig config_;
  nn::ParameterSet params_;
  vq::Codebook codebook_;
  nn::Parameter* tokens_ = nullptr;
  nn::Parameter* beats_ = nullptr;
  nn::Parameter* slots_ = nullptr;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Linear to_latent_;
  Linear from_latent_;
  Linear head_;
};

/// One token list per bar of a REMI+ sequence: <bos>, the bar's tokens
/// without its Bar token, <eos>; cut to max_tokens.
std::vector<std::vector<int>> bar_token_lists(std::span<const int> remi_ids,
                                              std::size_t max_tokens);

struct VqTrainOptions {
  std::uint64_t steps = 1000;
  std::size_t batch_size = 8;
  double base_lr = 1e-3;
  double warmup = 4000.0;
  std::uint64_t seed = 1;
  std::uint64_t restart_every = 100;
  std::ostream* log = nullptr;
};

/// Gradient steps on the networks, EMA steps on the codebook and periodic
/// random restarts from the latest batch. Returns the final mean loss.
double train_vqvae(VqVae& model, const std::vector<std::vector<int>>& bars,
                   const VqTrainOptions& options, nn::Adam& adam);

}  // namespace descseq::model
