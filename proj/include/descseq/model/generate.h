#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "descseq/model/seq2seq.h"
#include "descseq/remi.h"

namespace descseq::model {

struct SamplingConfig {
  /// 0 selects the argmax (ties to the smaller id).
  double temperature = 1.0;
  double top_p = 1.0;
  std::uint64_t seed = 0;
  int max_bars = 32;
  /// Length cap including <bos> and <eos>.
  std::size_t max_tokens = 4096;
};

/// Samples one id among `allowed` from temperature-scaled, nucleus-truncated
/// logits.
int sample_token(std::span<const double> logits, const std::vector<char>& allowed,
                 double temperature, double top_p, Rng& rng);

/// Autoregressive, grammar-masked sampling. The decoder sees the last
/// context_length tokens; the encoder window starts at the bar of the first
/// token in that window. Stops at <eos>, after the last bar allowed by
/// max_bars and the description, or at max_tokens (the sequence is then cut
/// back to the last complete event and closed with <eos>).
remi::TokenIds generate(Seq2Seq& model, std::span<const int> description_ids,
                        const SamplingConfig& sampling,
                        const std::optional<Matrix>& latent_rows = std::nullopt);

}  // namespace descseq::model
