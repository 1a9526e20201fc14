#include "descseq/model/seq2seq.h"

#include <algorithm>
#include <cmath>

#include "descseq/error.h"
#include "descseq/remi.h"
#include "descseq/vocabulary.h"

namespace descseq::model {

namespace {

constexpr double kEmbeddingStd = 0.02;

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw Error(ErrorCode::kDimensionMismatch, what);
}

}  // namespace

Seq2Seq::Seq2Seq(const ModelConfig& config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const int d = config_.d_model;
  target_tokens_ = &params_.add_normal("embed.target", config_.sequence_vocab, d, kEmbeddingStd, rng);
  description_tokens_ =
      &params_.add_normal("embed.description", config_.description_vocab, d, kEmbeddingStd, rng);
  encoder_bars_ = &params_.add_normal("embed.encoder_bar", config_.bar_table, d, kEmbeddingStd, rng);
  decoder_bars_ = &params_.add_normal("embed.decoder_bar", config_.bar_table, d, kEmbeddingStd, rng);
  beats_ = &params_.add_normal("embed.beat", config_.beat_table, d, kEmbeddingStd, rng);
  if (config_.latent_mode == LatentMode::kInjection) {
    const int in = vq::kSlices * config_.latent_dim;
    latent_projection_ = Linear::create(params_, "embed.latent", in, d,
                                        1.0 / std::sqrt(static_cast<double>(in)), rng);
  }
  for (int i = 0; i < config_.encoder_layers; ++i) {
    encoder_.push_back(EncoderLayer::create(params_, "encoder." + std::to_string(i), d,
                                            config_.n_heads, config_.d_ff,
                                            config_.context_length, rng));
  }
  for (int i = 0; i < config_.decoder_layers; ++i) {
    decoder_.push_back(DecoderLayer::create(params_, "decoder." + std::to_string(i), d,
                                            config_.n_heads, config_.d_ff,
                                            config_.context_length, rng));
  }
  head_ = Linear::create(params_, "head", d, config_.sequence_vocab, kEmbeddingStd, rng);
}

Var Seq2Seq::embed_description(Tape& t, const EncoderInput& in) {
  check_lengths(in.tokens.size(), in.bars.size(), "description alignment length");
  Var x = nn::add(t, nn::gather_rows(t, t.parameter(*description_tokens_), in.tokens),
                  nn::gather_rows(t, t.parameter(*encoder_bars_), in.bars));
  if (latent_projection_) {
    if (!in.latent || static_cast<std::size_t>(in.latent->rows()) != in.tokens.size()) {
      throw Error(ErrorCode::kDimensionMismatch, "injection pathway needs per-token latent rows");
    }
    x = nn::add(t, x, (*latent_projection_)(t, t.constant(*in.latent)));
  }
  return x;
}

Var Seq2Seq::embed_target(Tape& t, const DecoderInput& in) {
  check_lengths(in.tokens.size(), in.bars.size(), "target bar alignment length");
  check_lengths(in.tokens.size(), in.positions.size(), "target beat alignment length");
  const Var tok = nn::gather_rows(t, t.parameter(*target_tokens_), in.tokens);
  const Var bar = nn::gather_rows(t, t.parameter(*decoder_bars_), in.bars);
  const Var beat = nn::gather_rows(t, t.parameter(*beats_), in.positions);
  return nn::add(t, nn::add(t, tok, bar), beat);
}

Var Seq2Seq::encode(Tape& t, const EncoderInput& in, bool training, Rng& rng) {
  if (in.tokens.empty()) throw Error(ErrorCode::kDimensionMismatch, "empty description window");
  if (in.tokens.size() > static_cast<std::size_t>(config_.context_length)) {
    throw Error(ErrorCode::kContextOverflow, "description window longer than the context");
  }
  const double p = training ? config_.dropout : 0.0;
  Var x = nn::dropout(t, embed_description(t, in), p, rng);
  for (const EncoderLayer& layer : encoder_) x = layer(t, x, p, rng);
  return x;
}

Var Seq2Seq::decode(Tape& t, Var memory, const DecoderInput& in, bool training, Rng& rng,
                    bool last_only) {
  if (in.tokens.empty()) throw Error(ErrorCode::kDimensionMismatch, "empty target window");
  if (in.tokens.size() > static_cast<std::size_t>(config_.context_length)) {
    throw Error(ErrorCode::kContextOverflow,
                "target prefix of " + std::to_string(in.tokens.size()) +
                    " tokens exceeds the context of " + std::to_string(config_.context_length));
  }
  const double p = training ? config_.dropout : 0.0;
  Var x = nn::dropout(t, embed_target(t, in), p, rng);
  for (const DecoderLayer& layer : decoder_) x = layer(t, x, memory, p, rng);
  if (last_only) x = nn::slice_rows(t, x, static_cast<int>(in.tokens.size()) - 1, 1);
  return head_(t, x);
}

Matrix Seq2Seq::memory(const EncoderInput& in) {
  Tape t;
  Rng rng(0);
  return t.value(encode(t, in, false, rng));
}

Matrix Seq2Seq::next_logits(const Matrix& memory, const DecoderInput& in) {
  Tape t;
  Rng rng(0);
  return t.value(decode(t, t.constant(memory), in, false, rng, true));
}

Matrix Seq2Seq::log_probs(const EncoderInput& enc, const DecoderInput& dec) {
  Tape t;
  Rng rng(0);
  const Var mem = encode(t, enc, false, rng);
  return nn::log_softmax_rows(t.value(decode(t, mem, dec, false, rng)));
}

DecoderInput target_window(std::span<const int> ids, std::size_t start, std::size_t count) {
  const auto alignment = remi::align(ids);
  DecoderInput in;
  const std::size_t end = std::min(ids.size(), start + count);
  for (std::size_t i = start; i < end; ++i) {
    in.tokens.push_back(ids[i]);
    in.bars.push_back(std::min(alignment[i].bar, kMaxBars));
    in.positions.push_back(alignment[i].position);
  }
  return in;
}

EncoderInput description_window(std::span<const int> description_ids, int bar,
                                std::size_t max_tokens) {
  const auto bars = desc::token_bars(description_ids);
  std::size_t start = 0;
  if (bar > 1) {
    auto it = std::find(bars.begin(), bars.end(), bar);
    if (it == bars.end()) {
      // past the described bars: keep the final window
      start = description_ids.size() > max_tokens ? description_ids.size() - max_tokens : 0;
    } else {
      start = static_cast<std::size_t>(it - bars.begin());
    }
  }
  EncoderInput in;
  in.source_offset = start;
  const std::size_t end = std::min(description_ids.size(), start + max_tokens);
  for (std::size_t i = start; i < end; ++i) {
    in.tokens.push_back(description_ids[i]);
    in.bars.push_back(std::min(bars[i], kMaxBars));
  }
  return in;
}

Matrix injection_rows(std::span<const int> description_ids,
                      std::span<const desc::LatentCodes> codes, const vq::Codebook& codebook) {
  const auto bars = desc::token_bars(description_ids);
  const int width = codebook.dim();
  Matrix rows = Matrix::Zero(static_cast<Eigen::Index>(description_ids.size()),
                             vq::kSlices * width);
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const int b = bars[i];
    if (b < 1 || static_cast<std::size_t>(b) > codes.size()) continue;
    const desc::LatentCodes& c = codes[static_cast<std::size_t>(b - 1)];
    for (int s = 0; s < vq::kSlices; ++s) {
      const int code = c[static_cast<std::size_t>(s)];
      if (code < 0 || code >= codebook.size()) {
        throw Error(ErrorCode::kCodeOutOfRange, "code " + std::to_string(code));
      }
      rows.row(static_cast<Eigen::Index>(i)).segment(s * width, width) = codebook.entries.row(code);
    }
  }
  return rows;
}

}  // namespace descseq::model
