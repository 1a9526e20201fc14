#include "descseq/model/vqvae.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "descseq/error.h"
#include "descseq/model/training.h"
#include "descseq/remi.h"
#include "descseq/vocabulary.h"

namespace descseq::model {

VqVae::VqVae(const ModelConfig& config, const vq::VqConfig& vq_config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const int d = config_.d_model;
  tokens_ = &params_.add_normal("vqvae.embed.tokens", config_.sequence_vocab, d, 0.02, rng);
  beats_ = &params_.add_normal("vqvae.embed.beat", config_.beat_table, d, 0.02, rng);
  slots_ = &params_.add_normal("vqvae.embed.slot", vq::kSlices, d, 0.02, rng);
  for (int i = 0; i < config_.encoder_layers; ++i) {
    encoder_.push_back(EncoderLayer::create(params_, "vqvae.encoder." + std::to_string(i), d,
                                            config_.n_heads, config_.d_ff,
                                            config_.context_length + 1, rng));
  }
  for (int i = 0; i < config_.decoder_layers; ++i) {
    decoder_.push_back(DecoderLayer::create(params_, "vqvae.decoder." + std::to_string(i), d,
                                            config_.n_heads, config_.d_ff,
                                            config_.context_length, rng));
  }
  const int latent = vq::kSlices * vq_config.dim;
  to_latent_ = Linear::create(params_, "vqvae.to_latent", d, latent,
                              1.0 / std::sqrt(static_cast<double>(d)), rng);
  from_latent_ = Linear::create(params_, "vqvae.from_latent", vq_config.dim, d,
                                1.0 / std::sqrt(static_cast<double>(vq_config.dim)), rng);
  head_ = Linear::create(params_, "vqvae.head", d, config_.sequence_vocab, 0.02, rng);
  codebook_ = vq::Codebook::random(vq_config, rng, 1.0);
}

Var VqVae::embed(Tape& t, std::span<const int> tokens) {
  const auto alignment = remi::align(tokens);
  std::vector<int> positions;
  positions.reserve(alignment.size());
  for (const auto& a : alignment) positions.push_back(a.position);
  return nn::add(t, nn::gather_rows(t, t.parameter(*tokens_), tokens),
                 nn::gather_rows(t, t.parameter(*beats_), positions));
}

Var VqVae::encode_slices(Tape& t, std::span<const int> bar_tokens, bool training, Rng& rng) {
  if (bar_tokens.size() < 2) throw Error(ErrorCode::kDimensionMismatch, "bar too short");
  if (bar_tokens.size() > static_cast<std::size_t>(config_.context_length) + 1) {
    throw Error(ErrorCode::kContextOverflow, "bar longer than the context");
  }
  const double p = training ? config_.dropout : 0.0;
  Var x = nn::dropout(t, embed(t, bar_tokens), p, rng);
  for (const EncoderLayer& layer : encoder_) x = layer(t, x, p, rng);
  const Var pooled = nn::slice_rows(t, x, 0, 1);
  return nn::reshape(t, to_latent_(t, pooled), vq::kSlices, codebook_.dim());
}

Var VqVae::reconstruction_nll(Tape& t, std::span<const int> bar_tokens, Var latent,
                              bool training, Rng& rng) {
  const double p = training ? config_.dropout : 0.0;
  const Var memory = nn::add(t, from_latent_(t, latent), t.parameter(*slots_));
  const std::span<const int> inputs = bar_tokens.first(bar_tokens.size() - 1);
  Var y = nn::dropout(t, embed(t, inputs), p, rng);
  for (const DecoderLayer& layer : decoder_) y = layer(t, y, memory, p, rng);
  const std::vector<int> targets(bar_tokens.begin() + 1, bar_tokens.end());
  return nn::cross_entropy(t, head_(t, y), targets);
}

VqVae::Forward VqVae::forward(Tape& t, std::span<const int> bar_tokens, bool training, Rng& rng) {
  const Var z = encode_slices(t, bar_tokens, training, rng);
  Forward out;
  out.slices = t.value(z);
  out.quantized = vq::quantize(out.slices, codebook_);
  const Var zq = nn::straight_through(t, z, out.quantized.rows);
  const Var commitment = nn::sq_dist_mean(t, z, out.quantized.rows);
  const Var nll = reconstruction_nll(t, bar_tokens, zq, training, rng);
  out.nll = t.value(nll)(0, 0);
  out.tokens = bar_tokens.size() - 1;
  // vqvae_loss(mean nll, commitment, beta) on the tape
  out.loss = nn::add(t, nn::scale(t, nll, 1.0 / static_cast<double>(out.tokens)),
                     nn::scale(t, commitment, codebook_.config.beta));
  return out;
}

desc::LatentCodes VqVae::codes(std::span<const int> bar_tokens) {
  Tape t;
  Rng rng(0);
  const Forward f = forward(t, bar_tokens, false, rng);
  desc::LatentCodes c{};
  std::copy(f.quantized.codes.begin(), f.quantized.codes.end(), c.begin());
  return c;
}

std::vector<std::vector<int>> bar_token_lists(std::span<const int> remi_ids,
                                              std::size_t max_tokens) {
  const Vocabulary& vocab = Vocabulary::remi();
  std::vector<std::vector<int>> bars;
  for (int id : remi_ids) {
    const TokenKind kind = vocab.kind(id);
    if (kind == TokenKind::kBar) {
      bars.push_back({kBosId});
    } else if (!bars.empty() && kind != TokenKind::kEos && kind != TokenKind::kBos &&
               kind != TokenKind::kPad) {
      bars.back().push_back(id);
    }
  }
  for (auto& bar : bars) {
    if (bar.size() + 1 > max_tokens) bar.resize(max_tokens - 1);
    bar.push_back(kEosId);
  }
  return bars;
}

double train_vqvae(VqVae& model, const std::vector<std::vector<int>>& bars,
                   const VqTrainOptions& options, nn::Adam& adam) {
  if (bars.empty()) throw Error(ErrorCode::kEmptyCorpus, "no bars to train on");
  Rng rng(options.seed);
  std::vector<std::size_t> order(bars.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  double last_loss = 0.0;
  for (std::uint64_t s = 0; s < options.steps; ++s) {
    const auto t0 = std::chrono::steady_clock::now();
    model.params().zero_grad();
    vq::Matrix pool(static_cast<Eigen::Index>(options.batch_size) * vq::kSlices,
                    model.codebook().dim());
    std::vector<int> codes;
    double loss = 0.0;
    std::size_t tokens = 0;
    for (std::size_t b = 0; b < options.batch_size; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[uniform_index(rng, i)]);
        }
        cursor = 0;
      }
      nn::Tape tape;
      VqVae::Forward f = model.forward(tape, bars[order[cursor++]], true, rng);
      const double value = tape.value(f.loss)(0, 0);
      if (!std::isfinite(value)) {
        throw Error(ErrorCode::kNonFiniteLoss, "VQ-VAE loss " + std::to_string(value) +
                                                   " at step " + std::to_string(s));
      }
      loss += value;
      tokens += f.tokens;
      tape.backward(f.loss, 1.0 / static_cast<double>(options.batch_size));
      pool.middleRows(static_cast<Eigen::Index>(b) * vq::kSlices, vq::kSlices) = f.slices;
      codes.insert(codes.end(), f.quantized.codes.begin(), f.quantized.codes.end());
    }
    const double lr = lr_schedule(adam.steps(), options.base_lr, options.warmup);
    adam.step(model.params(), lr);
    vq::ema_update(model.codebook(), pool, codes);
    if (options.restart_every > 0 && (s + 1) % options.restart_every == 0) {
      vq::random_restart(model.codebook(), pool, rng);
    }
    last_loss = loss / static_cast<double>(options.batch_size);
    if (options.log != nullptr) {
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      nlohmann::ordered_json rec;
      rec["step"] = adam.steps();
      rec["lr"] = lr;
      rec["loss"] = last_loss;
      rec["tokens_per_sec"] = seconds > 0.0 ? static_cast<double>(tokens) / seconds : 0.0;
      *options.log << rec.dump() << '\n';
    }
  }
  return last_loss;
}

}  // namespace descseq::model
