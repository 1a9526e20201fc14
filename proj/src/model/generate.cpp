#include "descseq/model/generate.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "descseq/error.h"

namespace descseq::model {

int sample_token(std::span<const double> logits, const std::vector<char>& allowed,
                 double temperature, double top_p, Rng& rng) {
  int best = -1;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (allowed[i] && (best < 0 || logits[i] > logits[static_cast<std::size_t>(best)])) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) throw Error(ErrorCode::kGrammarError, "no admissible token");
  if (temperature <= 0.0) return best;

  std::vector<int> ids;
  std::vector<double> probs;
  const double mx = logits[static_cast<std::size_t>(best)];
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!allowed[i]) continue;
    ids.push_back(static_cast<int>(i));
    probs.push_back(std::exp((logits[i] - mx) / temperature));
    total += probs.back();
  }
  std::vector<std::size_t> order(ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  std::size_t keep = order.size();
  if (top_p < 1.0) {
    double cumulative = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
      cumulative += probs[order[k]] / total;
      if (cumulative >= top_p) {
        keep = k + 1;
        break;
      }
    }
  }
  double kept_mass = 0.0;
  for (std::size_t k = 0; k < keep; ++k) kept_mass += probs[order[k]];
  const double u = uniform01(rng) * kept_mass;
  double acc = 0.0;
  for (std::size_t k = 0; k < keep; ++k) {
    acc += probs[order[k]];
    if (u < acc) return ids[order[k]];
  }
  return ids[order[keep - 1]];
}

remi::TokenIds generate(Seq2Seq& model, std::span<const int> description_ids,
                        const SamplingConfig& sampling, const std::optional<Matrix>& latent_rows) {
  const auto context = static_cast<std::size_t>(model.config().context_length);
  const auto desc_bars = desc::token_bars(description_ids);
  const int described = desc_bars.empty() ? 0 : *std::max_element(desc_bars.begin(), desc_bars.end());
  const int bar_limit = std::min({sampling.max_bars, described, kMaxBars});
  const Vocabulary& vocab = Vocabulary::remi();
  const std::size_t max_tokens = std::max<std::size_t>(sampling.max_tokens, 3);

  Rng rng(sampling.seed);
  remi::TokenIds seq{kBosId};
  remi::GrammarState grammar(true);
  grammar.advance(kBosId, 0);
  std::size_t last_boundary = seq.size();
  std::vector<char> allowed;

  int cached_bar = -1;
  Matrix memory;
  while (true) {
    if (seq.size() + 1 >= max_tokens) {
      seq.resize(last_boundary);
      seq.push_back(kEosId);
      break;
    }
    const std::size_t start = seq.size() > context ? seq.size() - context : 0;
    const DecoderInput window = target_window(seq, start, context);
    const int first_bar = std::max(1, window.bars.front());
    if (first_bar != cached_bar) {
      EncoderInput enc = description_window(description_ids, first_bar, context);
      if (latent_rows) {
        enc.latent = latent_rows->middleRows(static_cast<Eigen::Index>(enc.source_offset),
                                             static_cast<Eigen::Index>(enc.tokens.size()));
      }
      memory = model.memory(enc);
      cached_bar = first_bar;
    }
    const Matrix logits = model.next_logits(memory, window);

    grammar.allowed(allowed);
    if (grammar.bar() >= bar_limit) {
      for (int id : vocab.ids_of(TokenKind::kBar)) allowed[static_cast<std::size_t>(id)] = 0;
    }
    const int next = sample_token(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.cols())),
                                  allowed, sampling.temperature, sampling.top_p, rng);
    grammar.advance(next, seq.size());
    seq.push_back(next);
    if (grammar.finished()) break;
    if (grammar.at_event_boundary()) last_boundary = seq.size();
  }
  return seq;
}

}  // namespace descseq::model
