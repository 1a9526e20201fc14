#include "descseq/model/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

#include "json.hpp"

#include "descseq/error.h"

namespace descseq::model {

double lr_schedule(std::uint64_t n, double base, double warmup) {
  return base / std::max(1.0, std::sqrt(static_cast<double>(n) / warmup));
}

Example make_example(const TrainingPair& pair, int context, std::size_t start) {
  const std::size_t window = static_cast<std::size_t>(context) + 1;
  const std::size_t end = std::min(pair.target.size(), start + window);
  if (end < start + 2) throw Error(ErrorCode::kDimensionMismatch, "target window too short");
  Example ex;
  ex.decoder = target_window(pair.target, start, end - start - 1);
  ex.targets.assign(pair.target.begin() + static_cast<std::ptrdiff_t>(start) + 1,
                    pair.target.begin() + static_cast<std::ptrdiff_t>(end));
  const int bar = std::max(1, ex.decoder.bars.front());
  ex.encoder = description_window(pair.description, bar, static_cast<std::size_t>(context));
  if (pair.latent_rows) {
    ex.encoder.latent =
        pair.latent_rows->middleRows(static_cast<Eigen::Index>(ex.encoder.source_offset),
                                     static_cast<Eigen::Index>(ex.encoder.tokens.size()));
  }
  return ex;
}

std::vector<Example> evaluation_windows(const TrainingPair& pair, int context) {
  std::vector<Example> out;
  if (pair.target.size() < 2) return out;
  for (std::size_t start = 0; start + 1 < pair.target.size();
       start += static_cast<std::size_t>(context)) {
    out.push_back(make_example(pair, context, start));
  }
  return out;
}

Trainer::Trainer(Seq2Seq& model, TrainOptions options)
    : model_(model), options_(options), rng_(options.seed) {}

StepResult Trainer::step(std::span<const Example> batch) {
  std::size_t tokens = 0;
  for (const Example& ex : batch) tokens += ex.targets.size();
  if (tokens == 0) throw Error(ErrorCode::kEmptyCorpus, "batch holds no target tokens");

  model_.params().zero_grad();
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    nn::Tape tape;
    const Var memory = model_.encode(tape, batch[i].encoder, true, rng_);
    const Var logits = model_.decode(tape, memory, batch[i].decoder, true, rng_);
    const Var nll = nn::cross_entropy(tape, logits, batch[i].targets);
    const double value = tape.value(nll)(0, 0);
    if (!std::isfinite(value)) {
      throw Error(ErrorCode::kNonFiniteLoss,
                  "loss " + std::to_string(value) + " at step " + std::to_string(adam_.steps()) +
                      ", batch item " + std::to_string(i) + ", " +
                      std::to_string(batch[i].targets.size()) + " targets");
    }
    total += value;
    tape.backward(nll, 1.0 / static_cast<double>(tokens));
  }
  StepResult r;
  r.lr = lr_schedule(adam_.steps(), options_.base_lr, options_.warmup);
  adam_.step(model_.params(), r.lr);
  r.step = adam_.steps();
  r.loss = total / static_cast<double>(tokens);
  r.tokens = tokens;
  return r;
}

StepResult Trainer::fit(const std::vector<TrainingPair>& data) {
  if (data.empty()) throw Error(ErrorCode::kEmptyCorpus, "no training pairs");
  const int context = model_.config().context_length;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  StepResult last;
  std::vector<Example> batch;
  for (std::uint64_t s = 0; s < options_.steps; ++s) {
    batch.clear();
    for (std::size_t b = 0; b < options_.batch_size; ++b) {
      if (cursor == order.size()) {
        for (std::size_t i = order.size(); i > 1; --i) {
          std::swap(order[i - 1], order[uniform_index(rng_, i)]);
        }
        cursor = 0;
      }
      const TrainingPair& pair = data[order[cursor++]];
      const std::size_t span = static_cast<std::size_t>(context) + 1;
      const std::size_t starts = pair.target.size() > span ? pair.target.size() - span + 1 : 1;
      batch.push_back(make_example(pair, context, uniform_index(rng_, starts)));
    }
    const auto t0 = std::chrono::steady_clock::now();
    last = step(batch);
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (options_.log != nullptr &&
        (last.step % options_.log_every == 0 || s + 1 == options_.steps)) {
      nlohmann::ordered_json rec;
      rec["step"] = last.step;
      rec["lr"] = last.lr;
      rec["loss"] = last.loss;
      rec["tokens_per_sec"] = seconds > 0.0 ? static_cast<double>(last.tokens) / seconds : 0.0;
      *options_.log << rec.dump() << '\n';
    }
    if (options_.stop_loss > 0.0 && last.loss < options_.stop_loss) break;
  }
  return last;
}

NllTotal corpus_nll(Seq2Seq& model, const std::vector<TrainingPair>& data) {
  NllTotal total;
  Rng rng(0);
  for (const TrainingPair& pair : data) {
    for (const Example& ex : evaluation_windows(pair, model.config().context_length)) {
      nn::Tape tape;
      const Var memory = model.encode(tape, ex.encoder, false, rng);
      const Var logits = model.decode(tape, memory, ex.decoder, false, rng);
      total.nll += tape.value(nn::cross_entropy(tape, logits, ex.targets))(0, 0);
      total.tokens += ex.targets.size();
    }
  }
  return total;
}

}  // namespace descseq::model
