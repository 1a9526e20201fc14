#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "descseq/model/seq2seq.h"
#include "descseq/nn/adam.h"

namespace descseq::model {

/// base / max(1, sqrt(n / warmup)).
double lr_schedule(std::uint64_t n, double base = 1e-4, double warmup = 4000.0);

/// One (F(x), x) pair as token ids.
struct TrainingPair {
  std::vector<int> description;
  std::vector<int> target;
  std::optional<Matrix> latent_rows;  // injection pathway only
};

/// A single context window with its next-token targets.
struct Example {
  EncoderInput encoder;
  DecoderInput decoder;
  std::vector<int> targets;
};

/// Window of at most context + 1 target tokens starting at `start`; the
/// description window begins at the bar of the first window token.
Example make_example(const TrainingPair& pair, int context, std::size_t start);

/// Non-overlapping windows covering every target token once.
std::vector<Example> evaluation_windows(const TrainingPair& pair, int context);

struct TrainOptions {
  std::uint64_t steps = 1000;
  std::size_t batch_size = 8;
  double base_lr = 1e-3;
  double warmup = 4000.0;
  std::uint64_t seed = 1;
  /// Stop once a step's mean loss is below this value (0 disables).
  double stop_loss = 0.0;
  /// Receives one JSON record per logged step.
  std::ostream* log = nullptr;
  std::uint64_t log_every = 1;
};

struct StepResult {
  std::uint64_t step = 0;  // 1-based count of updates done
  double lr = 0.0;
  double loss = 0.0;  // mean NLL per target token
  std::size_t tokens = 0;
};

class Trainer {
 public:
  Trainer(Seq2Seq& model, TrainOptions options);

  /// One optimizer update on the batch. Throws NonFiniteLoss.
  StepResult step(std::span<const Example> batch);
  /// Runs options.steps updates (or until stop_loss) over shuffled pairs.
  StepResult fit(const std::vector<TrainingPair>& data);

  nn::Adam& optimizer() { return adam_; }

 private:
  Seq2Seq& model_;
  TrainOptions options_;
  nn::Adam adam_;
  Rng rng_;
};

struct NllTotal {
  double nll = 0.0;
  std::size_t tokens = 0;
};

/// Summed NLL of every target token (dropout off).
NllTotal corpus_nll(Seq2Seq& model, const std::vector<TrainingPair>& data);

}  // namespace descseq::model
