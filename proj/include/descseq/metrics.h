#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "descseq/score.h"

namespace descseq::metrics {

/// Standard deviation used when a bar has fewer than two values or zero
/// spread.
constexpr double kDegenerateSigma = 0.5;

struct GaussianFit {
  double mean = 0.0;
  double sigma = kDegenerateSigma;
};

double normal_cdf(double x, double mean, double sigma);

/// Area under min(N(mu1, s1), N(mu2, s2)), from the density intersection
/// points and normal CDFs. A zero sigma is replaced by kDegenerateSigma.
double gaussian_overlap(double mu1, double sigma1, double mu2, double sigma2);

/// Population mean and standard deviation; nullopt for an empty bar.
std::optional<GaussianFit> fit_gaussian(std::span<const double> values);

/// Overlap of two bars' fitted Gaussians: 1 when both are empty, 0 when one is.
double bar_overlap(std::span<const double> x, std::span<const double> y);

using BarFeatureSeries = std::vector<std::vector<double>>;

/// Mean per-bar overlap. Throws LengthMismatch.
double moa(const BarFeatureSeries& x, const BarFeatureSeries& y);

/// RMSE(x, x_hat) / mean(x). Throws LengthMismatch or ZeroMean.
double nd_nrmse(std::span<const double> truth, std::span<const double> predicted);

/// Cosine similarity; 1 when both vectors are zero, 0 when exactly one is.
/// The shorter vector is zero-padded.
double cosine_similarity(std::span<const double> a, std::span<const double> b);
/// Mean over bars. Throws LengthMismatch.
double cosine_sim_series(const std::vector<std::vector<double>>& x,
                         const std::vector<std::vector<double>>& y);

/// Onset counts per pitch class, drums excluded.
std::vector<double> chroma_vector(std::span<const Note> bar_notes);
/// 1 at every quantized position holding an onset (all instruments).
std::vector<double> grooving_vector(std::span<const Note> bar_notes, const Bar& bar,
                                    int ticks_per_quarter);

/// 2|A ∩ B| / (|A| + |B|); 1 for two empty sets.
double set_f1(std::span<const int> a, std::span<const int> b);
/// Mean per-bar set F1. Throws LengthMismatch.
double multilabel_f1(const std::vector<std::vector<int>>& truth,
                     const std::vector<std::vector<int>>& predicted);
/// Fraction of bars with equal signatures; a missing bar never matches.
/// Throws LengthMismatch.
double ts_accuracy(const std::vector<std::optional<TimeSignature>>& truth,
                   const std::vector<std::optional<TimeSignature>>& predicted);

/// exp(total_nll / tokens).
double perplexity(double total_nll, std::size_t tokens);

/// Shannon entropy (nats) of the pooled histogram of one REMI token class
/// (kInstrument or kChord) over all samples. Throws EmptyCorpus.
double token_entropy(const std::vector<std::vector<int>>& samples, bool chords);

/// Everything the fidelity metrics need about one bar.
struct BarFeatures {
  std::optional<TimeSignature> time_signature;  // absent for padding bars
  double note_density = 0.0;
  std::vector<int> instruments;  // order keys
  std::vector<int> chords;       // label ids, NoChord excluded
  std::vector<double> pitches;
  std::vector<double> velocities;
  std::vector<double> durations;  // positions
  std::vector<double> chroma;
  std::vector<double> grooving;
};

/// Per-bar features of a score (chords detected internally).
std::vector<BarFeatures> extract_bar_features(const Score& score);

struct MetricReport {
  double instrument_f1 = 0.0;
  double chord_f1 = 0.0;
  double ts_accuracy = 0.0;
  double nd_nrmse = 0.0;
  double pitch_moa = 0.0;
  double velocity_moa = 0.0;
  double duration_moa = 0.0;
  double chroma_sim = 0.0;
  double grooving_sim = 0.0;
  std::optional<double> perplexity;
  std::optional<double> h_inst;
  std::optional<double> h_chord;
};

/// Fidelity metrics of `generated` against `truth`. The generated piece is
/// truncated or padded with empty bars to the truth's bar count.
MetricReport compare(const Score& truth, const Score& generated);

/// Field-wise mean of the fidelity metrics; optional fields are left empty.
MetricReport average(std::span<const MetricReport> reports);

/// One JSON object per line with keys I, C, TS, ND, P, V, D, s_c, s_g, PPL,
/// H_inst, H_chord (null when absent).
std::string to_json_line(const MetricReport& report);

}  // namespace descseq::metrics
