#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <span>
#include <vector>

#include "descseq/random.h"

namespace descseq::vq {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr int kSlices = 16;

struct VqConfig {
  int entries = 2048;
  int dim = 8;
  double decay = 0.99;
  double epsilon = 1e-5;
  double restart_threshold = 1.0;
  double beta = 0.02;
};

/// Shared codebook with EMA statistics. Row i of `entries` always equals
/// sums.row(i) / max(counts(i), epsilon).
struct Codebook {
  VqConfig config;
  Matrix entries;
  Eigen::VectorXd counts;
  Matrix sums;

  /// Entries drawn from N(0, scale^2), counts 1.
  static Codebook random(const VqConfig& config, Rng& rng, double scale = 1.0);
  /// Entries given explicitly, counts 1.
  static Codebook from_entries(const VqConfig& config, Matrix entries);

  int size() const { return static_cast<int>(entries.rows()); }
  int dim() const { return static_cast<int>(entries.cols()); }

  void save(const std::filesystem::path& path) const;
  static Codebook load(const std::filesystem::path& path);
};

/// Contiguous equal split of z into `count` rows. Throws DimensionMismatch.
Matrix slice(const Eigen::VectorXd& z, int count = kSlices);
Eigen::VectorXd concat(const Matrix& slices);

struct Quantized {
  std::vector<int> codes;
  Matrix rows;  // selected codebook rows, one per slice
  /// Mean over slices of the squared distance to the selected row.
  double distance = 0.0;
  /// beta * distance.
  double commitment = 0.0;
};

/// Nearest row per slice (ties to the smaller index).
Quantized quantize(const Matrix& slices, const Codebook& codebook);

/// counts <- g counts + (1 - g) n_i; sums <- g sums + (1 - g) sum of
/// assigned slices; entries recomputed. Throws DimensionMismatch.
void ema_update(Codebook& codebook, const Matrix& slices, std::span<const int> codes);

/// Re-seeds every entry whose count is below the threshold with a uniformly
/// drawn pool row and resets its count to 1. Returns the number restarted.
int random_restart(Codebook& codebook, const Matrix& pool, Rng& rng);

/// reconstruction_nll + beta * commitment.
double vqvae_loss(double reconstruction_nll, double commitment, double beta);

}  // namespace descseq::vq
