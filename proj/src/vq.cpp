#include "descseq/vq.h"

#include <cstring>
#include <fstream>
#include <limits>

#include "descseq/binary_io.h"
#include "descseq/error.h"

namespace descseq::vq {

namespace {

constexpr char kMagic[4] = {'D', 'S', 'C', 'B'};
constexpr std::uint32_t kVersion = 1;

void refresh_entries(Codebook& c) {
  for (Eigen::Index i = 0; i < c.entries.rows(); ++i) {
    c.entries.row(i) = c.sums.row(i) / std::max(c.counts(i), c.config.epsilon);
  }
}

}  // namespace

Codebook Codebook::random(const VqConfig& config, Rng& rng, double scale) {
  Matrix entries(config.entries, config.dim);
  for (Eigen::Index i = 0; i < entries.size(); ++i) {
    entries.data()[i] = scale * standard_normal(rng);
  }
  return from_entries(config, std::move(entries));
}

Codebook Codebook::from_entries(const VqConfig& config, Matrix entries) {
  Codebook c;
  c.config = config;
  c.config.entries = static_cast<int>(entries.rows());
  c.config.dim = static_cast<int>(entries.cols());
  c.counts = Eigen::VectorXd::Ones(entries.rows());
  c.sums = entries;
  c.entries = std::move(entries);
  return c;
}

void Codebook::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path.string());
  out.write(kMagic, 4);
  binio::write<std::uint32_t>(out, kVersion);
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(size()));
  binio::write<std::uint32_t>(out, static_cast<std::uint32_t>(dim()));
  binio::write<double>(out, config.decay);
  binio::write<double>(out, config.epsilon);
  binio::write<double>(out, config.restart_threshold);
  binio::write<double>(out, config.beta);
  binio::write_doubles(out, entries.data(), static_cast<std::size_t>(entries.size()));
  binio::write_doubles(out, counts.data(), static_cast<std::size_t>(counts.size()));
  binio::write_doubles(out, sums.data(), static_cast<std::size_t>(sums.size()));
  if (!out) throw Error(ErrorCode::kIoError, "failed writing " + path.string());
}

Codebook Codebook::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCode::kCheckpointError, path.string() + " is not a codebook file");
  }
  if (binio::read<std::uint32_t>(in) != kVersion) {
    throw Error(ErrorCode::kCheckpointError, "unsupported codebook version");
  }
  Codebook c;
  c.config.entries = static_cast<int>(binio::read<std::uint32_t>(in));
  c.config.dim = static_cast<int>(binio::read<std::uint32_t>(in));
  if (c.config.entries <= 0 || c.config.dim <= 0 || c.config.entries > (1 << 20) ||
      c.config.dim > (1 << 12)) {
    throw Error(ErrorCode::kCheckpointError, "implausible codebook shape");
  }
  c.config.decay = binio::read<double>(in);
  c.config.epsilon = binio::read<double>(in);
  c.config.restart_threshold = binio::read<double>(in);
  c.config.beta = binio::read<double>(in);
  c.entries.resize(c.config.entries, c.config.dim);
  c.counts.resize(c.config.entries);
  c.sums.resize(c.config.entries, c.config.dim);
  binio::read_doubles(in, c.entries.data(), static_cast<std::size_t>(c.entries.size()));
  binio::read_doubles(in, c.counts.data(), static_cast<std::size_t>(c.counts.size()));
  binio::read_doubles(in, c.sums.data(), static_cast<std::size_t>(c.sums.size()));
  return c;
}

Matrix slice(const Eigen::VectorXd& z, int count) {
  if (count <= 0 || z.size() % count != 0) {
    throw Error(ErrorCode::kDimensionMismatch,
                "latent of size " + std::to_string(z.size()) + " does not split into " +
                    std::to_string(count) + " slices");
  }
  const Eigen::Index width = z.size() / count;
  Matrix out(count, width);
  for (int s = 0; s < count; ++s) out.row(s) = z.segment(s * width, width).transpose();
  return out;
}

Eigen::VectorXd concat(const Matrix& slices) {
  Eigen::VectorXd z(slices.size());
  for (Eigen::Index s = 0; s < slices.rows(); ++s) {
    z.segment(s * slices.cols(), slices.cols()) = slices.row(s).transpose();
  }
  return z;
}

Quantized quantize(const Matrix& slices, const Codebook& codebook) {
  if (slices.cols() != codebook.entries.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "slice width differs from codebook width");
  }
  Quantized q;
  q.rows.resize(slices.rows(), slices.cols());
  double total = 0.0;
  for (Eigen::Index s = 0; s < slices.rows(); ++s) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < codebook.entries.rows(); ++i) {
      const double d = (codebook.entries.row(i) - slices.row(s)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(i);
      }
    }
    q.codes.push_back(best);
    q.rows.row(s) = codebook.entries.row(best);
    total += best_d;
  }
  q.distance = slices.rows() > 0 ? total / static_cast<double>(slices.rows()) : 0.0;
  q.commitment = codebook.config.beta * q.distance;
  return q;
}

void ema_update(Codebook& codebook, const Matrix& slices, std::span<const int> codes) {
  if (static_cast<std::size_t>(slices.rows()) != codes.size() ||
      slices.cols() != codebook.entries.cols()) {
    throw Error(ErrorCode::kDimensionMismatch, "assignment batch shape mismatch");
  }
  const double g = codebook.config.decay;
  Eigen::VectorXd n = Eigen::VectorXd::Zero(codebook.size());
  Matrix s = Matrix::Zero(codebook.size(), codebook.dim());
  for (std::size_t i = 0; i < codes.size(); ++i) {
    const int k = codes[i];
    if (k < 0 || k >= codebook.size()) {
      throw Error(ErrorCode::kCodeOutOfRange, "assignment to code " + std::to_string(k));
    }
    n(k) += 1.0;
    s.row(k) += slices.row(static_cast<Eigen::Index>(i));
  }
  codebook.counts = g * codebook.counts + (1.0 - g) * n;
  codebook.sums = g * codebook.sums + (1.0 - g) * s;
  refresh_entries(codebook);
}

int random_restart(Codebook& codebook, const Matrix& pool, Rng& rng) {
  if (pool.rows() == 0) return 0;
  int restarted = 0;
  for (Eigen::Index i = 0; i < codebook.entries.rows(); ++i) {
    if (codebook.counts(i) >= codebook.config.restart_threshold) continue;
    const auto pick = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::size_t>(pool.rows())));
    codebook.entries.row(i) = pool.row(pick);
    codebook.sums.row(i) = pool.row(pick);
    codebook.counts(i) = 1.0;
    ++restarted;
  }
  return restarted;
}

double vqvae_loss(double reconstruction_nll, double commitment, double beta) {
  return reconstruction_nll + beta * commitment;
}

}  // namespace descseq::vq
