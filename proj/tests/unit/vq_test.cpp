#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "descseq/error.h"
#include "descseq/nn/ops.h"
#include "descseq/vq.h"
#include "fixtures.h"

namespace descseq::vq {
namespace {

VqConfig small_config(int entries, int dim) {
  VqConfig c;
  c.entries = entries;
  c.dim = dim;
  return c;
}

Matrix rows(std::initializer_list<std::initializer_list<double>> values) {
  Matrix m(static_cast<Eigen::Index>(values.size()),
           static_cast<Eigen::Index>(values.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : values) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

// Exhaustive nearest neighbour with the smaller-index tie rule.
int brute_nearest(const Matrix& entries, const Eigen::RowVectorXd& x) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < entries.rows(); ++i) {
    double d = 0.0;
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      d += (entries(i, j) - x(j)) * (entries(i, j) - x(j));
    }
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

TEST(Slice, SplitsContiguously) {
  Eigen::VectorXd z(6);
  z << 1, 2, 3, 4, 5, 6;
  const Matrix s = slice(z, 3);
  ASSERT_EQ(s.rows(), 3);
  ASSERT_EQ(s.cols(), 2);
  EXPECT_EQ(s(1, 0), 3);
  EXPECT_EQ(s(2, 1), 6);
  EXPECT_EQ(concat(s), z);
}

TEST(Slice, RejectsUnevenSplit) {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(17);
  EXPECT_THROW(slice(z), Error);
  try {
    slice(z);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Slice, DefaultIsSixteenSlices) {
  Eigen::VectorXd z = Eigen::VectorXd::LinSpaced(128, 0, 127);
  const Matrix s = slice(z);
  EXPECT_EQ(s.rows(), 16);
  EXPECT_EQ(s.cols(), 8);
}

TEST(Quantize, ExactRowHasZeroCommitment) {
  const Codebook cb = Codebook::from_entries(small_config(3, 2), rows({{0, 0}, {1, 2}, {5, 5}}));
  const Quantized q = quantize(rows({{1, 2}}), cb);
  EXPECT_EQ(q.codes, std::vector<int>{1});
  EXPECT_EQ(q.commitment, 0.0);
}

TEST(Quantize, ToyCodebook) {
  const Codebook cb = Codebook::from_entries(small_config(2, 2), rows({{0, 0}, {10, 10}}));
  const Quantized q = quantize(rows({{1, 1}}), cb);
  EXPECT_EQ(q.codes[0], brute_nearest(cb.entries, rows({{1, 1}}).row(0)));
  EXPECT_EQ(q.codes[0], 0);
  EXPECT_DOUBLE_EQ(q.distance, 2.0);
  EXPECT_DOUBLE_EQ(q.commitment, 0.02 * 2.0);
}

TEST(Quantize, TiesGoToSmallerIndex) {
  const Codebook cb = Codebook::from_entries(small_config(2, 1), rows({{-1}, {1}}));
  EXPECT_EQ(quantize(rows({{0}}), cb).codes[0], 0);
}

TEST(Quantize, MatchesExhaustiveSearch) {
  Rng rng(5);
  const Codebook cb = Codebook::random(small_config(64, 4), rng);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix s(16, 4);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = standard_normal(rng);
    const Quantized q = quantize(s, cb);
    double total = 0.0;
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const int k = brute_nearest(cb.entries, s.row(r));
      ASSERT_EQ(q.codes[static_cast<std::size_t>(r)], k);
      EXPECT_EQ(q.rows.row(r), cb.entries.row(k));
      total += (s.row(r) - cb.entries.row(k)).squaredNorm();
    }
    EXPECT_NEAR(q.distance, total / 16.0, 1e-12);
  }
}

TEST(Quantize, Idempotent) {
  Rng rng(6);
  const Codebook cb = Codebook::random(small_config(32, 3), rng);
  Matrix s(16, 3);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = standard_normal(rng);
  const Quantized once = quantize(s, cb);
  const Quantized twice = quantize(once.rows, cb);
  EXPECT_EQ(once.codes, twice.codes);
  EXPECT_EQ(twice.commitment, 0.0);
}

TEST(Quantize, WidthMismatchThrows) {
  const Codebook cb = Codebook::from_entries(small_config(2, 2), rows({{0, 0}, {1, 1}}));
  EXPECT_THROW(quantize(rows({{1, 1, 1}}), cb), Error);
}

TEST(EmaUpdate, ClosedFormForRepeatedAssignment) {
  VqConfig config = small_config(2, 2);
  Codebook cb = Codebook::from_entries(config, rows({{0, 0}, {4, 4}}));
  const Matrix x = rows({{2, -2}});
  const std::vector<int> codes = {0};
  for (int t = 1; t <= 50; ++t) {
    ema_update(cb, x, codes);
    const double g = std::pow(0.99, t);
    // counts stay at 1, so the entry is g^t * e0 + (1 - g^t) * x.
    EXPECT_NEAR(cb.counts(0), 1.0, 1e-12);
    EXPECT_NEAR(cb.entries(0, 0), (1 - g) * 2.0, 1e-12);
    EXPECT_NEAR(cb.entries(0, 1), (1 - g) * -2.0, 1e-12);
    EXPECT_NEAR(cb.counts(1), g, 1e-12);
    EXPECT_NEAR(cb.entries(1, 0), 4.0, 1e-12);
  }
}

TEST(EmaUpdate, ZeroDecayIsBatchMean) {
  VqConfig config = small_config(2, 1);
  config.decay = 0.0;
  Codebook cb = Codebook::from_entries(config, rows({{0}, {9}}));
  const std::vector<int> codes = {0, 0, 0};
  ema_update(cb, rows({{1}, {2}, {6}}), codes);
  EXPECT_DOUBLE_EQ(cb.entries(0, 0), 3.0);
  EXPECT_DOUBLE_EQ(cb.counts(0), 3.0);
  EXPECT_DOUBLE_EQ(cb.counts(1), 0.0);
}

TEST(EmaUpdate, UnassignedCodeOnlyDecaysCount) {
  Codebook cb = Codebook::from_entries(small_config(2, 1), rows({{3}, {7}}));
  ema_update(cb, rows({{4}}), std::vector<int>{0});
  EXPECT_NEAR(cb.counts(1), 0.99, 1e-15);
  EXPECT_NEAR(cb.entries(1, 0), 7.0, 1e-12);
}

TEST(EmaUpdate, RejectsBadAssignments) {
  Codebook cb = Codebook::from_entries(small_config(2, 1), rows({{3}, {7}}));
  EXPECT_THROW(ema_update(cb, rows({{1}}), std::vector<int>{}), Error);
  EXPECT_THROW(ema_update(cb, rows({{1}}), std::vector<int>{2}), Error);
}

TEST(RandomRestart, HealthyCodebookUnchanged) {
  Rng rng(1);
  Codebook cb = Codebook::from_entries(small_config(2, 1), rows({{3}, {7}}));
  cb.counts << 2.0, 1.5;
  const Codebook before = cb;
  EXPECT_EQ(random_restart(cb, rows({{100}}), rng), 0);
  EXPECT_EQ(cb.entries, before.entries);
  EXPECT_EQ(cb.counts, before.counts);
}

TEST(RandomRestart, DeadEntryTakesPoolRow) {
  Rng rng(1);
  Codebook cb = Codebook::from_entries(small_config(2, 1), rows({{3}, {7}}));
  cb.counts << 2.0, 0.1;
  EXPECT_EQ(random_restart(cb, rows({{100}}), rng), 1);
  EXPECT_EQ(cb.entries(1, 0), 100.0);
  EXPECT_EQ(cb.counts(1), 1.0);
  EXPECT_EQ(cb.entries(0, 0), 3.0);
}

TEST(RandomRestart, MinimumCountProperty) {
  Rng rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    VqConfig config = small_config(8, 2);
    config.restart_threshold = 3.0 * uniform01(rng);
    Codebook cb = Codebook::random(config, rng);
    for (int i = 0; i < 8; ++i) cb.counts(i) = 2.0 * uniform01(rng);
    Matrix pool(5, 2);
    for (Eigen::Index i = 0; i < pool.size(); ++i) pool.data()[i] = standard_normal(rng);
    const Eigen::VectorXd before = cb.counts;
    random_restart(cb, pool, rng);
    EXPECT_GE(cb.counts.minCoeff(), std::min(config.restart_threshold, 1.0));
    for (int i = 0; i < 8; ++i) {
      if (before(i) >= config.restart_threshold) continue;
      bool from_pool = false;
      for (Eigen::Index r = 0; r < pool.rows(); ++r) {
        from_pool = from_pool || cb.entries.row(i) == pool.row(r);
      }
      EXPECT_TRUE(from_pool);
    }
  }
}

TEST(RandomRestart, NearClusterCodesKeepHighCounts) {
  Rng rng(3);
  const Matrix centers = rows({{2, 2}, {-2, 2}, {-2, -2}, {2, -2}});
  Codebook cb = Codebook::random(small_config(16, 2), rng, 0.1);
  for (int step = 0; step < 1500; ++step) {
    Matrix batch(32, 2);
    for (Eigen::Index r = 0; r < 32; ++r) {
      batch.row(r) = centers.row(r % 4);
      batch(r, 0) += 0.03 * standard_normal(rng);
      batch(r, 1) += 0.03 * standard_normal(rng);
    }
    const Quantized q = quantize(batch, cb);
    ema_update(cb, batch, q.codes);
    if (step % 50 == 49 && step < 1000) random_restart(cb, batch, rng);
  }
  int live = 0;
  for (int i = 0; i < 16; ++i) {
    const Eigen::RowVectorXd e = cb.entries.row(i);
    double nearest = std::numeric_limits<double>::infinity();
    for (int c = 0; c < 4; ++c) nearest = std::min(nearest, (e - centers.row(c)).norm());
    if (cb.counts(i) > 0.5) {
      ++live;
      EXPECT_LT(nearest, 0.05);
    }
  }
  EXPECT_GE(live, 4);
}

TEST(VqvaeLoss, Arithmetic) {
  EXPECT_DOUBLE_EQ(vqvae_loss(2.0, 0.0, 0.02), 2.0);
  EXPECT_DOUBLE_EQ(vqvae_loss(2.0, 5.0, 0.02), 2.1);
}

TEST(StraightThrough, CodebookReceivesNoGradient) {
  nn::Parameter table{"codebook", rows({{0, 0}, {10, 10}}), Matrix::Zero(2, 2), false};
  nn::Tape t;
  const nn::Var z = t.leaf(rows({{1, 1}, {9, 8}}));
  const Codebook cb = Codebook::from_entries(small_config(2, 2), table.value);
  const Quantized q = quantize(t.value(z), cb);
  const nn::Var selected = nn::gather_rows(t, t.parameter(table), q.codes);
  const nn::Var zq = nn::straight_through(t, z, t.value(selected));
  const nn::Var commit = nn::sq_dist_mean(t, z, t.value(selected));
  const nn::Var total = nn::add(t, nn::cross_entropy(t, zq, std::vector<int>{0, 1}),
                                nn::scale(t, commit, 0.02));
  t.backward(total);
  EXPECT_EQ(table.grad.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_GT(t.grad(z).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Codebook, SaveLoadRoundTrip) {
  Rng rng(2);
  VqConfig config = small_config(16, 4);
  config.decay = 0.9;
  Codebook cb = Codebook::random(config, rng);
  cb.counts(3) = 0.25;
  const auto dir = fixtures::fresh_dir("vq_codebook");
  cb.save(dir / "c.codebook");
  const Codebook back = Codebook::load(dir / "c.codebook");
  EXPECT_EQ(back.entries, cb.entries);
  EXPECT_EQ(back.counts, cb.counts);
  EXPECT_EQ(back.sums, cb.sums);
  EXPECT_EQ(back.config.decay, 0.9);
  EXPECT_EQ(back.config.beta, cb.config.beta);
}

TEST(Codebook, LoadRejectsGarbage) {
  const auto dir = fixtures::fresh_dir("vq_garbage");
  std::ofstream(dir / "bad.codebook") << "nonsense";
  EXPECT_THROW(Codebook::load(dir / "bad.codebook"), Error);
}

}  // namespace
}  // namespace descseq::vq
