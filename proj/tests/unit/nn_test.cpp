#include <gtest/gtest.h>

#include <cmath>

#include "descseq/error.h"
#include "descseq/nn/adam.h"
#include "descseq/nn/ops.h"
#include "descseq/nn/parameters.h"
#include "gradcheck.h"

namespace descseq::nn {
namespace {

Matrix random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * standard_normal(rng);
  return m;
}

Parameter param(const std::string& name, Matrix value) {
  Parameter p{name, std::move(value), Matrix(), true};
  p.grad = Matrix::Zero(p.value.rows(), p.value.cols());
  return p;
}

// Scalar sum(W .* x) for a fixed weight pattern W.
Var weighted_sum(Tape& t, Var x) {
  const Matrix& v = t.value(x);
  const int n = static_cast<int>(v.size());
  Matrix w(n, 1);
  for (int i = 0; i < n; ++i) w(i, 0) = std::sin(1.0 + 0.7 * i);
  return matmul(t, reshape(t, x, 1, n), t.constant(w));
}

constexpr double kTolerance = 1e-6;

class OpGradient : public ::testing::Test {
 protected:
  Rng rng{11};
};

TEST_F(OpGradient, Matmul) {
  Parameter a = param("a", random_matrix(rng, 3, 4));
  Parameter b = param("b", random_matrix(rng, 4, 2));
  Parameter c = param("c", random_matrix(rng, 5, 2));
  auto r = fixtures::check_gradients({&a, &b, &c}, [&](Tape& t) {
    const Var ab = matmul(t, t.parameter(a), t.parameter(b));
    return weighted_sum(t, matmul_bt(t, ab, t.parameter(c)));
  });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
}

TEST_F(OpGradient, AddBiasScaleRelu) {
  Parameter x = param("x", random_matrix(rng, 3, 5));
  Parameter y = param("y", random_matrix(rng, 3, 5));
  Parameter b = param("b", random_matrix(rng, 1, 5));
  auto r = fixtures::check_gradients({&x, &y, &b}, [&](Tape& t) {
    const Var s = add(t, t.parameter(x), t.parameter(y));
    return weighted_sum(t, relu(t, scale(t, add_bias(t, s, t.parameter(b)), -1.5)));
  });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
}

TEST_F(OpGradient, LayerNorm) {
  Parameter x = param("x", random_matrix(rng, 4, 6));
  Parameter g = param("g", random_matrix(rng, 1, 6));
  Parameter b = param("b", random_matrix(rng, 1, 6));
  auto r = fixtures::check_gradients({&x, &g, &b}, [&](Tape& t) {
    return weighted_sum(t, layer_norm(t, t.parameter(x), t.parameter(g), t.parameter(b)));
  });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
}

TEST_F(OpGradient, GatherRowsAccumulatesRepeats) {
  Parameter table = param("table", random_matrix(rng, 5, 3));
  const std::vector<int> rows = {4, 1, 4, 0};
  auto r = fixtures::check_gradients({&table}, [&](Tape& t) {
    return weighted_sum(t, gather_rows(t, t.parameter(table), rows));
  });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
  EXPECT_EQ(table.grad.row(2).cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(OpGradient, SkewAndMaskedSoftmax) {
  Parameter s = param("s", random_matrix(rng, 3, 7));
  Mask allowed = Mask::Ones(3, 4);
  allowed(0, 3) = 0;
  allowed(1, 0) = 0;
  auto r = fixtures::check_gradients({&s}, [&](Tape& t) {
    return weighted_sum(t, masked_softmax(t, skew(t, t.parameter(s), 4), allowed));
  });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
}

TEST_F(OpGradient, ShapeOps) {
  Parameter x = param("x", random_matrix(rng, 4, 6));
  Parameter y = param("y", random_matrix(rng, 2, 6));
  auto r = fixtures::check_gradients({&x, &y}, [&](Tape& t) {
    const Var xv = t.parameter(x);
    const std::vector<Var> cols = {slice_cols(t, xv, 1, 2), slice_cols(t, xv, 4, 2)};
    const Var left = concat_cols(t, cols);  // 4 x 4
    const std::vector<Var> stack = {slice_rows(t, left, 1, 2),
                                    reshape(t, slice_cols(t, t.parameter(y), 0, 4), 2, 4)};
    return weighted_sum(t, concat_rows(t, stack));
  });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
}

TEST_F(OpGradient, CrossEntropyIgnoresNegativeTargets) {
  Parameter logits = param("logits", random_matrix(rng, 4, 5));
  const std::vector<int> targets = {2, -1, 0, 4};
  auto r = fixtures::check_gradients(
      {&logits}, [&](Tape& t) { return cross_entropy(t, t.parameter(logits), targets); });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
  EXPECT_EQ(logits.grad.row(1).cwiseAbs().maxCoeff(), 0.0);
}

TEST_F(OpGradient, DropoutWithFixedMask) {
  Parameter x = param("x", random_matrix(rng, 3, 4));
  auto r = fixtures::check_gradients({&x}, [&](Tape& t) {
    Rng mask_rng(3);
    return weighted_sum(t, dropout(t, t.parameter(x), 0.4, mask_rng));
  });
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
}

TEST_F(OpGradient, StraightThroughAndCommitment) {
  Parameter z = param("z", random_matrix(rng, 3, 2));
  const Matrix q = random_matrix(rng, 3, 2);
  auto st = [&](Tape& t) {
    const Var zv = t.parameter(z);
    return add(t, weighted_sum(t, straight_through(t, zv, q)),
               scale(t, sq_dist_mean(t, zv, q), 0.02));
  };
  // The straight-through gradient equals that of the identity map plus the
  // commitment term.
  auto identity = [&](Tape& t) {
    const Var zv = t.parameter(z);
    return add(t, weighted_sum(t, zv), scale(t, sq_dist_mean(t, zv, q), 0.02));
  };
  auto r = fixtures::check_gradients({&z}, identity);
  EXPECT_LT(r.max_relative_error, kTolerance) << r.worst;
  const Matrix expected = z.grad;
  z.grad.setZero();
  Tape t;
  t.backward(st(t));
  EXPECT_TRUE(z.grad.isApprox(expected, 1e-14));
}

TEST(Ops, SkewMatchesDefinition) {
  Tape t;
  Matrix s(2, 5);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = static_cast<double>(i);
  const Matrix out = t.value(skew(t, t.constant(s), 3));
  // Query i sits at key i + 1; column m holds distance m - 2.
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 3; ++j) EXPECT_EQ(out(i, j), s(i, (j - (i + 1)) + 2));
  }
}

TEST(Ops, MaskedSoftmaxRows) {
  Tape t;
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  Mask m = Mask::Ones(2, 3);
  m.row(1).setZero();
  m(0, 2) = 0;
  const Matrix p = t.value(masked_softmax(t, t.constant(x), m));
  EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-15);
  EXPECT_EQ(p(0, 2), 0.0);
  EXPECT_NEAR(p(0, 1) / p(0, 0), std::exp(1.0), 1e-12);
  EXPECT_EQ(p.row(1).cwiseAbs().sum(), 0.0);
}

TEST(Ops, CrossEntropyValue) {
  Tape t;
  Matrix x(1, 3);
  x << 0.5, -1.0, 2.0;
  const double v = t.value(cross_entropy(t, t.constant(x), std::vector<int>{1}))(0, 0);
  const double lse = std::log(std::exp(0.5) + std::exp(-1.0) + std::exp(2.0));
  EXPECT_NEAR(v, lse + 1.0, 1e-12);
  EXPECT_NEAR(log_softmax_rows(x)(0, 1), -1.0 - lse, 1e-12);
  EXPECT_THROW(cross_entropy(t, t.constant(x), std::vector<int>{3}), Error);
}

TEST(Ops, GatherRowsRejectsOutOfTable) {
  Tape t;
  try {
    gather_rows(t, t.constant(Matrix::Zero(2, 2)), std::vector<int>{2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIndexOutOfTable);
  }
}

TEST(Ops, StraightThroughForwardIsQuantized) {
  Tape t;
  const Matrix q = Matrix::Constant(2, 2, 3.0);
  EXPECT_EQ(t.value(straight_through(t, t.constant(Matrix::Zero(2, 2)), q)), q);
}

TEST(Adam, ZeroLearningRateKeepsParameters) {
  Rng rng(1);
  ParameterSet ps;
  ps.add_normal("w", 3, 3, 1.0, rng);
  ps.add_normal("b", 1, 3, 1.0, rng, false);
  ps[0].grad = Matrix::Ones(3, 3);
  ps[1].grad = Matrix::Ones(1, 3);
  const Matrix w = ps[0].value;
  const Matrix b = ps[1].value;
  Adam adam;
  adam.step(ps, 0.0);
  EXPECT_EQ(ps[0].value, w);
  EXPECT_EQ(ps[1].value, b);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, FirstStepMatchesHandComputation) {
  ParameterSet ps;
  ps.add("w", Matrix::Constant(1, 1, 2.0));
  ps.add("b", Matrix::Constant(1, 1, 2.0), false);
  ps[0].grad = Matrix::Constant(1, 1, 0.5);
  ps[1].grad = Matrix::Constant(1, 1, 0.5);
  Adam adam;
  adam.step(ps, 0.1);
  // Bias-corrected moments give m / (sqrt(v) + eps) = 0.5 / (0.5 + 1e-6).
  const double update = 0.1 * 0.5 / (0.5 + 1e-6);
  EXPECT_NEAR(ps[1].value(0, 0), 2.0 - update, 1e-12);
  EXPECT_NEAR(ps[0].value(0, 0), 2.0 - update - 0.1 * 0.01 * 2.0, 1e-12);
}

}  // namespace
}  // namespace descseq::nn
