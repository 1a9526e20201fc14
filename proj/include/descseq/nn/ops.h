#pragma once

#include <span>

#include "descseq/nn/tape.h"
#include "descseq/random.h"

namespace descseq::nn {

/// 1 marks an allowed (query, key) pair.
using Mask = Eigen::Matrix<char, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Var matmul(Tape& t, Var a, Var b);
/// a * b^T
Var matmul_bt(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
/// Adds the 1 x n row `bias` to every row of x.
Var add_bias(Tape& t, Var x, Var bias);
Var scale(Tape& t, Var x, double s);
Var relu(Tape& t, Var x);
/// Row-wise normalization with gain and bias (both 1 x n).
Var layer_norm(Tape& t, Var x, Var gain, Var bias, double eps = 1e-5);
/// Rows of `table` selected by `rows`.
Var gather_rows(Tape& t, Var table, std::span<const int> rows);
/// Relative-position skew: s is T x (2K - 1) with column m holding relative
/// distance m - (K - 1); returns the T x K matrix out(i, j) = s(i, j - i + K - 1)
/// for queries aligned with the last T keys (T <= K).
Var skew(Tape& t, Var s, int keys);
/// Row-wise softmax over allowed entries; fully masked rows become zero.
Var masked_softmax(Tape& t, Var x, const Mask& allowed);
/// Row-major reinterpretation to rows x cols.
Var reshape(Tape& t, Var x, int rows, int cols);
Var slice_cols(Tape& t, Var x, int start, int count);
Var slice_rows(Tape& t, Var x, int start, int count);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var concat_rows(Tape& t, std::span<const Var> parts);
/// Summed negative log-likelihood of `targets` under row-wise softmax of
/// `logits` (1 x 1). Negative targets are ignored.
Var cross_entropy(Tape& t, Var logits, std::span<const int> targets);
/// Inverted dropout; identity when rate is 0.
Var dropout(Tape& t, Var x, double rate, Rng& rng);
/// Forward value q, gradient passed unchanged to z.
Var straight_through(Tape& t, Var z, const Matrix& q);
/// Mean over rows of ||z_i - q_i||^2 with q held constant (1 x 1).
Var sq_dist_mean(Tape& t, Var z, const Matrix& q);

/// Row-wise log-softmax without a tape.
Matrix log_softmax_rows(const Matrix& logits);

}  // namespace descseq::nn
