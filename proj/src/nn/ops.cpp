#include "descseq/nn/ops.h"

#include <cmath>
#include <limits>
#include <memory>

#include "descseq/error.h"

namespace descseq::nn {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, what);
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.cols() == bv.rows(), "matmul shape mismatch");
  Matrix out(av.rows(), bv.cols());
  out.noalias() = av * bv;
  return t.push(std::move(out), {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(a.id)) tp.grad(a.id).noalias() += g * tp.value(b).transpose();
    if (tp.requires_grad(b.id)) tp.grad(b.id).noalias() += tp.value(a).transpose() * g;
  });
}

Var matmul_bt(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.cols() == bv.cols(), "matmul_bt shape mismatch");
  Matrix out(av.rows(), bv.rows());
  out.noalias() = av * bv.transpose();
  return t.push(std::move(out), {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(a.id)) tp.grad(a.id).noalias() += g * tp.value(b);
    if (tp.requires_grad(b.id)) tp.grad(b.id).noalias() += g.transpose() * tp.value(a);
  });
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.rows() == bv.rows() && av.cols() == bv.cols(), "add shape mismatch");
  return t.push(av + bv, {a.id, b.id}, [a, b](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(a.id)) tp.grad(a.id) += g;
    if (tp.requires_grad(b.id)) tp.grad(b.id) += g;
  });
}

Var add_bias(Tape& t, Var x, Var bias) {
  const Matrix& xv = t.value(x);
  const Matrix& bv = t.value(bias);
  require(bv.rows() == 1 && bv.cols() == xv.cols(), "bias shape mismatch");
  Matrix out = xv.rowwise() + bv.row(0);
  return t.push(std::move(out), {x.id, bias.id}, [x, bias](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(x.id)) tp.grad(x.id) += g;
    if (tp.requires_grad(bias.id)) tp.grad(bias.id) += g.colwise().sum();
  });
}

Var scale(Tape& t, Var x, double s) {
  return t.push(t.value(x) * s, {x.id}, [x, s](Tape& tp, int self) {
    tp.grad(x.id) += tp.grad(self) * s;
  });
}

Var relu(Tape& t, Var x) {
  Matrix out = t.value(x).cwiseMax(0.0);
  return t.push(std::move(out), {x.id}, [x](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    tp.grad(x.id) += (tp.value(x).array() > 0.0).select(g, 0.0);
  });
}

Var layer_norm(Tape& t, Var x, Var gain, Var bias, double eps) {
  const Matrix& xv = t.value(x);
  const Matrix& gv = t.value(gain);
  const Matrix& bv = t.value(bias);
  const Eigen::Index n = xv.cols();
  require(gv.cols() == n && bv.cols() == n, "layer_norm shape mismatch");
  auto xhat = std::make_shared<Matrix>(xv.rows(), n);
  auto inv_std = std::make_shared<Eigen::VectorXd>(xv.rows());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    const double mean = xv.row(r).mean();
    const double var = (xv.row(r).array() - mean).square().mean();
    (*inv_std)(r) = 1.0 / std::sqrt(var + eps);
    xhat->row(r) = (xv.row(r).array() - mean) * (*inv_std)(r);
  }
  Matrix out = (xhat->array().rowwise() * gv.row(0).array()).rowwise() + bv.row(0).array();
  return t.push(std::move(out), {x.id, gain.id, bias.id},
                [x, gain, bias, xhat, inv_std](Tape& tp, int self) {
                  const Matrix& g = tp.grad(self);
                  if (tp.requires_grad(gain.id)) {
                    tp.grad(gain.id) += (g.array() * xhat->array()).colwise().sum().matrix();
                  }
                  if (tp.requires_grad(bias.id)) tp.grad(bias.id) += g.colwise().sum();
                  if (!tp.requires_grad(x.id)) return;
                  const Matrix dxhat = g.array().rowwise() * tp.value(gain).row(0).array();
                  Matrix& dx = tp.grad(x.id);
                  for (Eigen::Index r = 0; r < g.rows(); ++r) {
                    const double m1 = dxhat.row(r).mean();
                    const double m2 = (dxhat.row(r).array() * xhat->row(r).array()).mean();
                    dx.row(r).array() +=
                        (*inv_std)(r) * (dxhat.row(r).array() - m1 - xhat->row(r).array() * m2);
                  }
                });
}

Var gather_rows(Tape& t, Var table, std::span<const int> rows) {
  const Matrix& tv = t.value(table);
  Matrix out(static_cast<Eigen::Index>(rows.size()), tv.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= tv.rows()) {
      throw Error(ErrorCode::kIndexOutOfTable,
                  "row " + std::to_string(rows[i]) + " outside table of " +
                      std::to_string(tv.rows()));
    }
    out.row(static_cast<Eigen::Index>(i)) = tv.row(rows[i]);
  }
  std::vector<int> idx(rows.begin(), rows.end());
  return t.push(std::move(out), {table.id}, [table, idx = std::move(idx)](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix& dt = tp.grad(table.id);
    for (std::size_t i = 0; i < idx.size(); ++i) dt.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
  });
}

Var skew(Tape& t, Var s, int keys) {
  const Matrix& sv = t.value(s);
  const Eigen::Index rows = sv.rows();
  require(sv.cols() == 2 * keys - 1 && rows <= keys, "skew shape mismatch");
  // Query i sits at key index i + offset.
  const Eigen::Index offset = keys - rows;
  Matrix out(rows, keys);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < keys; ++j) out(i, j) = sv(i, j - (i + offset) + keys - 1);
  }
  return t.push(std::move(out), {s.id}, [s, keys, offset](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix& ds = tp.grad(s.id);
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
      for (Eigen::Index j = 0; j < keys; ++j) ds(i, j - (i + offset) + keys - 1) += g(i, j);
    }
  });
}

Var masked_softmax(Tape& t, Var x, const Mask& allowed) {
  const Matrix& xv = t.value(x);
  require(allowed.rows() == xv.rows() && allowed.cols() == xv.cols(), "mask shape mismatch");
  Matrix out = Matrix::Zero(xv.rows(), xv.cols());
  for (Eigen::Index r = 0; r < xv.rows(); ++r) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      if (allowed(r, c)) mx = std::max(mx, xv(r, c));
    }
    if (!std::isfinite(mx)) continue;
    double sum = 0.0;
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      if (allowed(r, c)) {
        out(r, c) = std::exp(xv(r, c) - mx);
        sum += out(r, c);
      }
    }
    out.row(r) /= sum;
  }
  return t.push(std::move(out), {x.id}, [x](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    const Matrix& y = tp.value(self);
    const Eigen::VectorXd dots = (g.array() * y.array()).rowwise().sum();
    tp.grad(x.id) += (y.array() * (g.colwise() - dots).array()).matrix();
  });
}

Var reshape(Tape& t, Var x, int rows, int cols) {
  const Matrix& xv = t.value(x);
  require(static_cast<Eigen::Index>(rows) * cols == xv.size(), "reshape size mismatch");
  Matrix out = Eigen::Map<const Matrix>(xv.data(), rows, cols);
  return t.push(std::move(out), {x.id}, [x](Tape& tp, int self) {
    Matrix& dx = tp.grad(x.id);
    const Matrix& g = tp.grad(self);
    Eigen::Map<Matrix>(dx.data(), g.rows(), g.cols()) += g;
  });
}

Var slice_cols(Tape& t, Var x, int start, int count) {
  const Matrix& xv = t.value(x);
  require(start >= 0 && count >= 0 && start + count <= xv.cols(), "slice_cols out of range");
  Matrix out = xv.middleCols(start, count);
  return t.push(std::move(out), {x.id}, [x, start, count](Tape& tp, int self) {
    tp.grad(x.id).middleCols(start, count) += tp.grad(self);
  });
}

Var slice_rows(Tape& t, Var x, int start, int count) {
  const Matrix& xv = t.value(x);
  require(start >= 0 && count >= 0 && start + count <= xv.rows(), "slice_rows out of range");
  Matrix out = xv.middleRows(start, count);
  return t.push(std::move(out), {x.id}, [x, start, count](Tape& tp, int self) {
    tp.grad(x.id).middleRows(start, count) += tp.grad(self);
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  require(!parts.empty(), "concat of nothing");
  const Eigen::Index rows = t.value(parts[0]).rows();
  Eigen::Index cols = 0;
  for (Var p : parts) {
    require(t.value(p).rows() == rows, "concat_cols row mismatch");
    cols += t.value(p).cols();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleCols(at, t.value(p).cols()) = t.value(p);
    at += t.value(p).cols();
    ids.push_back(p.id);
  }
  return t.push(std::move(out), ids, [ids](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index at = 0;
    for (int id : ids) {
      const Eigen::Index c = tp.value(id).cols();
      if (tp.requires_grad(id)) tp.grad(id) += g.middleCols(at, c);
      at += c;
    }
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  require(!parts.empty(), "concat of nothing");
  const Eigen::Index cols = t.value(parts[0]).cols();
  Eigen::Index rows = 0;
  for (Var p : parts) {
    require(t.value(p).cols() == cols, "concat_rows column mismatch");
    rows += t.value(p).rows();
  }
  Matrix out(rows, cols);
  std::vector<int> ids;
  Eigen::Index at = 0;
  for (Var p : parts) {
    out.middleRows(at, t.value(p).rows()) = t.value(p);
    at += t.value(p).rows();
    ids.push_back(p.id);
  }
  return t.push(std::move(out), ids, [ids](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Eigen::Index at = 0;
    for (int id : ids) {
      const Eigen::Index r = tp.value(id).rows();
      if (tp.requires_grad(id)) tp.grad(id) += g.middleRows(at, r);
      at += r;
    }
  });
}

Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double mx = logits.row(r).maxCoeff();
    const double lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    out.row(r) = logits.row(r).array() - lse;
  }
  return out;
}

Var cross_entropy(Tape& t, Var logits, std::span<const int> targets) {
  const Matrix& lv = t.value(logits);
  require(static_cast<std::size_t>(lv.rows()) == targets.size(), "target count mismatch");
  auto logp = std::make_shared<Matrix>(log_softmax_rows(lv));
  double nll = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0) continue;
    if (targets[i] >= lv.cols()) {
      throw Error(ErrorCode::kIndexOutOfTable, "target id outside the vocabulary");
    }
    nll -= (*logp)(static_cast<Eigen::Index>(i), targets[i]);
  }
  Matrix out(1, 1);
  out(0, 0) = nll;
  std::vector<int> tg(targets.begin(), targets.end());
  return t.push(std::move(out), {logits.id},
                [logits, logp, tg = std::move(tg)](Tape& tp, int self) {
                  const double g = tp.grad(self)(0, 0);
                  Matrix& dl = tp.grad(logits.id);
                  for (std::size_t i = 0; i < tg.size(); ++i) {
                    if (tg[i] < 0) continue;
                    const auto r = static_cast<Eigen::Index>(i);
                    dl.row(r) += g * logp->row(r).array().exp().matrix();
                    dl(r, tg[i]) -= g;
                  }
                });
}

Var dropout(Tape& t, Var x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  const Matrix& xv = t.value(x);
  auto keep = std::make_shared<Matrix>(xv.rows(), xv.cols());
  const double inv = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < keep->size(); ++i) {
    keep->data()[i] = uniform01(rng) >= rate ? inv : 0.0;
  }
  Matrix out = xv.cwiseProduct(*keep);
  return t.push(std::move(out), {x.id}, [x, keep](Tape& tp, int self) {
    tp.grad(x.id) += tp.grad(self).cwiseProduct(*keep);
  });
}

Var straight_through(Tape& t, Var z, const Matrix& q) {
  require(t.value(z).rows() == q.rows() && t.value(z).cols() == q.cols(),
          "straight_through shape mismatch");
  return t.push(q, {z.id}, [z](Tape& tp, int self) { tp.grad(z.id) += tp.grad(self); });
}

Var sq_dist_mean(Tape& t, Var z, const Matrix& q) {
  const Matrix& zv = t.value(z);
  require(zv.rows() == q.rows() && zv.cols() == q.cols(), "sq_dist_mean shape mismatch");
  auto diff = std::make_shared<Matrix>(zv - q);
  const double rows = static_cast<double>(std::max<Eigen::Index>(1, zv.rows()));
  Matrix out(1, 1);
  out(0, 0) = diff->squaredNorm() / rows;
  return t.push(std::move(out), {z.id}, [z, diff, rows](Tape& tp, int self) {
    tp.grad(z.id) += (2.0 * tp.grad(self)(0, 0) / rows) * *diff;
  });
}

}  // namespace descseq::nn
