#include "descseq/model/layers.h"

#include <cmath>

#include "descseq/error.h"

namespace descseq::model {

Linear Linear::create(nn::ParameterSet& ps, const std::string& name, int in, int out,
                      double stddev, Rng& rng) {
  Linear l;
  l.weight = &ps.add_normal(name + ".weight", in, out, stddev, rng);
  l.bias = &ps.add_constant(name + ".bias", 1, out, 0.0);
  return l;
}

Var Linear::operator()(Tape& t, Var x) const {
  return nn::add_bias(t, nn::matmul(t, x, t.parameter(*weight)), t.parameter(*bias));
}

LayerNorm LayerNorm::create(nn::ParameterSet& ps, const std::string& name, int d) {
  LayerNorm n;
  n.gain = &ps.add_constant(name + ".gain", 1, d, 1.0);
  n.bias = &ps.add_constant(name + ".bias", 1, d, 0.0);
  return n;
}

Var LayerNorm::operator()(Tape& t, Var x) const {
  return nn::layer_norm(t, x, t.parameter(*gain), t.parameter(*bias));
}

Attention Attention::create(nn::ParameterSet& ps, const std::string& name, int d, int heads,
                            int relative_context, Rng& rng) {
  const double std = 1.0 / std::sqrt(static_cast<double>(d));
  Attention a;
  a.query = Linear::create(ps, name + ".query", d, d, std, rng);
  a.key = Linear::create(ps, name + ".key", d, d, std, rng);
  a.value = Linear::create(ps, name + ".value", d, d, std, rng);
  a.output = Linear::create(ps, name + ".output", d, d, std, rng);
  a.heads = heads;
  a.context = relative_context;
  if (relative_context > 0) {
    a.relative = &ps.add_normal(name + ".relative", 2 * relative_context - 1, d, 0.02, rng);
  }
  return a;
}

Var Attention::operator()(Tape& t, Var queries, Var keys, const nn::Mask& allowed) const {
  const Var q = query(t, queries);
  const Var k = key(t, keys);
  const Var v = value(t, keys);
  const int d = static_cast<int>(t.value(q).cols());
  const int dh = d / heads;
  const int n_keys = static_cast<int>(t.value(k).rows());
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  Var rel_window{};
  if (relative != nullptr) {
    if (n_keys > context) {
      throw Error(ErrorCode::kContextOverflow, std::to_string(n_keys) +
                                                   " keys exceed the relative context of " +
                                                   std::to_string(context));
    }
    rel_window = nn::slice_rows(t, t.parameter(*relative), context - n_keys, 2 * n_keys - 1);
  }

  std::vector<Var> heads_out;
  heads_out.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var qh = nn::slice_cols(t, q, h * dh, dh);
    const Var kh = nn::slice_cols(t, k, h * dh, dh);
    const Var vh = nn::slice_cols(t, v, h * dh, dh);
    Var logits = nn::matmul_bt(t, qh, kh);
    if (relative != nullptr) {
      const Var rh = nn::slice_cols(t, rel_window, h * dh, dh);
      logits = nn::add(t, logits, nn::skew(t, nn::matmul_bt(t, qh, rh), n_keys));
    }
    const Var weights = nn::masked_softmax(t, nn::scale(t, logits, inv_sqrt), allowed);
    heads_out.push_back(nn::matmul(t, weights, vh));
  }
  return output(t, heads == 1 ? heads_out[0] : nn::concat_cols(t, heads_out));
}

FeedForward FeedForward::create(nn::ParameterSet& ps, const std::string& name, int d, int d_ff,
                                Rng& rng) {
  FeedForward f;
  f.in = Linear::create(ps, name + ".in", d, d_ff, 1.0 / std::sqrt(static_cast<double>(d)), rng);
  f.out = Linear::create(ps, name + ".out", d_ff, d, 1.0 / std::sqrt(static_cast<double>(d_ff)),
                         rng);
  return f;
}

Var FeedForward::operator()(Tape& t, Var x, double dropout, Rng& rng) const {
  return out(t, nn::dropout(t, nn::relu(t, in(t, x)), dropout, rng));
}

EncoderLayer EncoderLayer::create(nn::ParameterSet& ps, const std::string& name, int d, int heads,
                                  int d_ff, int context, Rng& rng) {
  EncoderLayer l;
  l.self = Attention::create(ps, name + ".self", d, heads, context, rng);
  l.norm1 = LayerNorm::create(ps, name + ".norm1", d);
  l.ff = FeedForward::create(ps, name + ".ff", d, d_ff, rng);
  l.norm2 = LayerNorm::create(ps, name + ".norm2", d);
  return l;
}

Var EncoderLayer::operator()(Tape& t, Var x, double dropout, Rng& rng) const {
  const Eigen::Index n = t.value(x).rows();
  const Var a = nn::dropout(t, self(t, x, x, full_mask(n, n)), dropout, rng);
  x = norm1(t, nn::add(t, x, a));
  const Var f = nn::dropout(t, ff(t, x, dropout, rng), dropout, rng);
  return norm2(t, nn::add(t, x, f));
}

DecoderLayer DecoderLayer::create(nn::ParameterSet& ps, const std::string& name, int d, int heads,
                                  int d_ff, int context, Rng& rng) {
  DecoderLayer l;
  l.self = Attention::create(ps, name + ".self", d, heads, context, rng);
  l.norm1 = LayerNorm::create(ps, name + ".norm1", d);
  l.cross = Attention::create(ps, name + ".cross", d, heads, 0, rng);
  l.norm2 = LayerNorm::create(ps, name + ".norm2", d);
  l.ff = FeedForward::create(ps, name + ".ff", d, d_ff, rng);
  l.norm3 = LayerNorm::create(ps, name + ".norm3", d);
  return l;
}

Var DecoderLayer::operator()(Tape& t, Var x, Var memory, double dropout, Rng& rng) const {
  const Eigen::Index n = t.value(x).rows();
  const Eigen::Index m = t.value(memory).rows();
  const Var a = nn::dropout(t, self(t, x, x, causal_mask(n)), dropout, rng);
  x = norm1(t, nn::add(t, x, a));
  const Var c = nn::dropout(t, cross(t, x, memory, full_mask(n, m)), dropout, rng);
  x = norm2(t, nn::add(t, x, c));
  const Var f = nn::dropout(t, ff(t, x, dropout, rng), dropout, rng);
  return norm3(t, nn::add(t, x, f));
}

nn::Mask full_mask(Eigen::Index rows, Eigen::Index cols) {
  return nn::Mask::Constant(rows, cols, 1);
}

nn::Mask causal_mask(Eigen::Index n) {
  nn::Mask m = nn::Mask::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i).head(i + 1).setConstant(1);
  return m;
}

}  // namespace descseq::model
