#pragma once

#include <string>
#include <vector>

#include "descseq/nn/ops.h"
#include "descseq/nn/parameters.h"

namespace descseq::model {

using nn::Matrix;
using nn::Tape;
using nn::Var;

struct Linear {
  nn::Parameter* weight = nullptr;  // in x out
  nn::Parameter* bias = nullptr;    // 1 x out

  static Linear create(nn::ParameterSet& ps, const std::string& name, int in, int out,
                       double stddev, Rng& rng);
  Var operator()(Tape& t, Var x) const;
};

struct LayerNorm {
  nn::Parameter* gain = nullptr;
  nn::Parameter* bias = nullptr;

  static LayerNorm create(nn::ParameterSet& ps, const std::string& name, int d);
  Var operator()(Tape& t, Var x) const;
};

/// Multi-head attention. With a relative table ((2C - 1) x d_model, split
/// across heads by columns) the logits gain q_i . r_(j - i), computed with
/// the skew formulation.
struct Attention {
  Linear query, key, value, output;
  nn::Parameter* relative = nullptr;
  int heads = 1;
  int context = 0;

  static Attention create(nn::ParameterSet& ps, const std::string& name, int d, int heads,
                          int relative_context, Rng& rng);
  Var operator()(Tape& t, Var queries, Var keys, const nn::Mask& allowed) const;
};

struct FeedForward {
  Linear in, out;

  static FeedForward create(nn::ParameterSet& ps, const std::string& name, int d, int d_ff,
                            Rng& rng);
  Var operator()(Tape& t, Var x, double dropout, Rng& rng) const;
};

/// Post-LN encoder block: x = LN(x + SelfAttn(x)); x = LN(x + FF(x)).
struct EncoderLayer {
  Attention self;
  LayerNorm norm1;
  FeedForward ff;
  LayerNorm norm2;

  static EncoderLayer create(nn::ParameterSet& ps, const std::string& name, int d, int heads,
                             int d_ff, int context, Rng& rng);
  Var operator()(Tape& t, Var x, double dropout, Rng& rng) const;
};

/// Post-LN decoder block with causal relative self-attention and plain
/// cross-attention over the encoder memory.
struct DecoderLayer {
  Attention self;
  LayerNorm norm1;
  Attention cross;
  LayerNorm norm2;
  FeedForward ff;
  LayerNorm norm3;

  static DecoderLayer create(nn::ParameterSet& ps, const std::string& name, int d, int heads,
                             int d_ff, int context, Rng& rng);
  Var operator()(Tape& t, Var x, Var memory, double dropout, Rng& rng) const;
};

nn::Mask full_mask(Eigen::Index rows, Eigen::Index cols);
nn::Mask causal_mask(Eigen::Index n);

}  // namespace descseq::model
