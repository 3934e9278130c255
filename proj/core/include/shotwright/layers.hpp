#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "shotwright/autograd.hpp"
#include "shotwright/ops.hpp"
#include "shotwright/rng.hpp"

namespace shotwright {

/// Affine layer with weights [in×out] and bias [out]. Weights start
/// uniform in ±1/sqrt(in), bias at zero.
struct Linear {
  Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Var forward(Tape& t, Var x);
  std::vector<Parameter*> parameters() { return {&weights, &bias}; }

  Parameter weights;
  Parameter bias;
};

struct LayerNorm {
  LayerNorm(const std::string& name, std::size_t width);

  Var forward(Tape& t, Var x);
  std::vector<Parameter*> parameters() { return {&gain, &shift}; }

  Parameter gain;
  Parameter shift;
  double eps = 1e-5;
};

/// Self-attention with query/key/value/output projections.
struct MultiHeadAttention {
  /// Throws ShapeError unless `heads` divides `width`.
  MultiHeadAttention(const std::string& name, std::size_t width, std::size_t heads, Rng& rng);

  /// tokens: [groups*seq_len × width]
  Var forward(Tape& t, Var tokens, std::size_t seq_len);
  std::vector<Parameter*> parameters();

  std::size_t heads;
  Linear query;
  Linear key;
  Linear value;
  Linear output;
};

/// Free-function form over an existing module.
Var multi_head_attention(Tape& t, Var tokens, std::size_t seq_len, MultiHeadAttention& params);

/// Appends `more` to `into`.
void append(std::vector<Parameter*>& into, const std::vector<Parameter*>& more);

}  // namespace shotwright
