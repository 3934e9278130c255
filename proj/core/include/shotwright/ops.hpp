#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "shotwright/autograd.hpp"
#include "shotwright/error.hpp"

// Differentiable ops on a Tape. Matrices are [rows x cols]; a rank-1
// tensor of length d is treated as a single row.
namespace shotwright::ops {

Var matmul(Tape& t, Var a, Var b);
/// x[b×in] · weights[in×out] + bias[out]. Shape mismatch throws ShapeError.
Var linear(Tape& t, Var x, Var weights, Var bias);
Var add(Tape& t, Var a, Var b);
/// Adds row r % pattern.rows() of `pattern` to row r of `x`.
Var add_tiled(Tape& t, Var x, Var pattern);
Var scale(Tape& t, Var x, double factor);

Var gelu(Tape& t, Var x);
Var tanh(Tape& t, Var x);

/// Per-row normalization to zero mean / unit variance, then gain and shift.
Var layer_norm(Tape& t, Var x, Var gain, Var shift, double eps = 1e-5);

/// Scaled dot-product self-attention over groups of `seq_len` consecutive
/// rows. q, k, v are [groups*seq_len × d]; each of `heads` heads attends
/// over its d/heads slice. Returns the concatenated head outputs.
Var attention(Tape& t, Var q, Var k, Var v, std::size_t seq_len, std::size_t heads);
/// The softmax weights `attention` would use: [groups*heads*seq_len × seq_len].
Tensor attention_weights(const Tensor& q, const Tensor& k, std::size_t seq_len, std::size_t heads);

Var softmax(Tape& t, Var x);
Var log_softmax(Tape& t, Var x);
/// Mean over rows of -log softmax(logits)[target]. Out-of-range targets throw.
Var cross_entropy(Tape& t, Var logits, std::span<const int> targets);

/// For each group of `seq_len` rows, inserts `token` ([d] or [1×d]) before it.
Var prepend_token(Tape& t, Var x, Var token, std::size_t seq_len);
Var select_rows(Tape& t, Var x, std::vector<std::size_t> rows);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var slice_cols(Tape& t, Var x, std::size_t begin, std::size_t count);
/// Column x[r, index[r]] of every row, as [rows × 1].
Var pick(Tape& t, Var x, std::span<const int> index);

/// Same values under a new shape of equal size.
Var reshape(Tape& t, Var x, std::vector<std::size_t> shape);

Var sum(Tape& t, Var x);
/// Σ weights ⊙ x with constant weights of the same size.
Var weighted_sum(Tape& t, Var x, const Tensor& weights);
/// Σ over rows of -Σ_c exp(x) · x for rows of log-probabilities.
Var entropy_sum(Tape& t, Var log_probs);

}  // namespace shotwright::ops
