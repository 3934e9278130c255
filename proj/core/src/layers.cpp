#include "shotwright/layers.hpp"

#include <cmath>

#include "shotwright/error.hpp"

namespace shotwright {

namespace {
Tensor uniform_init(std::size_t in, std::size_t out, Rng& rng) {
  Tensor w = Tensor::matrix(in, out);
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : w.data()) v = rng.uniform(-bound, bound);
  return w;
}
}  // namespace

Linear::Linear(const std::string& name, std::size_t in, std::size_t out, Rng& rng)
    : weights(name + ".weight", uniform_init(in, out, rng)), bias(name + ".bias", Tensor({out})) {}

Var Linear::forward(Tape& t, Var x) { return ops::linear(t, x, t.parameter(weights), t.parameter(bias)); }

LayerNorm::LayerNorm(const std::string& name, std::size_t width)
    : gain(name + ".gain", Tensor({width}, 1.0)), shift(name + ".shift", Tensor({width})) {}

Var LayerNorm::forward(Tape& t, Var x) { return ops::layer_norm(t, x, t.parameter(gain), t.parameter(shift), eps); }

MultiHeadAttention::MultiHeadAttention(const std::string& name, std::size_t width, std::size_t heads_, Rng& rng)
    : heads(heads_),
      query(name + ".query", width, width, rng),
      key(name + ".key", width, width, rng),
      value(name + ".value", width, width, rng),
      output(name + ".output", width, width, rng) {
  if (heads == 0 || width % heads != 0) {
    throw ShapeError("attention width " + std::to_string(width) + " is not divisible by " + std::to_string(heads) +
                     " heads");
  }
}

Var MultiHeadAttention::forward(Tape& t, Var tokens, std::size_t seq_len) {
  const Var q = query.forward(t, tokens);
  const Var k = key.forward(t, tokens);
  const Var v = value.forward(t, tokens);
  return output.forward(t, ops::attention(t, q, k, v, seq_len, heads));
}

std::vector<Parameter*> MultiHeadAttention::parameters() {
  std::vector<Parameter*> out;
  for (auto* l : {&query, &key, &value, &output}) append(out, l->parameters());
  return out;
}

Var multi_head_attention(Tape& t, Var tokens, std::size_t seq_len, MultiHeadAttention& params) {
  return params.forward(t, tokens, seq_len);
}

void append(std::vector<Parameter*>& into, const std::vector<Parameter*>& more) {
  into.insert(into.end(), more.begin(), more.end());
}

}  // namespace shotwright
