#include "shotwright/networks.hpp"

#include <cmath>

#include "shotwright/error.hpp"

namespace shotwright {

namespace {

constexpr std::size_t kTokens = kContextShots + 1;  // class token + shots

Tensor normal_init(std::vector<std::size_t> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (auto& v : t.data()) v = stddev * rng.normal();
  return t;
}

}  // namespace

ActorNetwork::Block::Block(const std::string& name, const ActorConfig& config, Rng& rng)
    : attn_norm(name + ".attn_norm", config.model_width),
      attention(name + ".attn", config.model_width, config.heads, rng),
      ff_norm(name + ".ff_norm", config.model_width),
      ff_in(name + ".ff_in", config.model_width, config.ff_width, rng),
      ff_out(name + ".ff_out", config.ff_width, config.model_width, rng) {}

ActorNetwork::ActorNetwork(const ActorConfig& config, std::uint64_t seed)
    : config_(config),
      token_projection_([&] {
        Rng rng = Rng(seed).fork(0);
        return Linear("actor.token_projection", kDistributionWidth, config.model_width, rng);
      }()),
      class_token_("actor.class_token", Tensor({config.model_width})),
      positions_("actor.positions", Tensor({kTokens, config.model_width})),
      final_norm_("actor.final_norm", config.model_width) {
  Rng rng = Rng(seed).fork(1);
  class_token_.value = normal_init({config.model_width}, 0.02, rng);
  positions_.value = normal_init({kTokens, config.model_width}, 0.02, rng);
  for (std::size_t b = 0; b < config.blocks; ++b) {
    blocks_.push_back(std::make_unique<Block>("actor.block" + std::to_string(b), config, rng));
  }
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    heads_.push_back(std::make_unique<Linear>("actor.head." + attribute_names()[i], config.model_width,
                                              kClassCounts[i], rng));
  }
}

HeadLogProbs ActorNetwork::forward(Tape& t, Var contexts) {
  const auto& cv = t.value(contexts);
  if (cv.cols() != kContextWidth) {
    throw ShapeError("actor expects [batch x 204] contexts, got " + shape_string(cv.shape()));
  }
  const std::size_t batch = cv.rows();
  const Var shots = ops::reshape(t, contexts, {batch * kContextShots, kDistributionWidth});
  Var h = token_projection_.forward(t, shots);
  h = ops::prepend_token(t, h, t.parameter(class_token_), kContextShots);
  h = ops::add_tiled(t, h, t.parameter(positions_));
  for (auto& block : blocks_) {
    const Var attended = block->attention.forward(t, block->attn_norm.forward(t, h), kTokens);
    h = ops::add(t, h, attended);
    const Var ff = block->ff_out.forward(t, ops::gelu(t, block->ff_in.forward(t, block->ff_norm.forward(t, h))));
    h = ops::add(t, h, ff);
  }
  h = final_norm_.forward(t, h);
  std::vector<std::size_t> class_rows(batch);
  for (std::size_t b = 0; b < batch; ++b) class_rows[b] = b * kTokens;
  const Var pooled = ops::select_rows(t, h, std::move(class_rows));
  HeadLogProbs out;
  for (std::size_t i = 0; i < kAttributeCount; ++i) out.heads[i] = ops::log_softmax(t, heads_[i]->forward(t, pooled));
  return out;
}

HeadLogProbs ActorNetwork::forward(Tape& t, std::span<const ContextState> states) {
  return forward(t, t.constant(stack_contexts(states)));
}

std::vector<AttributeDistribution> ActorNetwork::predict(std::span<const ContextState> states) {
  std::vector<AttributeDistribution> out;
  if (states.empty()) return out;
  Tape t;
  const auto lp = forward(t, states);
  out.reserve(states.size());
  std::array<double, kDistributionWidth> values{};
  for (std::size_t b = 0; b < states.size(); ++b) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      const auto row = t.value(lp.heads[i]).row(b);
      double total = 0.0;
      for (std::size_t k = 0; k < row.size(); ++k) {
        values[kBlockOffsets[i] + k] = std::exp(row[k]);
        total += values[kBlockOffsets[i] + k];
      }
      // exp(log_softmax) sums to 1 up to rounding; renormalize exactly.
      for (std::size_t k = 0; k < row.size(); ++k) values[kBlockOffsets[i] + k] /= total;
    }
    out.emplace_back(values);
  }
  return out;
}

AttributeDistribution ActorNetwork::predict(const ContextState& state) {
  return predict(std::span<const ContextState>(&state, 1)).front();
}

std::vector<Parameter*> ActorNetwork::parameters() {
  std::vector<Parameter*> out = token_projection_.parameters();
  out.push_back(&class_token_);
  out.push_back(&positions_);
  for (auto& b : blocks_) {
    append(out, b->attn_norm.parameters());
    append(out, b->attention.parameters());
    append(out, b->ff_norm.parameters());
    append(out, b->ff_in.parameters());
    append(out, b->ff_out.parameters());
  }
  append(out, final_norm_.parameters());
  for (auto& h : heads_) append(out, h->parameters());
  return out;
}

void ActorNetwork::zero_heads() {
  for (auto& h : heads_) {
    h->weights.value.fill(0.0);
    h->bias.value.fill(0.0);
  }
}

Mlp::Mlp(const std::string& name, std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output,
         Rng& rng)
    : input_(input), output_(output) {
  std::size_t width = input;
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    layers_.push_back(std::make_unique<Linear>(name + ".layer" + std::to_string(i), width, hidden[i], rng));
    width = hidden[i];
  }
  layers_.push_back(std::make_unique<Linear>(name + ".layer" + std::to_string(hidden.size()), width, output, rng));
}

Var Mlp::forward(Tape& t, Var x) {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    x = layers_[i]->forward(t, x);
    if (i + 1 < layers_.size()) x = ops::gelu(t, x);
  }
  return x;
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) append(out, l->parameters());
  return out;
}

CriticNetwork::CriticNetwork(const CriticConfig& config, std::uint64_t seed)
    : config_(config), mlp_([&]() -> Mlp {
        Rng rng(seed);
        return Mlp("critic", kInputWidth, config.hidden, kAttributeCount, rng);
      }()) {}

Var CriticNetwork::forward(Tape& t, Var inputs) { return mlp_.forward(t, inputs); }

Var CriticNetwork::forward(Tape& t, std::span<const ContextState> states, std::span<const AttributeVector> actions) {
  return forward(t, t.constant(critic_inputs(states, actions)));
}

std::vector<std::array<double, kAttributeCount>> CriticNetwork::evaluate(std::span<const ContextState> states,
                                                                         std::span<const AttributeVector> actions) {
  std::vector<std::array<double, kAttributeCount>> out(states.size());
  if (states.empty()) return out;
  Tape t;
  const auto& v = t.value(forward(t, states, actions));
  for (std::size_t b = 0; b < states.size(); ++b) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) out[b][i] = v.at(b, i);
  }
  return out;
}

Tensor stack_contexts(std::span<const ContextState> states) {
  Tensor out = Tensor::matrix(states.size(), kContextWidth);
  for (std::size_t b = 0; b < states.size(); ++b) {
    const auto flat = states[b].flat();
    std::copy(flat.begin(), flat.end(), out.row(b).begin());
  }
  return out;
}

Tensor critic_inputs(std::span<const ContextState> states, std::span<const AttributeVector> actions) {
  if (states.size() != actions.size()) {
    throw ShapeError("critic needs one action per state (" + std::to_string(states.size()) + " states, " +
                     std::to_string(actions.size()) + " actions)");
  }
  Tensor out = Tensor::matrix(states.size(), CriticNetwork::kInputWidth);
  for (std::size_t b = 0; b < states.size(); ++b) {
    auto row = out.row(b);
    const auto flat = states[b].flat();
    std::copy(flat.begin(), flat.end(), row.begin());
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      row[kContextWidth + kBlockOffsets[i] + static_cast<std::size_t>(actions[b][i])] = 1.0;
    }
  }
  return out;
}

}  // namespace shotwright
