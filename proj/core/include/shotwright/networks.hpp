#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shotwright/attributes.hpp"
#include "shotwright/layers.hpp"
#include "shotwright/representation.hpp"

namespace shotwright {

struct ActorConfig {
  std::size_t model_width = 64;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::size_t ff_width = 128;
};

/// Log-probabilities of the 8 heads for a batch: head i is [batch × C_i].
struct HeadLogProbs {
  std::array<Var, kAttributeCount> heads;
};

/// Transformer policy over the 4 shot tokens. A learned class token is
/// prepended, learned position embeddings are added to all 5 tokens, and the
/// class token's final embedding feeds 8 linear classification heads.
class ActorNetwork {
 public:
  ActorNetwork(const ActorConfig& config, std::uint64_t seed);
  ActorNetwork(const ActorNetwork&) = delete;
  ActorNetwork& operator=(const ActorNetwork&) = delete;

  const ActorConfig& config() const { return config_; }

  /// contexts: [batch × 204] on the tape.
  HeadLogProbs forward(Tape& t, Var contexts);
  HeadLogProbs forward(Tape& t, std::span<const ContextState> states);

  /// Head probabilities for each state, no gradient bookkeeping kept.
  std::vector<AttributeDistribution> predict(std::span<const ContextState> states);
  AttributeDistribution predict(const ContextState& state);

  std::vector<Parameter*> parameters();
  /// Sets every classification head's weights and bias to zero.
  void zero_heads();

 private:
  struct Block {
    Block(const std::string& name, const ActorConfig& config, Rng& rng);
    LayerNorm attn_norm;
    MultiHeadAttention attention;
    LayerNorm ff_norm;
    Linear ff_in;
    Linear ff_out;
  };

  ActorConfig config_;
  Linear token_projection_;
  Parameter class_token_;
  Parameter positions_;
  std::vector<std::unique_ptr<Block>> blocks_;
  LayerNorm final_norm_;
  std::vector<std::unique_ptr<Linear>> heads_;
};

/// Stack of linear layers with GELU between them (none after the last).
class Mlp {
 public:
  Mlp(const std::string& name, std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output, Rng& rng);
  Mlp(const Mlp&) = delete;
  Mlp& operator=(const Mlp&) = delete;

  Var forward(Tape& t, Var x);
  std::vector<Parameter*> parameters();
  std::size_t input_width() const { return input_; }
  std::size_t output_width() const { return output_; }

 private:
  std::size_t input_;
  std::size_t output_;
  std::vector<std::unique_ptr<Linear>> layers_;
};

struct CriticConfig {
  std::vector<std::size_t> hidden = {256, 128};
};

/// Scores (context, action): 204 context values and the 51-wide one-hot of
/// the action in, one value per attribute channel out.
class CriticNetwork {
 public:
  static constexpr std::size_t kInputWidth = kContextWidth + kDistributionWidth;

  CriticNetwork(const CriticConfig& config, std::uint64_t seed);

  const CriticConfig& config() const { return config_; }

  /// inputs: [batch × 255] on the tape; returns [batch × 8].
  Var forward(Tape& t, Var inputs);
  Var forward(Tape& t, std::span<const ContextState> states, std::span<const AttributeVector> actions);
  std::vector<std::array<double, kAttributeCount>> evaluate(std::span<const ContextState> states,
                                                            std::span<const AttributeVector> actions);

  std::vector<Parameter*> parameters() { return mlp_.parameters(); }

 private:
  CriticConfig config_;
  Mlp mlp_;
};

/// [batch × 204] tensor of flattened states.
Tensor stack_contexts(std::span<const ContextState> states);
/// [batch × 255] critic input rows.
Tensor critic_inputs(std::span<const ContextState> states, std::span<const AttributeVector> actions);

}  // namespace shotwright
