#pragma once

#include <array>
#include <span>
#include <vector>

#include "shotwright/dataset.hpp"
#include "shotwright/networks.hpp"
#include "shotwright/representation.hpp"
#include "shotwright/rng.hpp"

namespace shotwright {

using ChannelValues = std::array<double, kAttributeCount>;

/// One editing episode as played by the actor.
struct Trajectory {
  std::vector<ContextState> states;
  std::vector<AttributeVector> actions;
  std::vector<ChannelValues> log_probs;
  std::vector<ChannelValues> rewards;
  std::vector<ChannelValues> values;
  /// Critic bootstrap after the last step; zero when the episode ends there.
  ChannelValues terminal_value{};

  std::size_t length() const { return states.size(); }
  /// Σ_t γ^t r_t per channel.
  ChannelValues discounted_return(double gamma) const;
};

/// Independent draw per block; returns the class and its log-probability.
std::pair<AttributeVector, ChannelValues> sample_action(const AttributeDistribution& dists, Rng& rng);
/// Argmax per block, ties toward the lowest class.
AttributeVector greedy_action(const AttributeDistribution& dists);

/// +1 where the predicted class matches, -1 elsewhere.
ChannelValues reward(const AttributeVector& predicted, const AttributeVector& truth);

/// Advantages for a [steps × channels] reward/value table:
///   delta_t = r_t + gamma * V_{t+1} - V_t   (V_T = terminal)
///   A_t     = delta_t + gamma * A_{t+1}
/// All spans are row-major [steps × channels]; `terminal` has `channels` values.
std::vector<double> advantages(std::span<const double> rewards, std::span<const double> values,
                               std::span<const double> terminal, std::size_t channels, double gamma);
std::vector<ChannelValues> advantage(const Trajectory& trajectory, double gamma);

/// ½ Σ A² over steps and channels.
double critic_loss(std::span<const ChannelValues> advantages);
/// Σ over steps and channels of -log π(chosen) · A.
double actor_loss(std::span<const ChannelValues> log_probs, std::span<const ChannelValues> advantages);

/// Critic loss on the tape. `values` is [(episodes*steps) × channels] with
/// each episode's steps contiguous; `rewards` has the same layout. The
/// advantages are recomputed from the tape values with a zero terminal value,
/// so gradients flow into the critic. Returns the sum over episodes.
Var critic_loss(Tape& t, Var values, const Tensor& rewards, std::size_t steps, double gamma);

/// Actor loss on the tape: Σ -log π(chosen class) · A with A held constant.
/// `log_probs` is one [rows × classes] node per channel; `chosen` and
/// `advantages` are [rows × channels].
Var actor_loss(Tape& t, std::span<const Var> log_probs, std::span<const int> chosen, const Tensor& advantages);

/// Plays one episode: starts from the context shots' representations, then
/// for each of the 5 targets samples an action, scores it against the true
/// shot, records the critic value of (state, action) and advances the state
/// with the action's one-hot encoding.
Trajectory rollout(ActorNetwork& actor, CriticNetwork& critic, const Episode& episode, Rng& rng);
/// Lock-step rollout of several episodes, each with its own random stream.
std::vector<Trajectory> rollout_batch(ActorNetwork& actor, CriticNetwork& critic, std::span<const Episode> episodes,
                                      std::span<Rng> rngs);

}  // namespace shotwright
