#include "shotwright/policy.hpp"

#include <cmath>

#include "shotwright/error.hpp"
#include "shotwright/ops.hpp"

namespace shotwright {

ChannelValues Trajectory::discounted_return(double gamma) const {
  ChannelValues total{};
  double discount = 1.0;
  for (const auto& r : rewards) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) total[i] += discount * r[i];
    discount *= gamma;
  }
  return total;
}

std::pair<AttributeVector, ChannelValues> sample_action(const AttributeDistribution& dists, Rng& rng) {
  std::array<int, kAttributeCount> classes{};
  ChannelValues log_probs{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto block = dists.block(i);
    const auto k = rng.categorical(block);
    classes[i] = static_cast<int>(k);
    log_probs[i] = std::log(block[k]);
  }
  return {AttributeVector(classes), log_probs};
}

AttributeVector greedy_action(const AttributeDistribution& dists) { return dists.argmax(); }

ChannelValues reward(const AttributeVector& predicted, const AttributeVector& truth) {
  ChannelValues r{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) r[i] = predicted[i] == truth[i] ? 1.0 : -1.0;
  return r;
}

std::vector<double> advantages(std::span<const double> rewards, std::span<const double> values,
                               std::span<const double> terminal, std::size_t channels, double gamma) {
  if (channels == 0 || rewards.size() % channels != 0 || values.size() != rewards.size() ||
      terminal.size() != channels) {
    throw ShapeError("advantages: reward/value tables must both be [steps x " + std::to_string(channels) + "]");
  }
  const std::size_t steps = rewards.size() / channels;
  std::vector<double> out(rewards.size());
  for (std::size_t t = steps; t-- > 0;) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double next_value = t + 1 < steps ? values[(t + 1) * channels + c] : terminal[c];
      const double delta = rewards[t * channels + c] + gamma * next_value - values[t * channels + c];
      const double next_adv = t + 1 < steps ? out[(t + 1) * channels + c] : 0.0;
      out[t * channels + c] = delta + gamma * next_adv;
    }
  }
  return out;
}

std::vector<ChannelValues> advantage(const Trajectory& trajectory, double gamma) {
  const std::size_t steps = trajectory.length();
  if (trajectory.rewards.size() != steps || trajectory.values.size() != steps) {
    throw Error("trajectory step lists have different lengths");
  }
  std::vector<double> r(steps * kAttributeCount), v(steps * kAttributeCount);
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy(trajectory.rewards[t].begin(), trajectory.rewards[t].end(), r.begin() + t * kAttributeCount);
    std::copy(trajectory.values[t].begin(), trajectory.values[t].end(), v.begin() + t * kAttributeCount);
  }
  const auto flat = advantages(r, v, trajectory.terminal_value, kAttributeCount, gamma);
  std::vector<ChannelValues> out(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::copy_n(flat.begin() + t * kAttributeCount, kAttributeCount, out[t].begin());
  }
  return out;
}

double critic_loss(std::span<const ChannelValues> advantages) {
  double total = 0.0;
  for (const auto& a : advantages) {
    for (double v : a) total += v * v;
  }
  return 0.5 * total;
}

double actor_loss(std::span<const ChannelValues> log_probs, std::span<const ChannelValues> advantages) {
  if (log_probs.size() != advantages.size()) throw Error("actor_loss: log-prob and advantage lists differ in length");
  double total = 0.0;
  for (std::size_t t = 0; t < log_probs.size(); ++t) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) total -= log_probs[t][i] * advantages[t][i];
  }
  return total;
}

Var critic_loss(Tape& t, Var values, const Tensor& rewards, std::size_t steps, double gamma) {
  const auto& vv = t.value(values);
  const std::size_t channels = vv.cols();
  if (rewards.size() != vv.size() || steps == 0 || vv.rows() % steps != 0) {
    throw ShapeError("critic_loss: values " + shape_string(vv.shape()) + " and rewards " +
                     shape_string(rewards.shape()) + " must share an [(episodes*" + std::to_string(steps) +
                     ") x channels] layout");
  }
  const std::size_t episodes = vv.rows() / steps;
  const std::size_t span = steps * channels;
  const std::vector<double> terminal(channels, 0.0);
  std::vector<double> adv(vv.size());
  double loss = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto a = advantages(rewards.data().subspan(e * span, span), vv.data().subspan(e * span, span), terminal,
                              channels, gamma);
    for (std::size_t k = 0; k < span; ++k) {
      adv[e * span + k] = a[k];
      loss += 0.5 * a[k] * a[k];
    }
  }
  return t.record(Tensor({1}, {loss}), {values},
                  [values, adv = std::move(adv), episodes, steps, channels, gamma](Tape& tp, const Tensor& g) {
                    auto dv = tp.grad_of(values).data();
                    std::vector<double> g_adv(steps);
                    for (std::size_t e = 0; e < episodes; ++e) {
                      for (std::size_t c = 0; c < channels; ++c) {
                        auto at = [&](std::size_t s) { return (e * steps + s) * channels + c; };
                        // Reverse of A_t = delta_t + gamma * A_{t+1}, walked forward in t.
                        for (std::size_t s = 0; s < steps; ++s) {
                          g_adv[s] = g[0] * adv[at(s)] + (s > 0 ? gamma * g_adv[s - 1] : 0.0);
                        }
                        // delta_s = r_s + gamma * V_{s+1} - V_s
                        for (std::size_t s = 0; s < steps; ++s) {
                          dv[at(s)] -= g_adv[s];
                          if (s + 1 < steps) dv[at(s + 1)] += gamma * g_adv[s];
                        }
                      }
                    }
                  });
}

Var actor_loss(Tape& t, std::span<const Var> log_probs, std::span<const int> chosen, const Tensor& advantages) {
  const std::size_t channels = log_probs.size();
  if (advantages.cols() != channels || chosen.size() != advantages.size()) {
    throw ShapeError("actor_loss: expected [rows x " + std::to_string(channels) + "] choices and advantages");
  }
  const std::size_t rows = advantages.rows();
  Var total{};
  for (std::size_t c = 0; c < channels; ++c) {
    std::vector<int> idx(rows);
    Tensor weights = Tensor::matrix(rows, 1);
    for (std::size_t r = 0; r < rows; ++r) {
      idx[r] = chosen[r * channels + c];
      weights[r] = -advantages.at(r, c);
    }
    const Var term = ops::weighted_sum(t, ops::pick(t, log_probs[c], idx), weights);
    total = c == 0 ? term : ops::add(t, total, term);
  }
  return total;
}

Trajectory rollout(ActorNetwork& actor, CriticNetwork& critic, const Episode& episode, Rng& rng) {
  return rollout_batch(actor, critic, std::span<const Episode>(&episode, 1), std::span<Rng>(&rng, 1)).front();
}

std::vector<Trajectory> rollout_batch(ActorNetwork& actor, CriticNetwork& critic, std::span<const Episode> episodes,
                                      std::span<Rng> rngs) {
  if (rngs.size() != episodes.size()) throw Error("rollout_batch needs one random stream per episode");
  const std::size_t n = episodes.size();
  std::vector<Trajectory> out(n);
  std::vector<ContextState> states;
  states.reserve(n);
  for (const auto& ep : episodes) states.push_back(initial_context(ep));

  std::vector<AttributeVector> actions(n);
  for (std::size_t step = 0; step < kTargetShots; ++step) {
    const auto dists = actor.predict(states);
    for (std::size_t e = 0; e < n; ++e) {
      auto [action, log_probs] = sample_action(dists[e], rngs[e]);
      actions[e] = action;
      out[e].states.push_back(states[e]);
      out[e].actions.push_back(action);
      out[e].log_probs.push_back(log_probs);
      out[e].rewards.push_back(reward(action, episodes[e].targets[step].attributes));
    }
    const auto values = critic.evaluate(states, actions);
    for (std::size_t e = 0; e < n; ++e) {
      out[e].values.push_back(values[e]);
      states[e] = advance_context(states[e], actions[e]);
    }
  }
  return out;
}

}  // namespace shotwright
