#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "shotwright/dataset.hpp"
#include "shotwright/networks.hpp"
#include "shotwright/optim.hpp"
#include "shotwright/policy.hpp"
#include "shotwright/representation.hpp"

namespace shotwright {

struct TrainConfig {
  double actor_lr = 1e-4;
  double critic_lr = 1e-4;
  double gamma = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = 50;
  std::size_t rl_iterations = 200;
  /// Critic-only iterations run before the actor starts updating.
  std::size_t critic_warmup = 0;
  std::uint64_t seed = 0;
  ReprMode repr = ReprMode::Stored;
  double concentration = 1.0;
  std::size_t stride = 1;
  bool teacher_forcing = true;
  ActorConfig actor;
  CriticConfig critic;

  /// Throws on rates <= 0, gamma outside (0, 1], zero sizes.
  void validate() const;
};

/// Applies `key = value` pairs. Unknown keys and malformed values throw.
void apply_config_entries(TrainConfig& config, const std::map<std::string, std::string>& entries);
/// Reads a flat `key = value` file; `#` starts a comment.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);
/// Every field as `key = value` lines in a fixed order.
std::string to_text(const TrainConfig& config);

/// Scenes whose shots follow a first-order Markov chain. With probability
/// `determinism` a shot is a fixed function of the previous one; otherwise
/// it is drawn uniformly. With `per_attribute` the coin is tossed for each
/// attribute separately instead of once per shot.
struct MarkovConfig {
  std::size_t scenes = 100;
  std::size_t shots = 12;
  double determinism = 1.0;
  std::uint64_t seed = 0;
  bool per_attribute = false;
};

/// Transition rule of the generator: class i of the next shot is
/// (a_i * prev_i + c_i) mod C_i with a_i coprime to C_i, so each attribute
/// follows a seed-fixed permutation of its classes.
class MarkovRule {
 public:
  explicit MarkovRule(std::uint64_t seed);
  AttributeVector next(const AttributeVector& prev) const;

 private:
  std::array<int, kAttributeCount> a_{}, c_{};
};

std::vector<Scene> generate_markov_dataset(const MarkovConfig& config);

/// Mean cross-entropy over the 8 heads against the first target shot, plus
/// (with teacher forcing) the later targets from ground-truth-advanced
/// states. Returns the mean loss of each epoch.
std::vector<double> pretrain_supervised(ActorNetwork& actor, const std::vector<Episode>& episodes,
                                        const TrainConfig& config);

struct RlLogEntry {
  std::size_t iteration = 0;
  ChannelValues mean_reward{};  // per channel, mean over steps and episodes
  double episode_reward = 0.0;  // sum over channels and steps, mean over episodes
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  bool actor_updated = false;
};

/// Actor-critic fine-tuning. Each iteration samples a batch of episodes,
/// rolls them out, takes one critic step and one actor step. The first
/// `critic_warmup` iterations skip the actor step. Throws if a
/// parameter becomes non-finite.
std::vector<RlLogEntry> train_rl(ActorNetwork& actor, CriticNetwork& critic, const std::vector<Episode>& episodes,
                                 const TrainConfig& config);

struct ModelPair {
  std::unique_ptr<ActorNetwork> actor;
  std::unique_ptr<CriticNetwork> critic;
};

ModelPair make_models(const TrainConfig& config);
/// Architecture and all parameters of both networks in one file.
void save_checkpoint(ActorNetwork& actor, CriticNetwork& critic, const std::filesystem::path& path);
ModelPair load_checkpoint(const std::filesystem::path& path);

bool all_finite(std::span<Parameter* const> params);

}  // namespace shotwright
