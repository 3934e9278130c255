#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shotwright/dataset.hpp"
#include "shotwright/networks.hpp"
#include "shotwright/representation.hpp"

namespace shotwright {

struct EvalReport {
  std::array<double, kAttributeCount> per_attribute{};
  double one_acc = 0.0;
  double two_acc = 0.0;
  double rank1 = 0.0;
  double two_rank1 = 0.0;
  std::array<double, kAttributeCount> mean_reward{};  // per channel, per step
  double total_reward = 0.0;                          // per episode
  std::size_t episodes = 0;

  bool all_finite() const;
};

/// `key = value` lines.
std::string to_key_value(const EvalReport& report);
/// One JSON object on a single line.
std::string to_json_line(const EvalReport& report);
/// Header and row of a fixed-width results table, values in percent.
std::string table_header();
std::string table_row(const std::string& label, const EvalReport& report);

std::array<double, kAttributeCount> per_attribute_accuracy(std::span<const AttributeVector> predictions,
                                                           std::span<const AttributeVector> truths);
double overall_accuracy(std::span<const AttributeVector> predictions, std::span<const AttributeVector> truths);
/// Fraction of samples where both the first and the second prediction are
/// fully correct.
double two_shot_accuracy(std::span<const AttributeVector> first_predictions,
                         std::span<const AttributeVector> first_truths,
                         std::span<const AttributeVector> second_predictions,
                         std::span<const AttributeVector> second_truths);

/// Index of the candidate at the smallest Hamming distance; ties go to the
/// lowest index.
std::size_t retrieve_shot(const AttributeVector& query, std::span<const Shot> candidates);

struct RewardSummary {
  std::array<double, kAttributeCount> per_channel{};
  double total = 0.0;
};
/// Per-channel mean of the ±1 rewards over steps and episodes, and the mean
/// per-episode sum over channels and steps.
RewardSummary mean_episode_reward(std::span<const std::vector<std::array<double, kAttributeCount>>> episode_rewards);

/// Chooses attribute vectors for context states. `keys` identify each query
/// uniquely within an evaluation so that randomized predictors can stay
/// deterministic however the work is split.
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual std::vector<AttributeVector> predict(std::span<const ContextState> states,
                                               std::span<const std::uint64_t> keys) = 0;
};

/// Greedy (argmax) decoding of an actor.
class ActorPredictor final : public Predictor {
 public:
  explicit ActorPredictor(ActorNetwork& actor) : actor_(actor) {}
  std::vector<AttributeVector> predict(std::span<const ContextState> states,
                                       std::span<const std::uint64_t> keys) override;

 private:
  ActorNetwork& actor_;
};

/// Uniformly random classes per attribute, independent of the state.
class RandomPredictor final : public Predictor {
 public:
  explicit RandomPredictor(std::uint64_t seed) : seed_(seed) {}
  std::vector<AttributeVector> predict(std::span<const ContextState> states,
                                       std::span<const std::uint64_t> keys) override;

 private:
  std::uint64_t seed_;
};

struct EvalOptions {
  /// Seeds the per-episode candidate presentation order.
  std::uint64_t seed = 0;
  /// 0 = SHOTWRIGHT_THREADS or the hardware concurrency.
  std::size_t threads = 0;
};

/// Runs every metric over the episodes. Retrieval presents the 5 target
/// shots in a per-episode shuffled order and succeeds when the retrieved
/// shot carries the ground-truth attributes. Second-step predictions start
/// from the context advanced with the ground-truth first target. The reward
/// columns come from a 5-step greedy rollout advanced with the predictor's
/// own choices.
EvalReport evaluate(std::span<const Episode> episodes, Predictor& predictor, const EvalOptions& options = {});

/// Worker count from SHOTWRIGHT_THREADS, capped at the hardware concurrency.
std::size_t default_thread_count();

}  // namespace shotwright
