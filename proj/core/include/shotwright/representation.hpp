#pragma once

#include <array>
#include <span>
#include <string_view>
#include <vector>

#include "shotwright/attributes.hpp"
#include "shotwright/dataset.hpp"
#include "shotwright/rng.hpp"

namespace shotwright {

inline constexpr std::size_t kContextWidth = kContextShots * kDistributionWidth;
static_assert(kContextWidth == 204);

/// Raw similarity scores of one shot against one attribute's class prompts.
struct SimilarityBlock {
  std::vector<double> scores;
};

/// Per-block softmax of similarity scores. Block i must hold kClassCounts[i]
/// finite scores.
AttributeDistribution distribution_from_similarities(std::span<const SimilarityBlock> blocks);

/// Stand-in for zero-shot model output: the true class scores `concentration`,
/// every class also receives standard normal noise, then softmax.
AttributeDistribution synth_distribution(const AttributeVector& attrs, double concentration, Rng& rng);

/// The window of the 4 most recent shot representations fed to the actor.
class ContextState {
 public:
  explicit ContextState(const std::array<AttributeDistribution, kContextShots>& shots);

  const std::array<AttributeDistribution, kContextShots>& shots() const { return shots_; }
  std::span<const double> flat() const { return flat_; }

  friend bool operator==(const ContextState&, const ContextState&) = default;

 private:
  std::array<AttributeDistribution, kContextShots> shots_;
  std::array<double, kContextWidth> flat_{};
};

/// Throws unless exactly 4 distributions are given.
ContextState build_context(std::span<const AttributeDistribution> shots);

/// Drops the oldest shot and appends the one-hot encoding of `action`.
ContextState advance_context(const ContextState& state, const AttributeVector& action);

/// Stored distribution of a shot, or its one-hot ground truth when absent.
AttributeDistribution shot_representation(const Shot& shot);

/// Initial state E_0 of an episode.
ContextState initial_context(const Episode& episode);

enum class ReprMode { Stored, OneHot, Synthetic };

ReprMode parse_repr_mode(std::string_view name);
std::string_view to_string(ReprMode mode);

/// Fills every shot's distribution according to `mode`. Stored mode requires
/// each shot to carry a distribution already. Synthetic draws are keyed by
/// (seed, scene index, shot index), so they are fixed per shot.
void apply_representation(std::vector<Scene>& scenes, ReprMode mode, double concentration, std::uint64_t seed);

}  // namespace shotwright
