#include "shotwright/representation.hpp"

#include <algorithm>
#include <cmath>

namespace shotwright {

AttributeDistribution distribution_from_similarities(std::span<const SimilarityBlock> blocks) {
  if (blocks.size() != kAttributeCount) {
    throw Error("expected 8 similarity blocks, got " + std::to_string(blocks.size()));
  }
  std::array<double, kDistributionWidth> values{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const auto& scores = blocks[i].scores;
    if (scores.size() != kClassCounts[i]) {
      throw Error("similarity block '" + attribute_names()[i] + "' needs " + std::to_string(kClassCounts[i]) +
                  " scores, got " + std::to_string(scores.size()));
    }
    for (double s : scores) {
      if (!std::isfinite(s)) throw Error("non-finite similarity score in block '" + attribute_names()[i] + "'");
    }
    const double peak = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      values[kBlockOffsets[i] + k] = std::exp(scores[k] - peak);
      total += values[kBlockOffsets[i] + k];
    }
    for (std::size_t k = 0; k < scores.size(); ++k) values[kBlockOffsets[i] + k] /= total;
  }
  return AttributeDistribution(values);
}

AttributeDistribution synth_distribution(const AttributeVector& attrs, double concentration, Rng& rng) {
  if (!(concentration > 0.0)) throw Error("synthetic concentration must be positive");
  std::array<SimilarityBlock, kAttributeCount> blocks;
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    blocks[i].scores.resize(kClassCounts[i]);
    for (std::size_t k = 0; k < kClassCounts[i]; ++k) {
      blocks[i].scores[k] = rng.normal() + (static_cast<int>(k) == attrs[i] ? concentration : 0.0);
    }
  }
  return distribution_from_similarities(blocks);
}

ContextState::ContextState(const std::array<AttributeDistribution, kContextShots>& shots) : shots_(shots) {
  for (std::size_t s = 0; s < kContextShots; ++s) {
    const auto v = shots_[s].values();
    std::copy(v.begin(), v.end(), flat_.begin() + static_cast<std::ptrdiff_t>(s * kDistributionWidth));
  }
}

ContextState build_context(std::span<const AttributeDistribution> shots) {
  if (shots.size() != kContextShots) {
    throw Error("context needs exactly 4 shot representations, got " + std::to_string(shots.size()));
  }
  std::array<AttributeDistribution, kContextShots> arr;
  std::copy(shots.begin(), shots.end(), arr.begin());
  return ContextState(arr);
}

ContextState advance_context(const ContextState& state, const AttributeVector& action) {
  std::array<AttributeDistribution, kContextShots> next;
  const auto& cur = state.shots();
  std::copy(cur.begin() + 1, cur.end(), next.begin());
  next.back() = one_hot_encode(action);
  return ContextState(next);
}

AttributeDistribution shot_representation(const Shot& shot) {
  return shot.distribution ? *shot.distribution : one_hot_encode(shot.attributes);
}

ContextState initial_context(const Episode& episode) {
  std::array<AttributeDistribution, kContextShots> arr;
  for (std::size_t k = 0; k < kContextShots; ++k) arr[k] = shot_representation(episode.context[k]);
  return ContextState(arr);
}

ReprMode parse_repr_mode(std::string_view name) {
  if (name == "stored") return ReprMode::Stored;
  if (name == "onehot") return ReprMode::OneHot;
  if (name == "synthetic") return ReprMode::Synthetic;
  throw Error("unknown representation mode '" + std::string(name) + "' (expected stored|onehot|synthetic)");
}

std::string_view to_string(ReprMode mode) {
  switch (mode) {
    case ReprMode::Stored: return "stored";
    case ReprMode::OneHot: return "onehot";
    case ReprMode::Synthetic: return "synthetic";
  }
  return "?";
}

void apply_representation(std::vector<Scene>& scenes, ReprMode mode, double concentration, std::uint64_t seed) {
  const Rng root(seed);
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    auto& scene = scenes[s];
    Rng rng = root.fork(s);
    for (auto& shot : scene.shots) {
      switch (mode) {
        case ReprMode::Stored:
          if (!shot.distribution) {
            throw Error("shot '" + shot.shot_id + "' in scene '" + scene.scene_id + "' has no stored distribution");
          }
          break;
        case ReprMode::OneHot: shot.distribution = one_hot_encode(shot.attributes); break;
        case ReprMode::Synthetic: shot.distribution = synth_distribution(shot.attributes, concentration, rng); break;
      }
    }
  }
}

}  // namespace shotwright
