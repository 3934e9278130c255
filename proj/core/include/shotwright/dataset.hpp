#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shotwright/attributes.hpp"

namespace shotwright {

/// Shots in the initial editing context of an episode.
inline constexpr std::size_t kContextShots = 4;
/// Shots to predict after the context.
inline constexpr std::size_t kTargetShots = 5;
inline constexpr std::size_t kEpisodeShots = kContextShots + kTargetShots;

struct Shot {
  std::string shot_id;
  std::string scene_id;
  AttributeVector attributes;
  std::optional<AttributeDistribution> distribution;

  friend bool operator==(const Shot&, const Shot&) = default;
};

struct Scene {
  std::string scene_id;
  std::vector<Shot> shots;  // temporal order

  friend bool operator==(const Scene&, const Scene&) = default;
};

/// Nine consecutive shots of one scene: 4 context shots then 5 targets.
struct Episode {
  std::array<Shot, kContextShots> context;
  std::array<Shot, kTargetShots> targets;
};

/// Reads `shotwright-dataset v1`. Lines are
/// `scene_id<TAB>shot_id<TAB>c1,...,c8[<TAB>51 decimals]`; a scene's lines
/// appear in temporal order and scenes may not be interleaved.
std::vector<Scene> load_dataset(const std::filesystem::path& path);
void save_dataset(const std::vector<Scene>& scenes, const std::filesystem::path& path);

/// Windows of 9 shots starting at 0, stride, 2*stride, ...
/// Scenes shorter than 9 shots yield nothing.
std::vector<Episode> sample_episodes(const Scene& scene, std::size_t stride = 1);
std::vector<Episode> sample_episodes(const std::vector<Scene>& scenes, std::size_t stride = 1);

}  // namespace shotwright
