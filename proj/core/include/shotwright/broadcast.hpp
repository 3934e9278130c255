#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "shotwright/networks.hpp"

// Lecture-broadcast environment: 7 cameras, a stylistic heuristic editor and
// an MLP actor-critic that imitates it.
namespace shotwright::broadcast {

inline constexpr std::size_t kCameras = 7;
inline constexpr std::size_t kFeatureWidth = 2 * kCameras + 1;
/// Features plus a one-hot of the previous view.
inline constexpr std::size_t kStateWidth = kFeatureWidth + kCameras;
/// Time since the last switch saturates at this many time units.
inline constexpr double kSwitchHorizon = 64.0;

enum Camera : int { Slide, LeftBoard, RightBoard, LeftMedium, RightMedium, Long, Student };
std::string camera_name(int camera);

using CameraValues = std::array<double, kCameras>;

/// Admissibility of cutting from the row camera to the column camera.
const std::array<CameraValues, kCameras>& adjacency();

struct FeatureVector {
  CameraValues event{};       // salience in [0, 1]
  CameraValues transition{};  // admissibility from the previous view
  double since_switch = 0.0;  // min(1, duration / kSwitchHorizon)

  std::array<double, kFeatureWidth> flat() const;
};

/// Event salience per time unit. Transition and switch features depend on
/// the view history of whoever consumes the scene.
struct LectureScene {
  std::vector<CameraValues> events;

  std::size_t length() const { return events.size(); }
  /// `previous` < 0 means no view has been shown yet: every cut is
  /// admissible and the switch feature reads 1.
  FeatureVector features(std::size_t t, int previous, std::size_t duration) const;

  friend bool operator==(const LectureScene&, const LectureScene&) = default;
};

/// Piecewise-constant event episodes (slide change, board writing, podium
/// talk, student question). While no event is running, one starts at each
/// time unit with probability `event_rate`. Secondary cameras of an event
/// stay below 0.5 and are left out entirely with `single_camera`.
LectureScene generate_scene(std::uint64_t seed, std::size_t length, double event_rate, bool single_camera = false);

struct StyleParams {
  CameraValues event_weight{};
  double transition_weight = 0.0;
  double switch_penalty = 0.0;
  std::size_t min_shot_length = 1;
  CameraValues bias{};

  void validate() const;
  friend bool operator==(const StyleParams&, const StyleParams&) = default;
};

/// "slide", "closeup", "steady" and "static" (always the slide camera).
/// "w1", "w2" and "w3" name the first three.
StyleParams style_preset(const std::string& name);
std::vector<std::string> style_preset_names();

using ViewSequence = std::vector<int>;

/// score(c) = event_weight[c]·f^e[c] + transition_weight·f^v[c] + bias[c]
///            - switch_penalty·[c != current]
/// The view changes to the best camera (lowest index on ties) only once the
/// current shot has lasted min_shot_length.
ViewSequence heuristic_edit(const LectureScene& scene, const StyleParams& omega);

double imitation_reward(int predicted, int truth);
double overlap_ratio(std::span<const int> predicted, std::span<const int> truth);

struct StyleMetrics {
  double average_length = 0.0;
  std::size_t max_length = 0;
  std::size_t switches = 0;
};
StyleMetrics style_metrics(std::span<const int> sequence);

struct BroadcastConfig {
  std::vector<std::size_t> actor_hidden = {64, 64};
  std::vector<std::size_t> critic_hidden = {64, 64};
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double gamma = 0.5;
  std::size_t iterations = 6000;
  std::size_t batch_size = 32;
  /// Steps per training episode; episodes start at random points of the
  /// scene from the demonstrated history.
  std::size_t window = 32;
  std::uint64_t seed = 0;
  /// Score (state, action) pairs like the editing critic instead of states.
  bool critic_sees_action = false;
  /// Weight of the policy entropy bonus in the actor loss.
  double entropy_weight = 0.5;

  void validate() const;
};

/// Applies `key = value` pairs. Unknown keys and malformed values throw.
void apply_config_entries(BroadcastConfig& config, const std::map<std::string, std::string>& entries);
/// Every field as `key = value` lines in a fixed order.
std::string to_text(const BroadcastConfig& config);

/// Actor state for step t given the consumer's previous view and how long it
/// has been on screen.
std::array<double, kStateWidth> make_state(const LectureScene& scene, std::size_t t, int previous,
                                           std::size_t duration);

class BroadcastActor {
 public:
  BroadcastActor(const std::vector<std::size_t>& hidden, std::uint64_t seed);

  /// states: [batch × kStateWidth]; returns log-probabilities [batch × 7].
  Var forward(Tape& t, Var states);
  /// Greedy views over the whole scene, fed back as the previous view.
  ViewSequence play(const LectureScene& scene);
  std::vector<Parameter*> parameters() { return mlp_.parameters(); }

 private:
  Mlp mlp_;
};

/// Single value per state, optionally with the chosen camera's one-hot
/// appended to the input.
class BroadcastCritic {
 public:
  BroadcastCritic(const std::vector<std::size_t>& hidden, bool sees_action, std::uint64_t seed);

  bool sees_action() const { return sees_action_; }

  Var forward(Tape& t, Var inputs);
  std::vector<Parameter*> parameters() { return mlp_.parameters(); }

 private:
  bool sees_action_;
  Mlp mlp_;
};

struct BroadcastLogEntry {
  std::size_t iteration = 0;
  double mean_reward = 0.0;  // per step
  double critic_loss = 0.0;
  double actor_loss = 0.0;
};

struct BroadcastModels {
  std::unique_ptr<BroadcastActor> actor;
  std::unique_ptr<BroadcastCritic> critic;
  std::vector<BroadcastLogEntry> log;
};

/// Actor-critic imitation of `truth` on `scene` with reward +1 for choosing
/// the demonstrated view and -1 otherwise.
BroadcastModels train_broadcast_actor(const LectureScene& scene, std::span<const int> truth,
                                      const BroadcastConfig& config);

/// Versioned text: header lines, then one row of 7 event values per time unit.
void write_scene(const LectureScene& scene, const std::filesystem::path& path);
LectureScene read_scene(const std::filesystem::path& path);
/// One view index per line.
void write_sequence(std::span<const int> views, const std::filesystem::path& path);
ViewSequence read_sequence(const std::filesystem::path& path);

}  // namespace shotwright::broadcast
