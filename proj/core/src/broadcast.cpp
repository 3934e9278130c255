#include "shotwright/broadcast.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "shotwright/error.hpp"
#include "shotwright/optim.hpp"
#include "shotwright/policy.hpp"
#include "shotwright/text.hpp"

namespace shotwright::broadcast {

namespace {

constexpr std::string_view kSceneMagic = "shotwright-lecture-scene";
constexpr int kSceneVersion = 1;

struct EventTemplate {
  int primary;
  int secondary;  // -1 for none
  double weight;
  std::size_t min_length;
  std::size_t max_length;
};

constexpr std::array<EventTemplate, 6> kTemplates{{
    {Slide, Long, 0.25, 4, 16},               // slide change
    {LeftBoard, LeftMedium, 0.2, 20, 70},     // writing on the left board
    {RightBoard, RightMedium, 0.2, 20, 70},   // writing on the right board
    {LeftMedium, Long, 0.1, 10, 40},          // talk from the left podium
    {RightMedium, Long, 0.1, 10, 40},         // talk from the right podium
    {Student, Long, 0.15, 5, 25},             // student question
}};

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t c = 1; c < values.size(); ++c) {
    if (values[c] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

void check_view(int v, const char* what) {
  if (v < 0 || v >= static_cast<int>(kCameras)) {
    throw Error(std::string(what) + " view " + std::to_string(v) + " is outside [0, 7)");
  }
}

Mlp build_mlp(const std::string& name, std::size_t input, const std::vector<std::size_t>& hidden, std::size_t output,
              std::uint64_t seed) {
  Rng rng(seed);
  return Mlp(name, input, hidden, output, rng);
}

// Duration of the run that ends just before t, for every t.
std::vector<std::size_t> durations_before(std::span<const int> views) {
  std::vector<std::size_t> out(views.size(), 0);
  for (std::size_t t = 1; t < views.size(); ++t) out[t] = views[t - 1] == (t >= 2 ? views[t - 2] : -1) ? out[t - 1] + 1 : 1;
  return out;
}

}  // namespace

std::string camera_name(int camera) {
  static const std::array<const char*, kCameras> names{"slide",        "left_board", "right_board", "left_medium",
                                                       "right_medium", "long",       "student"};
  check_view(camera, "camera");
  return names[static_cast<std::size_t>(camera)];
}

const std::array<CameraValues, kCameras>& adjacency() {
  static const std::array<CameraValues, kCameras> table{{
      {1.0, 0.6, 0.6, 0.5, 0.5, 0.9, 0.4},
      {0.6, 1.0, 0.2, 0.8, 0.4, 0.8, 0.3},
      {0.6, 0.2, 1.0, 0.4, 0.8, 0.8, 0.3},
      {0.5, 0.8, 0.4, 1.0, 0.3, 0.8, 0.4},
      {0.5, 0.4, 0.8, 0.3, 1.0, 0.8, 0.4},
      {0.9, 0.8, 0.8, 0.8, 0.8, 1.0, 0.7},
      {0.4, 0.3, 0.3, 0.4, 0.4, 0.7, 1.0},
  }};
  return table;
}

std::array<double, kFeatureWidth> FeatureVector::flat() const {
  std::array<double, kFeatureWidth> out{};
  std::copy(event.begin(), event.end(), out.begin());
  std::copy(transition.begin(), transition.end(), out.begin() + kCameras);
  out[2 * kCameras] = since_switch;
  return out;
}

FeatureVector LectureScene::features(std::size_t t, int previous, std::size_t duration) const {
  if (t >= events.size()) throw Error("time " + std::to_string(t) + " is past the scene end");
  FeatureVector f;
  f.event = events[t];
  if (previous < 0) {
    f.transition.fill(1.0);
    f.since_switch = 1.0;
  } else {
    check_view(previous, "previous");
    f.transition = adjacency()[static_cast<std::size_t>(previous)];
    f.since_switch = std::min(1.0, static_cast<double>(duration) / kSwitchHorizon);
  }
  return f;
}

LectureScene generate_scene(std::uint64_t seed, std::size_t length, double event_rate, bool single_camera) {
  if (length == 0) throw Error("scene length must be at least 1");
  if (!(event_rate >= 0.0 && event_rate <= 1.0)) throw Error("event rate must lie in [0, 1]");
  Rng rng(seed);
  std::array<double, kTemplates.size()> weights{};
  for (std::size_t k = 0; k < kTemplates.size(); ++k) weights[k] = kTemplates[k].weight;

  LectureScene scene;
  scene.events.assign(length, CameraValues{});
  std::size_t t = 0;
  while (t < length) {
    if (!rng.bernoulli(event_rate)) {
      ++t;
      continue;
    }
    const auto& tpl = kTemplates[rng.categorical(weights)];
    const std::size_t len = tpl.min_length + rng.index(tpl.max_length - tpl.min_length + 1);
    const double primary = rng.uniform(0.6, 1.0);
    const double secondary = rng.uniform(0.2, 0.45);
    for (std::size_t k = t; k < std::min(length, t + len); ++k) {
      scene.events[k][static_cast<std::size_t>(tpl.primary)] = primary;
      if (!single_camera && tpl.secondary >= 0) scene.events[k][static_cast<std::size_t>(tpl.secondary)] = secondary;
    }
    t += len;
  }
  return scene;
}

void StyleParams::validate() const {
  if (min_shot_length < 1) throw Error("minimum shot length must be at least 1");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(event_weight.begin(), event_weight.end(), finite) ||
      !std::all_of(bias.begin(), bias.end(), finite) || !std::isfinite(transition_weight) ||
      !std::isfinite(switch_penalty)) {
    throw Error("style weights must be finite");
  }
}

StyleParams style_preset(const std::string& alias) {
  const std::string name = alias == "w1" ? "slide" : alias == "w2" ? "closeup" : alias == "w3" ? "steady" : alias;
  StyleParams p;
  if (name == "slide") {
    p.event_weight = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    p.transition_weight = 0.2;
    p.switch_penalty = 0.1;
    p.min_shot_length = 8;
    p.bias = {0.3, 0.0, 0.0, 0.0, 0.0, 0.1, 0.0};
  } else if (name == "closeup") {
    p.event_weight = {0.9, 1.0, 1.0, 0.6, 0.6, 0.2, 0.7};
    p.transition_weight = 0.2;
    p.switch_penalty = 0.1;
    p.min_shot_length = 6;
    p.bias = {0.1, 0.3, 0.2, 0.0, 0.0, 0.0, 0.0};
  } else if (name == "steady") {
    p.event_weight = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    p.transition_weight = 0.3;
    p.switch_penalty = 0.1;
    p.min_shot_length = 10;
    p.bias = {0.2, 0.0, 0.0, 0.0, 0.0, 0.35, 0.0};
  } else if (name == "static") {
    p.bias = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  } else {
    throw Error("unknown style preset '" + name + "' (expected slide, closeup, steady or static)");
  }
  return p;
}

std::vector<std::string> style_preset_names() { return {"slide", "closeup", "steady", "static"}; }

ViewSequence heuristic_edit(const LectureScene& scene, const StyleParams& omega) {
  omega.validate();
  ViewSequence out;
  out.reserve(scene.length());
  int current = -1;
  std::size_t duration = 0;
  for (std::size_t t = 0; t < scene.length(); ++t) {
    const auto f = scene.features(t, current, duration);
    CameraValues score{};
    for (std::size_t c = 0; c < kCameras; ++c) {
      score[c] = omega.event_weight[c] * f.event[c] + omega.transition_weight * f.transition[c] + omega.bias[c];
      if (current >= 0 && static_cast<int>(c) != current) score[c] -= omega.switch_penalty;
    }
    const int best = argmax(score);
    if (current < 0) {
      current = best;
      duration = 1;
    } else if (best != current && duration >= omega.min_shot_length) {
      current = best;
      duration = 1;
    } else {
      ++duration;
    }
    out.push_back(current);
  }
  return out;
}

double imitation_reward(int predicted, int truth) {
  check_view(predicted, "predicted");
  check_view(truth, "truth");
  return predicted == truth ? 1.0 : -1.0;
}

double overlap_ratio(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) {
    throw Error("overlap_ratio: sequences of length " + std::to_string(predicted.size()) + " and " +
                std::to_string(truth.size()));
  }
  if (predicted.empty()) throw Error("overlap_ratio: empty sequences");
  std::size_t same = 0;
  for (std::size_t t = 0; t < predicted.size(); ++t) same += predicted[t] == truth[t];
  return static_cast<double>(same) / static_cast<double>(predicted.size());
}

StyleMetrics style_metrics(std::span<const int> sequence) {
  if (sequence.empty()) throw Error("style_metrics: empty sequence");
  StyleMetrics m;
  std::size_t run = 1;
  for (std::size_t t = 1; t <= sequence.size(); ++t) {
    if (t < sequence.size() && sequence[t] == sequence[t - 1]) {
      ++run;
      continue;
    }
    m.max_length = std::max(m.max_length, run);
    if (t < sequence.size()) ++m.switches;
    run = 1;
  }
  m.average_length = static_cast<double>(sequence.size()) / static_cast<double>(m.switches + 1);
  return m;
}

void BroadcastConfig::validate() const {
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw Error("learning rates must be positive");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must lie in (0, 1]");
  if (batch_size == 0 || window == 0) throw Error("batch size and window must be positive");
  if (!(entropy_weight >= 0.0)) throw Error("entropy weight must be non-negative");
  for (const auto* hidden : {&actor_hidden, &critic_hidden}) {
    if (hidden->empty() || std::find(hidden->begin(), hidden->end(), 0u) != hidden->end()) {
      throw Error("hidden layer lists must hold positive widths");
    }
  }
}

void apply_config_entries(BroadcastConfig& c, const std::map<std::string, std::string>& entries) {
  auto size = [](const std::string& key, const std::string& value) {
    const auto v = text::parse_int(value);
    if (v < 0) throw Error("config key '" + key + "' must be non-negative, got " + value);
    return static_cast<std::size_t>(v);
  };
  auto sizes = [&](const std::string& key, const std::string& value) {
    std::vector<std::size_t> out;
    for (auto part : text::split(value, ',')) out.push_back(size(key, std::string(text::trim(part))));
    return out;
  };
  for (const auto& [key, value] : entries) {
    try {
      if (key == "actor_hidden") c.actor_hidden = sizes(key, value);
      else if (key == "critic_hidden") c.critic_hidden = sizes(key, value);
      else if (key == "actor_lr") c.actor_lr = text::parse_double(value);
      else if (key == "critic_lr") c.critic_lr = text::parse_double(value);
      else if (key == "gamma") c.gamma = text::parse_double(value);
      else if (key == "iterations") c.iterations = size(key, value);
      else if (key == "batch_size") c.batch_size = size(key, value);
      else if (key == "window") c.window = size(key, value);
      else if (key == "seed") c.seed = size(key, value);
      else if (key == "critic_sees_action") c.critic_sees_action = text::parse_bool(value);
      else if (key == "entropy_weight") c.entropy_weight = text::parse_double(value);
      else throw Error("unknown config key '" + key + "'");
    } catch (const Error& e) {
      if (std::string_view(e.what()).find(key) != std::string_view::npos) throw;
      throw Error("config key '" + key + "': " + e.what());
    }
  }
}

std::string to_text(const BroadcastConfig& c) {
  auto join = [](const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
    return out;
  };
  std::ostringstream out;
  out << "actor_hidden = " << join(c.actor_hidden) << '\n'
      << "critic_hidden = " << join(c.critic_hidden) << '\n'
      << "actor_lr = " << text::format_double(c.actor_lr) << '\n'
      << "critic_lr = " << text::format_double(c.critic_lr) << '\n'
      << "gamma = " << text::format_double(c.gamma) << '\n'
      << "iterations = " << c.iterations << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "window = " << c.window << '\n'
      << "seed = " << c.seed << '\n'
      << "critic_sees_action = " << (c.critic_sees_action ? "true" : "false") << '\n'
      << "entropy_weight = " << text::format_double(c.entropy_weight) << '\n';
  return out.str();
}

std::array<double, kStateWidth> make_state(const LectureScene& scene, std::size_t t, int previous,
                                           std::size_t duration) {
  std::array<double, kStateWidth> s{};
  const auto f = scene.features(t, previous, duration).flat();
  std::copy(f.begin(), f.end(), s.begin());
  if (previous >= 0) s[kFeatureWidth + static_cast<std::size_t>(previous)] = 1.0;
  return s;
}

BroadcastActor::BroadcastActor(const std::vector<std::size_t>& hidden, std::uint64_t seed)
    : mlp_(build_mlp("broadcast_actor", kStateWidth, hidden, kCameras, seed)) {}

Var BroadcastActor::forward(Tape& t, Var states) { return ops::log_softmax(t, mlp_.forward(t, states)); }

ViewSequence BroadcastActor::play(const LectureScene& scene) {
  ViewSequence out;
  out.reserve(scene.length());
  int previous = -1;
  std::size_t duration = 0;
  for (std::size_t t = 0; t < scene.length(); ++t) {
    const auto s = make_state(scene, t, previous, duration);
    Tape tape;
    const Var logp = forward(tape, tape.constant(Tensor({1, kStateWidth}, std::vector<double>(s.begin(), s.end()))));
    const int view = argmax(tape.value(logp).data());
    duration = view == previous ? duration + 1 : 1;
    previous = view;
    out.push_back(view);
  }
  return out;
}

BroadcastCritic::BroadcastCritic(const std::vector<std::size_t>& hidden, bool sees_action, std::uint64_t seed)
    : sees_action_(sees_action),
      mlp_(build_mlp("broadcast_critic", kStateWidth + (sees_action ? kCameras : 0), hidden, 1, seed)) {}

Var BroadcastCritic::forward(Tape& t, Var inputs) { return mlp_.forward(t, inputs); }

BroadcastModels train_broadcast_actor(const LectureScene& scene, std::span<const int> truth,
                                      const BroadcastConfig& config) {
  config.validate();
  if (truth.size() != scene.length()) throw Error("demonstration length differs from the scene length");
  for (int v : truth) check_view(v, "demonstrated");

  BroadcastModels m;
  m.actor = std::make_unique<BroadcastActor>(config.actor_hidden, Rng(config.seed).fork(0x6163).seed());
  m.critic = std::make_unique<BroadcastCritic>(config.critic_hidden, config.critic_sees_action, Rng(config.seed).fork(0x6372).seed());
  const auto actor_params = m.actor->parameters();
  const auto critic_params = m.critic->parameters();
  const AdamConfig actor_adam{config.actor_lr};
  const AdamConfig critic_adam{config.critic_lr};

  const std::size_t window = std::min(config.window, scene.length());
  const std::size_t batch = config.batch_size;
  const std::size_t rows = batch * window;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  const std::size_t critic_width = kStateWidth + (config.critic_sees_action ? kCameras : 0);
  const auto demo_durations = durations_before(truth);
  Rng picker = Rng(config.seed).fork(0x7069636b);
  const Rng streams = Rng(config.seed).fork(0x726f6c6c);

  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::vector<std::size_t> time(batch);
    std::vector<int> previous(batch);
    std::vector<std::size_t> duration(batch);
    std::vector<Rng> rngs;
    for (std::size_t b = 0; b < batch; ++b) {
      time[b] = picker.index(scene.length() - window + 1);
      previous[b] = time[b] == 0 ? -1 : truth[time[b] - 1];
      duration[b] = demo_durations[time[b]];
      rngs.push_back(streams.fork(it).fork(b));
    }

    // Row b * window + s holds step s of episode b.
    Tensor states = Tensor::matrix(rows, kStateWidth);
    Tensor critic_in = Tensor::matrix(rows, critic_width);
    Tensor rewards = Tensor::matrix(rows, 1);
    std::vector<int> chosen(rows);
    for (std::size_t s = 0; s < window; ++s) {
      Tensor step = Tensor::matrix(batch, kStateWidth);
      for (std::size_t b = 0; b < batch; ++b) {
        const auto st = make_state(scene, time[b] + s, previous[b], duration[b]);
        for (std::size_t k = 0; k < kStateWidth; ++k) step.at(b, k) = st[k];
      }
      Tape tape;
      const auto& logp = tape.value(m.actor->forward(tape, tape.constant(step)));
      for (std::size_t b = 0; b < batch; ++b) {
        CameraValues probs{};
        for (std::size_t c = 0; c < kCameras; ++c) probs[c] = std::exp(logp.at(b, c));
        const int view = static_cast<int>(rngs[b].categorical(probs));
        const std::size_t row = b * window + s;
        for (std::size_t k = 0; k < kStateWidth; ++k) {
          states.at(row, k) = step.at(b, k);
          critic_in.at(row, k) = step.at(b, k);
        }
        if (config.critic_sees_action) critic_in.at(row, kStateWidth + static_cast<std::size_t>(view)) = 1.0;
        rewards.at(row, 0) = imitation_reward(view, truth[time[b] + s]);
        chosen[row] = view;
        duration[b] = view == previous[b] ? duration[b] + 1 : 1;
        previous[b] = view;
      }
    }

    BroadcastLogEntry entry;
    entry.iteration = it;
    for (double r : rewards.data()) entry.mean_reward += r;
    entry.mean_reward /= static_cast<double>(rows);

    Tensor adv = Tensor::matrix(rows, 1);
    {
      Tape tape;
      const auto& values = tape.value(m.critic->forward(tape, tape.constant(critic_in)));
      const std::vector<double> terminal{0.0};
      for (std::size_t b = 0; b < batch; ++b) {
        const auto a = advantages(rewards.data().subspan(b * window, window), values.data().subspan(b * window, window),
                                  terminal, 1, config.gamma);
        for (std::size_t s = 0; s < window; ++s) adv[b * window + s] = a[s] * inv_batch;
      }
    }
    {
      Tape tape;
      const Var loss = ops::scale(
          tape, critic_loss(tape, m.critic->forward(tape, tape.constant(critic_in)), rewards, window, config.gamma),
          inv_batch);
      entry.critic_loss = tape.value(loss)[0];
      tape.backward(loss);
      adam_step(critic_params, critic_adam);
    }
    {
      Tape tape;
      const std::array<Var, 1> logp{m.actor->forward(tape, tape.constant(states))};
      Var loss = actor_loss(tape, logp, chosen, adv);
      if (config.entropy_weight > 0.0) {
        loss = ops::add(tape, loss, ops::scale(tape, ops::entropy_sum(tape, logp[0]), -config.entropy_weight * inv_batch));
      }
      entry.actor_loss = tape.value(loss)[0];
      tape.backward(loss);
      adam_step(actor_params, actor_adam);
    }
    m.log.push_back(entry);
  }
  return m;
}

void write_scene(const LectureScene& scene, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << kSceneMagic << ' ' << kSceneVersion << "\ncameras " << kCameras << "\nlength " << scene.length() << '\n';
  for (const auto& row : scene.events) {
    for (std::size_t c = 0; c < kCameras; ++c) out << (c ? " " : "") << text::format_double(row[c]);
    out << '\n';
  }
  if (!out) throw Error("failed writing " + path.string());
}

LectureScene read_scene(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  const std::string source = path.string();
  std::string line;
  std::size_t line_no = 0;
  auto next = [&](const char* what) {
    if (!std::getline(in, line)) throw ParseError(source, line_no + 1, std::string("missing ") + what);
    ++line_no;
    return text::split(text::trim(line), ' ');
  };
  auto header = next("header");
  if (header.size() != 2 || header[0] != kSceneMagic) throw ParseError(source, line_no, "not a lecture scene file");
  if (header[1] != std::to_string(kSceneVersion)) {
    throw ParseError(source, line_no, "unsupported version " + std::string(header[1]));
  }
  auto field = [&](const char* key) -> std::size_t {
    auto parts = next(key);
    if (parts.size() != 2 || parts[0] != key) throw ParseError(source, line_no, std::string("expected '") + key + " N'");
    try {
      const auto v = text::parse_int(parts[1]);
      if (v < 0) throw Error("negative");
      return static_cast<std::size_t>(v);
    } catch (const Error& e) {
      throw ParseError(source, line_no, std::string(key) + ": " + e.what());
    }
  };
  if (field("cameras") != kCameras) throw ParseError(source, line_no, "only 7 cameras are supported");
  const std::size_t length = field("length");
  LectureScene scene;
  scene.events.resize(length);
  for (std::size_t t = 0; t < length; ++t) {
    const auto parts = next("event row");
    if (parts.size() != kCameras) {
      throw ParseError(source, line_no, "expected 7 event values, got " + std::to_string(parts.size()));
    }
    for (std::size_t c = 0; c < kCameras; ++c) {
      try {
        scene.events[t][c] = text::parse_double(parts[c]);
      } catch (const Error& e) {
        throw ParseError(source, line_no, e.what());
      }
      if (!(scene.events[t][c] >= 0.0 && scene.events[t][c] <= 1.0)) {
        throw ParseError(source, line_no, "event salience must lie in [0, 1]");
      }
    }
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (!text::trim(line).empty()) throw ParseError(source, line_no, "rows beyond the declared length");
  }
  return scene;
}

void write_sequence(std::span<const int> views, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (int v : views) out << v << '\n';
  if (!out) throw Error("failed writing " + path.string());
}

ViewSequence read_sequence(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  ViewSequence out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto s = text::trim(line);
    if (s.empty()) continue;
    try {
      const auto v = text::parse_int(s);
      if (v < 0 || v >= static_cast<long long>(kCameras)) throw Error("view outside [0, 7)");
      out.push_back(static_cast<int>(v));
    } catch (const Error& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return out;
}

}  // namespace shotwright::broadcast
