#include "shotwright/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "shotwright/checkpoint.hpp"
#include "shotwright/error.hpp"
#include "shotwright/ops.hpp"
#include "shotwright/text.hpp"

namespace shotwright {

namespace {

std::size_t parse_size(const std::string& key, const std::string& value) {
  const auto v = text::parse_int(value);
  if (v < 0) throw Error("config key '" + key + "' must be non-negative, got " + value);
  return static_cast<std::size_t>(v);
}

std::string join_sizes(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? "," : "") + std::to_string(v[k]);
  return out;
}

constexpr std::string_view kArchitectureEntry = "meta.architecture";

}  // namespace

void TrainConfig::validate() const {
  if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw Error("learning rates must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must lie in (0, 1], got " + text::format_double(gamma));
  if (batch_size == 0) throw Error("batch_size must be positive");
  if (stride == 0) throw Error("stride must be positive");
  if (repr == ReprMode::Synthetic && !(concentration > 0.0)) throw Error("concentration must be > 0");
  if (actor.model_width == 0 || actor.blocks == 0 || actor.heads == 0 || actor.ff_width == 0) {
    throw Error("actor sizes must be positive");
  }
  if (actor.model_width % actor.heads != 0) throw Error("model_width must be divisible by heads");
  if (critic.hidden.empty() || std::find(critic.hidden.begin(), critic.hidden.end(), 0u) != critic.hidden.end()) {
    throw Error("critic_hidden must list positive widths");
  }
}

void apply_config_entries(TrainConfig& c, const std::map<std::string, std::string>& entries) {
  for (const auto& [key, value] : entries) {
    try {
      if (key == "actor_lr") c.actor_lr = text::parse_double(value);
      else if (key == "critic_lr") c.critic_lr = text::parse_double(value);
      else if (key == "gamma") c.gamma = text::parse_double(value);
      else if (key == "batch_size") c.batch_size = parse_size(key, value);
      else if (key == "epochs") c.epochs = parse_size(key, value);
      else if (key == "rl_iterations") c.rl_iterations = parse_size(key, value);
      else if (key == "critic_warmup") c.critic_warmup = parse_size(key, value);
      else if (key == "seed") c.seed = parse_size(key, value);
      else if (key == "repr") c.repr = parse_repr_mode(value);
      else if (key == "concentration") c.concentration = text::parse_double(value);
      else if (key == "stride") c.stride = parse_size(key, value);
      else if (key == "teacher_forcing") c.teacher_forcing = text::parse_bool(value);
      else if (key == "model_width") c.actor.model_width = parse_size(key, value);
      else if (key == "blocks") c.actor.blocks = parse_size(key, value);
      else if (key == "heads") c.actor.heads = parse_size(key, value);
      else if (key == "ff_width") c.actor.ff_width = parse_size(key, value);
      else if (key == "critic_hidden") {
        c.critic.hidden.clear();
        for (auto part : text::split(value, ',')) c.critic.hidden.push_back(parse_size(key, std::string(text::trim(part))));
      } else {
        throw Error("unknown config key '" + key + "'");
      }
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      if (std::string_view(e.what()).find(key) != std::string_view::npos) throw;
      throw Error("config key '" + key + "': " + e.what());
    }
  }
}

std::map<std::string, std::string> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const auto body = text::trim(std::string_view(line).substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(path.string(), number, "expected 'key = value'");
    const auto key = std::string(text::trim(body.substr(0, eq)));
    const auto value = std::string(text::trim(body.substr(eq + 1)));
    if (key.empty()) throw ParseError(path.string(), number, "empty key");
    out[key] = value;
  }
  return out;
}

std::string to_text(const TrainConfig& c) {
  std::ostringstream out;
  out << "actor_lr = " << text::format_double(c.actor_lr) << '\n'
      << "critic_lr = " << text::format_double(c.critic_lr) << '\n'
      << "gamma = " << text::format_double(c.gamma) << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "epochs = " << c.epochs << '\n'
      << "rl_iterations = " << c.rl_iterations << '\n'
      << "critic_warmup = " << c.critic_warmup << '\n'
      << "seed = " << c.seed << '\n'
      << "repr = " << to_string(c.repr) << '\n'
      << "concentration = " << text::format_double(c.concentration) << '\n'
      << "stride = " << c.stride << '\n'
      << "teacher_forcing = " << (c.teacher_forcing ? "true" : "false") << '\n'
      << "model_width = " << c.actor.model_width << '\n'
      << "blocks = " << c.actor.blocks << '\n'
      << "heads = " << c.actor.heads << '\n'
      << "ff_width = " << c.actor.ff_width << '\n'
      << "critic_hidden = " << join_sizes(c.critic.hidden) << '\n';
  return out.str();
}

MarkovRule::MarkovRule(std::uint64_t seed) {
  Rng rng = Rng(seed).fork(0x6d61726b);
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    const int classes = static_cast<int>(kClassCounts[i]);
    do {
      a_[i] = 1 + static_cast<int>(rng.index(kClassCounts[i] - 1));
    } while (std::gcd(a_[i], classes) != 1);
    c_[i] = static_cast<int>(rng.index(kClassCounts[i]));
  }
}

AttributeVector MarkovRule::next(const AttributeVector& prev) const {
  std::array<int, kAttributeCount> out{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    out[i] = (a_[i] * prev[i] + c_[i]) % static_cast<int>(kClassCounts[i]);
  }
  return AttributeVector(out);
}

std::vector<Scene> generate_markov_dataset(const MarkovConfig& config) {
  if (config.determinism < 0.0 || config.determinism > 1.0) throw Error("determinism must lie in [0, 1]");
  const MarkovRule rule(config.seed);
  auto uniform_vector = [](Rng& rng) {
    std::array<int, kAttributeCount> c{};
    for (std::size_t i = 0; i < kAttributeCount; ++i) c[i] = static_cast<int>(rng.index(kClassCounts[i]));
    return AttributeVector(c);
  };
  std::vector<Scene> scenes;
  scenes.reserve(config.scenes);
  for (std::size_t s = 0; s < config.scenes; ++s) {
    Rng rng = Rng(config.seed).fork(s + 1);
    Scene scene;
    char id[32];
    std::snprintf(id, sizeof id, "scene%05zu", s);
    scene.scene_id = id;
    AttributeVector prev;
    for (std::size_t k = 0; k < config.shots; ++k) {
      AttributeVector v;
      if (k == 0) {
        v = uniform_vector(rng);
      } else if (config.per_attribute) {
        auto c = rule.next(prev).classes();
        for (std::size_t i = 0; i < kAttributeCount; ++i) {
          if (!rng.bernoulli(config.determinism)) c[i] = static_cast<int>(rng.index(kClassCounts[i]));
        }
        v = AttributeVector(c);
      } else {
        v = rng.bernoulli(config.determinism) ? rule.next(prev) : uniform_vector(rng);
      }
      std::snprintf(id, sizeof id, "shot%04zu", k);
      scene.shots.push_back(Shot{id, scene.scene_id, v, std::nullopt});
      prev = v;
    }
    scenes.push_back(std::move(scene));
  }
  return scenes;
}

std::vector<double> pretrain_supervised(ActorNetwork& actor, const std::vector<Episode>& episodes,
                                        const TrainConfig& config) {
  if (episodes.empty()) throw Error("pretrain_supervised: dataset yields no episodes");
  config.validate();

  std::vector<ContextState> states;
  std::vector<AttributeVector> targets;
  for (const auto& ep : episodes) {
    ContextState state = initial_context(ep);
    const std::size_t steps = config.teacher_forcing ? kTargetShots : 1;
    for (std::size_t k = 0; k < steps; ++k) {
      states.push_back(state);
      targets.push_back(ep.targets[k].attributes);
      state = advance_context(state, ep.targets[k].attributes);
    }
  }

  const auto params = actor.parameters();
  const AdamConfig adam{config.actor_lr};
  Rng rng = Rng(config.seed).fork(0x70726574);
  std::vector<std::size_t> order(states.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> log;
  std::vector<ContextState> batch_states;
  std::vector<int> chosen;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t n = std::min(config.batch_size, order.size() - start);
      batch_states.clear();
      chosen.clear();
      for (std::size_t k = start; k < start + n; ++k) {
        batch_states.push_back(states[order[k]]);
        const auto& cls = targets[order[k]].classes();
        chosen.insert(chosen.end(), cls.begin(), cls.end());
      }
      // Mean negative log-likelihood: the actor loss with every advantage 1/n.
      Tensor weights = Tensor::matrix(n, kAttributeCount);
      weights.fill(1.0 / static_cast<double>(n));
      Tape t;
      const auto heads = actor.forward(t, batch_states);
      const Var loss = actor_loss(t, heads.heads, chosen, weights);
      total += t.value(loss)[0] * static_cast<double>(n);
      t.backward(loss);
      adam_step(params, adam);
    }
    if (!all_finite(params)) throw Error("pretraining produced non-finite parameters at epoch " + std::to_string(epoch));
    log.push_back(total / static_cast<double>(order.size()));
  }
  return log;
}

std::vector<RlLogEntry> train_rl(ActorNetwork& actor, CriticNetwork& critic, const std::vector<Episode>& episodes,
                                 const TrainConfig& config) {
  if (episodes.empty()) throw Error("train_rl: dataset yields no episodes");
  config.validate();
  const auto actor_params = actor.parameters();
  const auto critic_params = critic.parameters();
  const AdamConfig actor_adam{config.actor_lr};
  const AdamConfig critic_adam{config.critic_lr};
  Rng picker = Rng(config.seed).fork(0x726c6261);
  const Rng streams = Rng(config.seed).fork(0x726c726f);

  const std::size_t batch = config.batch_size;
  const std::size_t rows = batch * kTargetShots;
  const double inv_batch = 1.0 / static_cast<double>(batch);
  std::vector<RlLogEntry> log;
  std::vector<Episode> chosen_eps(batch);
  const std::size_t total_iterations = config.critic_warmup + config.rl_iterations;
  for (std::size_t it = 0; it < total_iterations; ++it) {
    for (auto& ep : chosen_eps) ep = episodes[picker.index(episodes.size())];
    const Rng iteration_rng = streams.fork(it);
    std::vector<Rng> rngs;
    rngs.reserve(batch);
    for (std::size_t b = 0; b < batch; ++b) rngs.push_back(iteration_rng.fork(b));
    const auto trajectories = rollout_batch(actor, critic, chosen_eps, rngs);

    std::vector<ContextState> states;
    std::vector<AttributeVector> actions;
    std::vector<int> chosen;
    Tensor rewards = Tensor::matrix(rows, kAttributeCount);
    Tensor adv = Tensor::matrix(rows, kAttributeCount);
    RlLogEntry entry;
    entry.iteration = it;
    std::size_t row = 0;
    for (const auto& traj : trajectories) {
      const auto a = advantage(traj, config.gamma);
      for (std::size_t s = 0; s < traj.length(); ++s, ++row) {
        states.push_back(traj.states[s]);
        actions.push_back(traj.actions[s]);
        chosen.insert(chosen.end(), traj.actions[s].classes().begin(), traj.actions[s].classes().end());
        for (std::size_t i = 0; i < kAttributeCount; ++i) {
          rewards.at(row, i) = traj.rewards[s][i];
          adv.at(row, i) = a[s][i] * inv_batch;
          entry.mean_reward[i] += traj.rewards[s][i];
          entry.episode_reward += traj.rewards[s][i];
        }
      }
    }
    for (auto& r : entry.mean_reward) r /= static_cast<double>(rows);
    entry.episode_reward *= inv_batch;

    {
      Tape t;
      const Var loss = ops::scale(t, critic_loss(t, critic.forward(t, states, actions), rewards, kTargetShots, config.gamma),
                                  inv_batch);
      entry.critic_loss = t.value(loss)[0];
      t.backward(loss);
      adam_step(critic_params, critic_adam);
    }
    if (it >= config.critic_warmup) {
      Tape t;
      const auto heads = actor.forward(t, states);
      const Var loss = actor_loss(t, heads.heads, chosen, adv);
      entry.actor_loss = t.value(loss)[0];
      t.backward(loss);
      adam_step(actor_params, actor_adam);
      entry.actor_updated = true;
    }
    if (!all_finite(actor_params) || !all_finite(critic_params)) {
      throw Error("RL training produced non-finite parameters at iteration " + std::to_string(it));
    }
    log.push_back(entry);
  }
  return log;
}

ModelPair make_models(const TrainConfig& config) {
  config.validate();
  return {std::make_unique<ActorNetwork>(config.actor, Rng(config.seed).fork(0x6163).seed()),
          std::make_unique<CriticNetwork>(config.critic, Rng(config.seed).fork(0x6372).seed())};
}

void save_checkpoint(ActorNetwork& actor, CriticNetwork& critic, const std::filesystem::path& path) {
  const auto& ac = actor.config();
  const auto& hidden = critic.config().hidden;
  std::vector<double> arch{static_cast<double>(ac.model_width), static_cast<double>(ac.blocks),
                           static_cast<double>(ac.heads), static_cast<double>(ac.ff_width)};
  for (auto h : hidden) arch.push_back(static_cast<double>(h));
  Parameter meta(std::string(kArchitectureEntry), Tensor({arch.size()}, arch));
  std::vector<const Parameter*> params{&meta};
  for (auto* p : actor.parameters()) params.push_back(p);
  for (auto* p : critic.parameters()) params.push_back(p);
  write_checkpoint(path, params);
}

ModelPair load_checkpoint(const std::filesystem::path& path) {
  const auto entries = read_checkpoint(path);
  const auto meta = std::find_if(entries.begin(), entries.end(),
                                 [](const CheckpointEntry& e) { return e.name == kArchitectureEntry; });
  if (meta == entries.end() || meta->value.size() < 5) {
    throw Error(path.string() + ": checkpoint lacks a valid '" + std::string(kArchitectureEntry) + "' entry");
  }
  const auto& a = meta->value;
  auto as_size = [&](std::size_t k) {
    if (!(a[k] >= 1.0) || a[k] != std::floor(a[k])) throw Error(path.string() + ": corrupt architecture entry");
    return static_cast<std::size_t>(a[k]);
  };
  TrainConfig config;
  config.actor = ActorConfig{as_size(0), as_size(1), as_size(2), as_size(3)};
  config.critic.hidden.clear();
  for (std::size_t k = 4; k < a.size(); ++k) config.critic.hidden.push_back(as_size(k));
  auto models = make_models(config);
  auto params = models.actor->parameters();
  for (auto* p : models.critic->parameters()) params.push_back(p);
  assign_parameters(entries, params);
  return models;
}

bool all_finite(std::span<Parameter* const> params) {
  return std::all_of(params.begin(), params.end(), [](const Parameter* p) { return p->value.all_finite(); });
}

}  // namespace shotwright
