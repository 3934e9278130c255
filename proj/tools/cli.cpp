#include "cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "shotwright/broadcast.hpp"
#include "shotwright/checkpoint.hpp"
#include "shotwright/error.hpp"
#include "shotwright/evaluation.hpp"
#include "shotwright/text.hpp"
#include "shotwright/training.hpp"

#ifndef SHOTWRIGHT_VERSION
#define SHOTWRIGHT_VERSION "unknown"
#endif

namespace shotwright::cli {

namespace fs = std::filesystem;
namespace bc = shotwright::broadcast;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Common {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string dataset;
  std::string ckpt;
  std::string out;
  std::string repr;
  double concentration = 1.0;
  double gamma = 0.9;
  std::vector<std::string> sets;
  bool emit_csv = false;
};

struct SynthOptions {
  std::size_t scenes = 100;
  std::size_t shots = 12;
  double determinism = 1.0;
  bool per_attribute = false;
  std::size_t holdout = 0;
  bool allow_short = false;
};

struct TrainOptions {
  std::size_t epochs = 0;
  std::size_t iterations = 0;
  double lr = 0.0;
};

struct EvalOptionsCli {
  bool random = false;
  std::string label;
};

struct BroadcastOptions {
  std::string style = "slide";
  std::size_t length = 3080;
  std::size_t train_length = 0;
  double event_rate = 0.1;
  std::size_t iterations = 0;
};

/// Files written into the output directory, in order.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    if (dir.empty()) throw UsageError("--out is required");
    fs::create_directories(dir_);
  }

  fs::path file(const std::string& name) {
    names_.push_back(name);
    return dir_ / name;
  }
  void write(const std::string& name, const std::string& content) {
    const auto path = file(name);
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out) throw Error("failed writing " + path.string());
  }
  const std::vector<std::string>& names() const { return names_; }
  const fs::path& dir() const { return dir_; }

 private:
  fs::path dir_;
  std::vector<std::string> names_;
};

std::map<std::string, std::string> parse_entries(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out[std::string(text::trim(std::string_view(line).substr(0, eq)))] =
        std::string(text::trim(std::string_view(line).substr(eq + 1)));
  }
  return out;
}

bool given(const CLI::App& sub, const std::string& name) {
  const auto* opt = sub.get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

/// Config file entries, then --set pairs, then the dedicated flags.
std::map<std::string, std::string> collect_entries(const Common& c, const CLI::App& sub,
                                                   const std::map<std::string, std::string>& extra) {
  std::map<std::string, std::string> entries;
  if (!c.config_path.empty()) entries = read_config_file(c.config_path);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects KEY=VALUE, got '" + s + "'");
    entries[std::string(text::trim(std::string_view(s).substr(0, eq)))] =
        std::string(text::trim(std::string_view(s).substr(eq + 1)));
  }
  if (given(sub, "--seed")) entries["seed"] = std::to_string(c.seed);
  if (given(sub, "--repr")) entries["repr"] = c.repr;
  if (given(sub, "--concentration")) entries["concentration"] = text::format_double(c.concentration);
  if (given(sub, "--gamma")) entries["gamma"] = text::format_double(c.gamma);
  for (const auto& [k, v] : extra) entries[k] = v;
  return entries;
}

template <typename Config>
Config resolve(const std::map<std::string, std::string>& entries) {
  Config config;
  try {
    apply_config_entries(config, entries);
    config.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return config;
}

std::vector<Episode> load_episodes(const std::string& path, const TrainConfig& config) {
  if (path.empty()) throw UsageError("--dataset is required");
  auto scenes = load_dataset(path);
  apply_representation(scenes, config.repr, config.concentration, config.seed);
  auto episodes = sample_episodes(scenes, config.stride);
  if (episodes.empty()) throw Error(path + " yields no 9-shot episodes");
  return episodes;
}

ModelPair load_models(const std::string& path) {
  if (path.empty()) throw UsageError("--ckpt is required");
  if (!fs::exists(path)) throw Error("checkpoint not found: " + path);
  return load_checkpoint(path);
}

/// Rows of cells joined by `sep`, one row per line.
std::string table(const std::vector<std::vector<std::string>>& rows, char sep) {
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? std::string(1, sep) : "") + row[k];
    out += '\n';
  }
  return out;
}

/// Space-padded columns for terminal output.
std::string aligned(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()));
    for (std::size_t k = 0; k < row.size(); ++k) width[k] = std::max(width[k], row[k].size());
  }
  std::string out;
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.size(); ++k) {
      out += row[k];
      if (k + 1 < row.size()) out += std::string(width[k] - row[k].size() + 2, ' ');
    }
    out += '\n';
  }
  return out;
}

void write_table(OutputDir& dir, const std::string& stem, const std::vector<std::vector<std::string>>& rows,
                 bool emit_csv) {
  dir.write(stem + ".txt", table(rows, ' '));
  if (emit_csv) dir.write(stem + ".csv", table(rows, ','));
}

using Clock = std::chrono::steady_clock;

void finish(OutputDir& dir, RunManifest manifest, Clock::time_point start) {
  manifest.tool_version = SHOTWRIGHT_VERSION;
  manifest.outputs = dir.names();
  manifest.outputs.push_back("manifest.json");
  manifest.duration_seconds = std::chrono::duration<double>(Clock::now() - start).count();
  std::ofstream out(dir.dir() / "manifest.json", std::ios::binary);
  out << manifest.to_json();
  if (!out) throw Error("failed writing manifest.json");
}

int cmd_synth_data(const Common& c, const CLI::App& sub, const SynthOptions& o, std::ostream& out) {
  const auto start = Clock::now();
  if (o.scenes == 0) throw UsageError("--scenes must be positive");
  if (o.shots == 0) throw UsageError("--shots must be positive");
  if (o.shots < kEpisodeShots && !o.allow_short) {
    throw UsageError("--shots " + std::to_string(o.shots) + " is below the " + std::to_string(kEpisodeShots) +
                     "-shot episode minimum (pass --allow-short to write it anyway)");
  }
  if (!(o.determinism >= 0.0 && o.determinism <= 1.0)) throw UsageError("--determinism must lie in [0, 1]");
  ReprMode mode = ReprMode::OneHot;
  if (given(sub, "--repr")) {
    try {
      mode = parse_repr_mode(c.repr);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  if (mode == ReprMode::Stored) throw UsageError("synth-data needs --repr onehot or synthetic");
  if (mode == ReprMode::Synthetic && !(c.concentration > 0.0)) throw UsageError("--concentration must be > 0");

  OutputDir dir(c.out);
  auto scenes = generate_markov_dataset({o.scenes + o.holdout, o.shots, o.determinism, c.seed, o.per_attribute});
  apply_representation(scenes, mode, c.concentration, c.seed);
  std::vector<Scene> heldout(scenes.begin() + static_cast<std::ptrdiff_t>(o.scenes), scenes.end());
  scenes.resize(o.scenes);
  save_dataset(scenes, dir.file("train.tsv"));
  if (o.holdout > 0) save_dataset(heldout, dir.file("heldout.tsv"));

  RunManifest m;
  m.command = "synth-data";
  m.seed = c.seed;
  m.config = {{"scenes", std::to_string(o.scenes)},
              {"shots", std::to_string(o.shots)},
              {"determinism", text::format_double(o.determinism)},
              {"per_attribute", o.per_attribute ? "true" : "false"},
              {"holdout", std::to_string(o.holdout)},
              {"repr", std::string(to_string(mode))},
              {"concentration", text::format_double(c.concentration)}};
  finish(dir, m, start);
  out << "wrote " << o.scenes << " scenes x " << o.shots << " shots";
  if (o.holdout > 0) out << " and " << o.holdout << " held-out scenes";
  out << " to " << c.out << '\n';
  return kExitOk;
}

int cmd_pretrain(const Common& c, const CLI::App& sub, const TrainOptions& o, std::ostream& out) {
  const auto start = Clock::now();
  std::map<std::string, std::string> extra;
  if (given(sub, "--epochs")) extra["epochs"] = std::to_string(o.epochs);
  if (given(sub, "--lr")) extra["actor_lr"] = text::format_double(o.lr);
  const auto config = resolve<TrainConfig>(collect_entries(c, sub, extra));
  const auto episodes = load_episodes(c.dataset, config);
  OutputDir dir(c.out);

  auto models = c.ckpt.empty() ? make_models(config) : load_models(c.ckpt);
  const auto losses = pretrain_supervised(*models.actor, episodes, config);
  save_checkpoint(*models.actor, *models.critic, dir.file("model.ckpt"));
  dir.write("config.txt", to_text(config));
  std::vector<std::vector<std::string>> rows{{"epoch", "loss"}};
  for (std::size_t e = 0; e < losses.size(); ++e) rows.push_back({std::to_string(e), text::format_double(losses[e])});
  write_table(dir, "pretrain_log", rows, c.emit_csv);

  RunManifest m;
  m.command = "pretrain";
  m.seed = config.seed;
  m.config = parse_entries(to_text(config));
  m.inputs["dataset"] = c.dataset;
  if (!c.ckpt.empty()) m.inputs["ckpt"] = c.ckpt;
  finish(dir, m, start);
  out << "pretrained " << losses.size() << " epochs on " << episodes.size() << " episodes";
  if (!losses.empty()) out << ", final loss " << text::format_double(losses.back());
  out << '\n';
  return kExitOk;
}

int cmd_train_rl(const Common& c, const CLI::App& sub, const TrainOptions& o, std::ostream& out) {
  const auto start = Clock::now();
  std::map<std::string, std::string> extra;
  if (given(sub, "--iterations")) extra["rl_iterations"] = std::to_string(o.iterations);
  if (given(sub, "--lr")) extra["actor_lr"] = text::format_double(o.lr);
  const auto config = resolve<TrainConfig>(collect_entries(c, sub, extra));
  auto models = load_models(c.ckpt);
  const auto episodes = load_episodes(c.dataset, config);
  OutputDir dir(c.out);

  const auto log = train_rl(*models.actor, *models.critic, episodes, config);
  save_checkpoint(*models.actor, *models.critic, dir.file("model.ckpt"));
  dir.write("config.txt", to_text(config));
  std::vector<std::string> header{"iteration", "episode_reward", "critic_loss", "actor_loss", "actor_updated"};
  for (const auto& name : attribute_names()) header.push_back("reward." + name);
  std::vector<std::vector<std::string>> rows{header};
  for (const auto& e : log) {
    std::vector<std::string> row{std::to_string(e.iteration), text::format_double(e.episode_reward),
                                 text::format_double(e.critic_loss), text::format_double(e.actor_loss),
                                 e.actor_updated ? "1" : "0"};
    for (double r : e.mean_reward) row.push_back(text::format_double(r));
    rows.push_back(std::move(row));
  }
  write_table(dir, "rl_log", rows, c.emit_csv);

  RunManifest m;
  m.command = "train-rl";
  m.seed = config.seed;
  m.config = parse_entries(to_text(config));
  m.inputs = {{"dataset", c.dataset}, {"ckpt", c.ckpt}};
  finish(dir, m, start);
  out << "trained " << log.size() << " RL iterations on " << episodes.size() << " episodes";
  if (!log.empty()) out << ", final episode reward " << text::format_double(log.back().episode_reward);
  out << '\n';
  return kExitOk;
}

int cmd_eval(const Common& c, const CLI::App& sub, const EvalOptionsCli& o, std::ostream& out) {
  const auto start = Clock::now();
  if (o.random == !c.ckpt.empty()) throw UsageError("eval needs exactly one of --ckpt and --random");
  const auto config = resolve<TrainConfig>(collect_entries(c, sub, {}));
  std::optional<ModelPair> models;
  if (!o.random) models = load_models(c.ckpt);
  const auto episodes = load_episodes(c.dataset, config);
  OutputDir dir(c.out);

  std::unique_ptr<Predictor> predictor;
  if (o.random) {
    predictor = std::make_unique<RandomPredictor>(config.seed);
  } else {
    predictor = std::make_unique<ActorPredictor>(*models->actor);
  }
  const auto report = evaluate(episodes, *predictor, EvalOptions{config.seed, 0});
  if (!report.all_finite()) throw Error("evaluation produced a non-finite metric");

  const std::string label = !o.label.empty() ? o.label : o.random ? "Random" : "shotwright";
  dir.write("report.txt", to_key_value(report));
  dir.write("report.jsonl", to_json_line(report) + "\n");
  if (c.emit_csv) {
    std::vector<std::string> header{"label"};
    std::vector<std::string> row{label};
    for (const auto& name : attribute_names()) header.push_back("acc." + name);
    for (double a : report.per_attribute) row.push_back(text::format_double(a));
    header.insert(header.end(), {"one_acc", "two_acc", "rank1", "two_rank1", "reward"});
    for (double v : {report.one_acc, report.two_acc, report.rank1, report.two_rank1, report.total_reward}) {
      row.push_back(text::format_double(v));
    }
    dir.write("report.csv", table({header, row}, ','));
  }

  RunManifest m;
  m.command = "eval";
  m.seed = config.seed;
  m.config = parse_entries(to_text(config));
  m.config["predictor"] = o.random ? "random" : "actor";
  m.inputs["dataset"] = c.dataset;
  if (!o.random) m.inputs["ckpt"] = c.ckpt;
  finish(dir, m, start);
  out << table_header() << table_row(label, report);
  return kExitOk;
}

std::vector<std::vector<std::string>> metric_rows(const std::string& split, std::span<const int> truth,
                                                  std::span<const int> predicted) {
  const auto t = bc::style_metrics(truth);
  const auto p = bc::style_metrics(predicted);
  return {{split, "truth", "-", text::format_double(t.average_length), std::to_string(t.max_length),
           std::to_string(t.switches)},
          {split, "actor", text::format_double(bc::overlap_ratio(predicted, truth)),
           text::format_double(p.average_length), std::to_string(p.max_length), std::to_string(p.switches)}};
}

int cmd_broadcast_sim(const Common& c, const CLI::App& sub, const BroadcastOptions& o, std::ostream& out) {
  const auto start = Clock::now();
  if (o.length == 0) throw UsageError("--length must be positive");
  if (!(o.event_rate >= 0.0 && o.event_rate <= 1.0)) throw UsageError("--event-rate must lie in [0, 1]");
  bc::StyleParams omega;
  try {
    omega = bc::style_preset(o.style);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  std::map<std::string, std::string> extra;
  if (given(sub, "--iterations")) extra["iterations"] = std::to_string(o.iterations);
  auto entries = collect_entries(c, sub, extra);
  const auto config = resolve<bc::BroadcastConfig>(entries);
  OutputDir dir(c.out);

  const Rng root(config.seed);
  const std::size_t train_length = o.train_length ? o.train_length : o.length;
  const auto train = bc::generate_scene(root.fork(0x7472).seed(), train_length, o.event_rate);
  const auto test = bc::generate_scene(root.fork(0x7465).seed(), o.length, o.event_rate);
  const auto train_truth = bc::heuristic_edit(train, omega);
  const auto test_truth = bc::heuristic_edit(test, omega);
  const auto models = bc::train_broadcast_actor(train, train_truth, config);
  const auto train_pred = models.actor->play(train);
  const auto test_pred = models.actor->play(test);

  bc::write_scene(train, dir.file("train.scene"));
  bc::write_scene(test, dir.file("test.scene"));
  bc::write_sequence(train_truth, dir.file("train_truth.seq"));
  bc::write_sequence(test_truth, dir.file("test_truth.seq"));
  bc::write_sequence(train_pred, dir.file("train_pred.seq"));
  bc::write_sequence(test_pred, dir.file("test_pred.seq"));
  const auto params = models.actor->parameters();
  write_checkpoint(dir.file("actor.ckpt"), std::vector<const Parameter*>(params.begin(), params.end()));
  dir.write("config.txt", to_text(config));

  std::vector<std::vector<std::string>> report{{"split", "source", "overlap", "avg_length", "max_length", "switches"}};
  for (auto&& row : metric_rows("train", train_truth, train_pred)) report.push_back(std::move(row));
  for (auto&& row : metric_rows("test", test_truth, test_pred)) report.push_back(std::move(row));
  write_table(dir, "style_report", report, c.emit_csv);
  std::vector<std::vector<std::string>> log{{"iteration", "mean_reward", "critic_loss", "actor_loss"}};
  for (const auto& e : models.log) {
    log.push_back({std::to_string(e.iteration), text::format_double(e.mean_reward), text::format_double(e.critic_loss),
                   text::format_double(e.actor_loss)});
  }
  write_table(dir, "broadcast_log", log, c.emit_csv);

  RunManifest m;
  m.command = "broadcast-sim";
  m.seed = config.seed;
  m.config = parse_entries(to_text(config));
  m.config["style"] = o.style;
  m.config["length"] = std::to_string(o.length);
  m.config["train_length"] = std::to_string(train_length);
  m.config["event_rate"] = text::format_double(o.event_rate);
  finish(dir, m, start);

  out << "style " << o.style << '\n' << aligned(report);
  return kExitOk;
}

void add_common(CLI::App* sub, Common& c, bool dataset, bool ckpt, bool repr) {
  sub->add_option("--config", c.config_path, "Flat 'key = value' config file")->check(CLI::ExistingFile);
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--out", c.out, "Output directory")->required();
  sub->add_option("--set", c.sets, "Override one config key, KEY=VALUE (repeatable)");
  sub->add_flag("--emit-csv", c.emit_csv, "Also write plot-ready CSV tables");
  if (dataset) sub->add_option("--dataset", c.dataset, "Dataset file")->required();
  if (ckpt) sub->add_option("--ckpt", c.ckpt, "Checkpoint file");
  if (repr) {
    sub->add_option("--repr", c.repr, "Context representation")
        ->check(CLI::IsMember({"stored", "onehot", "synthetic"}));
    sub->add_option("--concentration", c.concentration, "Concentration of synthetic distributions");
  }
}

}  // namespace

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["seed"] = seed;
  j["config"] = config;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["duration_seconds"] = duration_seconds;
  return j.dump(2) + "\n";
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"shotwright: shot-attribute editing policies and lecture broadcast imitation", "shotwright"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SHOTWRIGHT_VERSION);

  Common common;
  SynthOptions synth;
  TrainOptions train;
  EvalOptionsCli eval;
  BroadcastOptions broadcast;

  auto* synth_cmd = app.add_subcommand("synth-data", "Write a Markov synthetic dataset");
  add_common(synth_cmd, common, false, false, true);
  synth_cmd->add_option("--scenes", synth.scenes, "Training scenes");
  synth_cmd->add_option("--shots", synth.shots, "Shots per scene");
  synth_cmd->add_option("--determinism", synth.determinism, "Probability of following the transition rule");
  synth_cmd->add_flag("--per-attribute", synth.per_attribute, "Toss the determinism coin per attribute");
  synth_cmd->add_option("--holdout", synth.holdout, "Extra scenes written to heldout.tsv");
  synth_cmd->add_flag("--allow-short", synth.allow_short, "Allow scenes shorter than one episode");

  auto* pretrain_cmd = app.add_subcommand("pretrain", "Supervised pretraining of the actor");
  add_common(pretrain_cmd, common, true, true, true);
  pretrain_cmd->add_option("--gamma", common.gamma, "Discount factor");
  pretrain_cmd->add_option("--epochs", train.epochs, "Training epochs");
  pretrain_cmd->add_option("--lr", train.lr, "Actor learning rate");

  auto* rl_cmd = app.add_subcommand("train-rl", "Actor-critic fine-tuning from a checkpoint");
  add_common(rl_cmd, common, true, true, true);
  rl_cmd->add_option("--gamma", common.gamma, "Discount factor");
  rl_cmd->add_option("--iterations", train.iterations, "RL iterations");
  rl_cmd->add_option("--lr", train.lr, "Actor learning rate");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate an actor or the random baseline");
  add_common(eval_cmd, common, true, true, true);
  eval_cmd->add_flag("--random", eval.random, "Evaluate uniformly random predictions");
  eval_cmd->add_option("--label", eval.label, "Row label in the printed table");

  auto* broadcast_cmd = app.add_subcommand("broadcast-sim", "Imitate a lecture broadcast style");
  add_common(broadcast_cmd, common, false, false, false);
  broadcast_cmd->add_option("--gamma", common.gamma, "Discount factor");
  broadcast_cmd->add_option("--style", broadcast.style, "Style preset: slide, closeup, steady, static, w1, w2, w3");
  broadcast_cmd->add_option("--length", broadcast.length, "Time units of the held-out scene");
  broadcast_cmd->add_option("--train-length", broadcast.train_length, "Time units of the training scene (default --length)");
  broadcast_cmd->add_option("--event-rate", broadcast.event_rate, "Probability that an event starts at an idle time unit");
  broadcast_cmd->add_option("--iterations", broadcast.iterations, "Training iterations");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth_data(common, *synth_cmd, synth, out);
    if (*pretrain_cmd) return cmd_pretrain(common, *pretrain_cmd, train, out);
    if (*rl_cmd) return cmd_train_rl(common, *rl_cmd, train, out);
    if (*eval_cmd) return cmd_eval(common, *eval_cmd, eval, out);
    return cmd_broadcast_sim(common, *broadcast_cmd, broadcast, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace shotwright::cli
