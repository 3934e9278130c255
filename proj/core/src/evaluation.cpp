#include "shotwright/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "shotwright/error.hpp"
#include "shotwright/policy.hpp"
#include "shotwright/text.hpp"

namespace shotwright {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(std::string(what) + ": " + std::to_string(a) + " predictions vs " + std::to_string(b) + " truths");
  }
}

// Slots of the per-episode predictor keys.
constexpr std::uint64_t kKeySlots = 8;
constexpr std::uint64_t kSlotFirst = 0;
constexpr std::uint64_t kSlotSecond = 1;
constexpr std::uint64_t kSlotRollout = 2;  // 2..5 for rollout steps 1..4

struct Tally {
  std::array<std::size_t, kAttributeCount> correct{};
  std::size_t one = 0;
  std::size_t two = 0;
  std::size_t rank1 = 0;
  std::size_t two_rank1 = 0;
  std::array<double, kAttributeCount> reward{};

  void merge(const Tally& o) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      correct[i] += o.correct[i];
      reward[i] += o.reward[i];
    }
    one += o.one;
    two += o.two;
    rank1 += o.rank1;
    two_rank1 += o.two_rank1;
  }
};

constexpr std::size_t kPredictBatch = 256;

std::vector<AttributeVector> predict_batched(Predictor& predictor, const std::vector<ContextState>& states,
                                             const std::vector<std::uint64_t>& keys) {
  std::vector<AttributeVector> out;
  out.reserve(states.size());
  for (std::size_t start = 0; start < states.size(); start += kPredictBatch) {
    const std::size_t n = std::min(kPredictBatch, states.size() - start);
    auto part = predictor.predict(std::span(states).subspan(start, n), std::span(keys).subspan(start, n));
    if (part.size() != n) throw Error("predictor returned the wrong number of predictions");
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

Tally evaluate_range(std::span<const Episode> episodes, std::size_t first_index, Predictor& predictor,
                     std::uint64_t seed) {
  const std::size_t n = episodes.size();
  std::vector<ContextState> states0, states1;
  std::vector<std::uint64_t> keys0, keys1;
  states0.reserve(n);
  states1.reserve(n);
  for (std::size_t e = 0; e < n; ++e) {
    const std::uint64_t base = (first_index + e) * kKeySlots;
    states0.push_back(initial_context(episodes[e]));
    states1.push_back(advance_context(states0.back(), episodes[e].targets[0].attributes));
    keys0.push_back(base + kSlotFirst);
    keys1.push_back(base + kSlotSecond);
  }
  const auto first = predict_batched(predictor, states0, keys0);
  const auto second = predict_batched(predictor, states1, keys1);

  Tally tally;
  const Rng order_root(seed);
  for (std::size_t e = 0; e < n; ++e) {
    const auto& ep = episodes[e];
    const bool one_ok = first[e] == ep.targets[0].attributes;
    for (std::size_t i = 0; i < kAttributeCount; ++i) tally.correct[i] += first[e][i] == ep.targets[0].attributes[i];
    tally.one += one_ok;
    tally.two += one_ok && second[e] == ep.targets[1].attributes;

    std::vector<Shot> candidates(ep.targets.begin(), ep.targets.end());
    Rng order = order_root.fork(first_index + e);
    std::shuffle(candidates.begin(), candidates.end(), order.engine());
    const auto hit = retrieve_shot(first[e], candidates);
    if (candidates[hit].attributes == ep.targets[0].attributes) {
      ++tally.rank1;
      candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(hit));
      const auto hit2 = retrieve_shot(second[e], candidates);
      tally.two_rank1 += candidates[hit2].attributes == ep.targets[1].attributes;
    }
  }

  // Greedy rollout advanced with the predictor's own choices.
  std::vector<AttributeVector> actions = first;
  std::vector<ContextState> states = states0;
  std::vector<std::uint64_t> keys(n);
  for (std::size_t step = 0; step < kTargetShots; ++step) {
    if (step > 0) {
      for (std::size_t e = 0; e < n; ++e) {
        states[e] = advance_context(states[e], actions[e]);
        keys[e] = (first_index + e) * kKeySlots + kSlotRollout + step - 1;
      }
      actions = predict_batched(predictor, states, keys);
    }
    for (std::size_t e = 0; e < n; ++e) {
      const auto r = reward(actions[e], episodes[e].targets[step].attributes);
      for (std::size_t i = 0; i < kAttributeCount; ++i) tally.reward[i] += r[i];
    }
  }
  return tally;
}

std::string fmt(double v) { return text::format_double(v); }

}  // namespace

bool EvalReport::all_finite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(per_attribute.begin(), per_attribute.end(), finite) &&
         std::all_of(mean_reward.begin(), mean_reward.end(), finite) && finite(one_acc) && finite(two_acc) &&
         finite(rank1) && finite(two_rank1) && finite(total_reward);
}

std::string to_key_value(const EvalReport& r) {
  std::ostringstream out;
  const auto& names = attribute_names();
  out << "episodes = " << r.episodes << '\n';
  for (std::size_t i = 0; i < kAttributeCount; ++i) out << "acc." << names[i] << " = " << fmt(r.per_attribute[i]) << '\n';
  out << "one_acc = " << fmt(r.one_acc) << '\n'
      << "two_acc = " << fmt(r.two_acc) << '\n'
      << "rank1 = " << fmt(r.rank1) << '\n'
      << "two_rank1 = " << fmt(r.two_rank1) << '\n';
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    out << "reward." << names[i] << " = " << fmt(r.mean_reward[i]) << '\n';
  }
  out << "reward.total = " << fmt(r.total_reward) << '\n';
  return out.str();
}

std::string to_json_line(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["episodes"] = r.episodes;
  nlohmann::ordered_json acc, rew;
  const auto& names = attribute_names();
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    acc[names[i]] = r.per_attribute[i];
    rew[names[i]] = r.mean_reward[i];
  }
  j["accuracy"] = acc;
  j["one_acc"] = r.one_acc;
  j["two_acc"] = r.two_acc;
  j["rank1"] = r.rank1;
  j["two_rank1"] = r.two_rank1;
  j["reward"] = rew;
  j["reward_total"] = r.total_reward;
  return j.dump();
}

std::string table_header() {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-12s %6s %6s %6s %6s %6s %6s %6s %6s | %6s %6s %6s %7s %7s\n", "method", "people",
                "angle", "loc", "motion", "size", "subj", "type", "sound", "1-Acc", "2-Acc", "rank1", "2-rank1",
                "reward");
  return buf;
}

std::string table_row(const std::string& label, const EvalReport& r) {
  std::string out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-12s", label.c_str());
  out += buf;
  for (double a : r.per_attribute) {
    std::snprintf(buf, sizeof buf, " %6.1f", 100.0 * a);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, " | %6.1f %6.1f %6.1f %7.1f %7.2f\n", 100.0 * r.one_acc, 100.0 * r.two_acc,
                100.0 * r.rank1, 100.0 * r.two_rank1, r.total_reward);
  out += buf;
  return out;
}

std::array<double, kAttributeCount> per_attribute_accuracy(std::span<const AttributeVector> predictions,
                                                           std::span<const AttributeVector> truths) {
  require_same_length(predictions.size(), truths.size(), "per_attribute_accuracy");
  std::array<double, kAttributeCount> out{};
  if (predictions.empty()) return out;
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    for (std::size_t i = 0; i < kAttributeCount; ++i) out[i] += predictions[k][i] == truths[k][i];
  }
  for (auto& v : out) v /= static_cast<double>(predictions.size());
  return out;
}

double overall_accuracy(std::span<const AttributeVector> predictions, std::span<const AttributeVector> truths) {
  require_same_length(predictions.size(), truths.size(), "overall_accuracy");
  if (predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < predictions.size(); ++k) hits += predictions[k] == truths[k];
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double two_shot_accuracy(std::span<const AttributeVector> first_predictions,
                         std::span<const AttributeVector> first_truths,
                         std::span<const AttributeVector> second_predictions,
                         std::span<const AttributeVector> second_truths) {
  require_same_length(first_predictions.size(), first_truths.size(), "two_shot_accuracy");
  require_same_length(second_predictions.size(), second_truths.size(), "two_shot_accuracy");
  require_same_length(first_predictions.size(), second_predictions.size(), "two_shot_accuracy");
  if (first_predictions.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t k = 0; k < first_predictions.size(); ++k) {
    hits += first_predictions[k] == first_truths[k] && second_predictions[k] == second_truths[k];
  }
  return static_cast<double>(hits) / static_cast<double>(first_predictions.size());
}

std::size_t retrieve_shot(const AttributeVector& query, std::span<const Shot> candidates) {
  if (candidates.empty()) throw Error("retrieve_shot: no candidates");
  std::size_t best = 0;
  int best_distance = static_cast<int>(kAttributeCount) + 1;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    int d = 0;
    for (std::size_t i = 0; i < kAttributeCount; ++i) d += query[i] != candidates[k].attributes[i];
    if (d < best_distance) {
      best_distance = d;
      best = k;
    }
  }
  return best;
}

RewardSummary mean_episode_reward(std::span<const std::vector<std::array<double, kAttributeCount>>> episode_rewards) {
  if (episode_rewards.empty()) throw Error("mean_episode_reward: no episodes");
  RewardSummary out;
  std::size_t steps = 0;
  for (const auto& ep : episode_rewards) {
    for (const auto& step : ep) {
      for (std::size_t i = 0; i < kAttributeCount; ++i) {
        out.per_channel[i] += step[i];
        out.total += step[i];
      }
      ++steps;
    }
  }
  if (steps > 0) {
    for (auto& v : out.per_channel) v /= static_cast<double>(steps);
  }
  out.total /= static_cast<double>(episode_rewards.size());
  return out;
}

std::vector<AttributeVector> ActorPredictor::predict(std::span<const ContextState> states,
                                                     std::span<const std::uint64_t>) {
  const auto dists = actor_.predict(states);
  std::vector<AttributeVector> out;
  out.reserve(dists.size());
  for (const auto& d : dists) out.push_back(greedy_action(d));
  return out;
}

std::vector<AttributeVector> RandomPredictor::predict(std::span<const ContextState> states,
                                                      std::span<const std::uint64_t> keys) {
  if (keys.size() != states.size()) throw Error("RandomPredictor needs one key per state");
  const Rng root(seed_);
  std::vector<AttributeVector> out;
  out.reserve(states.size());
  for (auto key : keys) {
    Rng rng = root.fork(key);
    std::array<int, kAttributeCount> c{};
    for (std::size_t i = 0; i < kAttributeCount; ++i) c[i] = static_cast<int>(rng.index(kClassCounts[i]));
    out.emplace_back(c);
  }
  return out;
}

std::size_t default_thread_count() {
  const std::size_t hw = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SHOTWRIGHT_THREADS")) {
    try {
      const auto v = text::parse_int(env);
      if (v >= 1) return std::min<std::size_t>(hw, static_cast<std::size_t>(v));
    } catch (const Error&) {
    }
    throw Error("SHOTWRIGHT_THREADS must be a positive integer, got '" + std::string(env) + "'");
  }
  return hw;
}

EvalReport evaluate(std::span<const Episode> episodes, Predictor& predictor, const EvalOptions& options) {
  EvalReport report;
  report.episodes = episodes.size();
  if (episodes.empty()) return report;

  const std::size_t threads =
      std::min(episodes.size(), options.threads > 0 ? options.threads : default_thread_count());
  std::vector<Tally> tallies(threads);
  const std::size_t chunk = (episodes.size() + threads - 1) / threads;
  auto run = [&](std::size_t w) {
    const std::size_t begin = w * chunk;
    const std::size_t end = std::min(episodes.size(), begin + chunk);
    if (begin < end) tallies[w] = evaluate_range(episodes.subspan(begin, end - begin), begin, predictor, options.seed);
  };
  if (threads == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        try {
          run(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  Tally total;
  for (const auto& t : tallies) total.merge(t);
  const double n = static_cast<double>(episodes.size());
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    report.per_attribute[i] = static_cast<double>(total.correct[i]) / n;
    report.mean_reward[i] = total.reward[i] / (n * static_cast<double>(kTargetShots));
    report.total_reward += total.reward[i];
  }
  report.total_reward /= n;
  report.one_acc = static_cast<double>(total.one) / n;
  report.two_acc = static_cast<double>(total.two) / n;
  report.rank1 = static_cast<double>(total.rank1) / n;
  report.two_rank1 = static_cast<double>(total.two_rank1) / n;
  return report;
}

}  // namespace shotwright
