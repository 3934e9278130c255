#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "json.hpp"
#include "shotwright/evaluation.hpp"
#include "shotwright/policy.hpp"

using namespace shotwright;

namespace {

AttributeVector random_vector(Rng& rng) {
  std::array<int, kAttributeCount> c{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) c[i] = static_cast<int>(rng.index(kClassCounts[i]));
  return AttributeVector(c);
}

AttributeVector shifted(const AttributeVector& v, std::size_t channel) {
  auto c = v.classes();
  c[channel] = (c[channel] + 1) % static_cast<int>(kClassCounts[channel]);
  return AttributeVector(c);
}

Shot shot_of(const AttributeVector& v, int id = 0) { return Shot{"k" + std::to_string(id), "s", v, std::nullopt}; }

std::vector<Episode> random_episodes(std::size_t n, std::uint64_t seed, bool distinct = true) {
  Rng rng(seed);
  std::vector<Episode> out(n);
  for (auto& ep : out) {
    int id = 0;
    for (auto& s : ep.context) s = shot_of(random_vector(rng), id++);
    for (auto& s : ep.targets) s = shot_of(random_vector(rng), id++);
    if (distinct) {
      for (std::size_t a = 0; a < kTargetShots; ++a) {
        for (std::size_t b = 0; b < a; ++b) {
          while (ep.targets[a].attributes == ep.targets[b].attributes) ep.targets[a].attributes = random_vector(rng);
        }
      }
    }
  }
  return out;
}

// Reads the episode and step back out of the evaluation keys.
class OraclePredictor final : public Predictor {
 public:
  explicit OraclePredictor(std::span<const Episode> episodes, bool second_wrong = false)
      : episodes_(episodes), second_wrong_(second_wrong) {}
  std::vector<AttributeVector> predict(std::span<const ContextState>, std::span<const std::uint64_t> keys) override {
    std::vector<AttributeVector> out;
    for (auto key : keys) {
      const auto& ep = episodes_[key / 8];
      const auto slot = key % 8;
      const std::size_t step = slot == 0 ? 0 : slot == 1 ? 1 : slot - 1;
      auto v = ep.targets[step].attributes;
      if (slot == 1 && second_wrong_) v = shifted(v, 3);
      out.push_back(v);
    }
    return out;
  }

 private:
  std::span<const Episode> episodes_;
  bool second_wrong_;
};

}  // namespace

TEST_CASE("per_attribute_accuracy") {
  Rng rng(1);
  std::vector<AttributeVector> truths;
  for (int k = 0; k < 10; ++k) truths.push_back(random_vector(rng));
  for (double a : per_attribute_accuracy(truths, truths)) CHECK(a == 1.0);

  std::vector<AttributeVector> two{truths[0], truths[1]};
  std::vector<AttributeVector> half{truths[0], truths[2]};
  for (std::size_t i = 0; i < kAttributeCount; ++i) two[1] = shifted(two[1], i);
  const auto acc = per_attribute_accuracy(std::vector<AttributeVector>{truths[0], two[1]},
                                          std::vector<AttributeVector>{truths[0], truths[1]});
  for (double a : acc) CHECK(a == 0.5);

  std::vector<AttributeVector> preds, ts;
  for (int k = 0; k < 100000; ++k) {
    preds.push_back(random_vector(rng));
    ts.push_back(random_vector(rng));
  }
  CHECK(std::abs(per_attribute_accuracy(preds, ts)[2] - 1.0 / 3.0) <= 0.01);
  CHECK(overall_accuracy(preds, ts) < 1e-4);
  CHECK_THROWS_AS(per_attribute_accuracy(preds, half), Error);
}

TEST_CASE("overall_accuracy") {
  Rng rng(2);
  std::vector<AttributeVector> truths, one_off;
  for (int k = 0; k < 20; ++k) {
    truths.push_back(random_vector(rng));
    one_off.push_back(shifted(truths.back(), static_cast<std::size_t>(k) % kAttributeCount));
  }
  CHECK(overall_accuracy(truths, truths) == 1.0);
  CHECK(overall_accuracy(one_off, truths) == 0.0);
  CHECK_THROWS_AS(overall_accuracy(std::vector<AttributeVector>(3), truths), Error);
}

TEST_CASE("two_shot_accuracy") {
  Rng rng(3);
  std::vector<AttributeVector> t1, t2, wrong2;
  for (int k = 0; k < 50; ++k) {
    t1.push_back(random_vector(rng));
    t2.push_back(random_vector(rng));
    wrong2.push_back(shifted(t2.back(), 0));
  }
  CHECK(two_shot_accuracy(t1, t1, t2, t2) == 1.0);
  CHECK(two_shot_accuracy(t1, t1, wrong2, t2) == 0.0);
  CHECK_THROWS_AS(two_shot_accuracy(t1, t1, std::vector<AttributeVector>(2), t2), Error);

  SUBCASE("independent steps multiply") {
    const double p1 = 0.6, p2 = 0.45;
    std::vector<AttributeVector> f, s, ft, st;
    for (int k = 0; k < 20000; ++k) {
      ft.push_back(random_vector(rng));
      st.push_back(random_vector(rng));
      f.push_back(rng.bernoulli(p1) ? ft.back() : shifted(ft.back(), 1));
      s.push_back(rng.bernoulli(p2) ? st.back() : shifted(st.back(), 5));
    }
    const double a1 = overall_accuracy(f, ft), a2 = overall_accuracy(s, st);
    CHECK(std::abs(two_shot_accuracy(f, ft, s, st) - a1 * a2) <= 0.03);
  }
}

TEST_CASE("retrieve_shot") {
  Rng rng(4);
  std::vector<Shot> c;
  for (int k = 0; k < 5; ++k) c.push_back(shot_of(random_vector(rng), k));
  CHECK(retrieve_shot(c[2].attributes, c) == 2);

  SUBCASE("ties go to the earlier candidate") {
    const AttributeVector q{};
    std::vector<Shot> tie{shot_of(shifted(q, 0)), shot_of(shifted(q, 1))};
    CHECK(retrieve_shot(q, tie) == 0);
  }
  SUBCASE("Hamming order") {
    const AttributeVector q({1, 1, 1, 1, 1, 1, 1, 1});
    std::vector<Shot> two{shot_of(shifted(shifted(shifted(q, 0), 1), 2)), shot_of(shifted(q, 4))};
    CHECK(retrieve_shot(q, two) == 1);
  }
  SUBCASE("empty list") { CHECK_THROWS_AS(retrieve_shot(AttributeVector{}, std::vector<Shot>{}), Error); }
  SUBCASE("permutation covariance with a unique minimum") {
    for (int n = 0; n < 500; ++n) {
      std::vector<Shot> cands;
      for (int k = 0; k < 5; ++k) cands.push_back(shot_of(random_vector(rng), k));
      const auto q = shifted(cands[static_cast<std::size_t>(n % 5)].attributes, static_cast<std::size_t>(n % 8));
      std::array<int, 5> dist{};
      for (std::size_t k = 0; k < 5; ++k) {
        for (std::size_t i = 0; i < kAttributeCount; ++i) dist[k] += q[i] != cands[k].attributes[i];
      }
      const int best = *std::min_element(dist.begin(), dist.end());
      if (std::count(dist.begin(), dist.end(), best) != 1) continue;
      std::array<std::size_t, 5> perm{0, 1, 2, 3, 4};
      std::shuffle(perm.begin(), perm.end(), rng.engine());
      std::vector<Shot> permuted;
      for (auto p : perm) permuted.push_back(cands[p]);
      CHECK(perm[retrieve_shot(q, permuted)] == retrieve_shot(q, cands));
    }
  }
}

TEST_CASE("mean_episode_reward") {
  std::vector<std::vector<ChannelValues>> perfect(3, std::vector<ChannelValues>(5)), wrong = perfect;
  for (auto& ep : perfect) {
    for (auto& s : ep) s.fill(1.0);
  }
  for (auto& ep : wrong) {
    for (auto& s : ep) s.fill(-1.0);
  }
  CHECK(mean_episode_reward(perfect).total == 40.0);
  CHECK(mean_episode_reward(wrong).total == -40.0);
  CHECK(mean_episode_reward(wrong).per_channel[3] == -1.0);
  CHECK_THROWS_AS(mean_episode_reward(std::vector<std::vector<ChannelValues>>{}), Error);
}

TEST_CASE("evaluate with a uniform-random predictor") {
  const auto episodes = random_episodes(20000, 5);
  RandomPredictor random(11);
  const auto r = evaluate(episodes, random, {3, 0});
  for (std::size_t i = 0; i < kAttributeCount; ++i) {
    CAPTURE(i);
    CHECK(std::abs(r.per_attribute[i] - 1.0 / static_cast<double>(kClassCounts[i])) <= 0.015);
  }
  CHECK(r.one_acc < 1e-3);
  CHECK(std::abs(r.rank1 - 0.2) <= 0.02);
  CHECK(std::abs(r.two_rank1 - 0.05) <= 0.01);
  // 5 * Σ (2/C_i - 1) = -6605/252
  CHECK(std::abs(r.total_reward - (-6605.0 / 252.0)) <= 1.0);
  CHECK(r.two_acc <= r.one_acc);
  CHECK(r.two_rank1 <= r.rank1);
  CHECK(r.all_finite());
}

TEST_CASE("evaluate with an oracle predictor") {
  const auto episodes = random_episodes(300, 6);
  OraclePredictor oracle(episodes);
  const auto r = evaluate(episodes, oracle, {0, 1});
  for (double a : r.per_attribute) CHECK(a == 1.0);
  CHECK(r.one_acc == 1.0);
  CHECK(r.two_acc == 1.0);
  CHECK(r.rank1 == 1.0);
  CHECK(r.two_rank1 == 1.0);
  CHECK(r.total_reward == 40.0);

  OraclePredictor second_wrong(episodes, true);
  const auto w = evaluate(episodes, second_wrong, {0, 1});
  CHECK(w.one_acc == 1.0);
  CHECK(w.two_acc == 0.0);

  SUBCASE("identical candidates always retrieve a ground-truth match") {
    auto same = random_episodes(50, 7, false);
    for (auto& ep : same) {
      for (auto& t : ep.targets) t.attributes = ep.targets[0].attributes;
    }
    RandomPredictor random(1);
    CHECK(evaluate(same, random).rank1 == 1.0);
  }
}

TEST_CASE("evaluate is independent of the thread count") {
  const auto episodes = random_episodes(999, 8);
  RandomPredictor random(2);
  const auto one = evaluate(episodes, random, {4, 1});
  const auto four = evaluate(episodes, random, {4, 4});
  CHECK(to_key_value(one) == to_key_value(four));

  ActorNetwork actor(ActorConfig{}, 1);
  ActorPredictor greedy(actor);
  const auto subset = std::span(episodes).first(100);
  CHECK(to_json_line(evaluate(subset, greedy, {0, 1})) == to_json_line(evaluate(subset, greedy, {0, 3})));
}

TEST_CASE("report serialization") {
  const auto episodes = random_episodes(100, 9);
  RandomPredictor random(3);
  const auto r = evaluate(episodes, random, {0, 1});
  const auto kv = to_key_value(r);
  CHECK(kv.find("acc.shot_location = ") != std::string::npos);
  CHECK(kv.find("two_rank1 = ") != std::string::npos);
  const auto line = to_json_line(r);
  CHECK(line.find('\n') == std::string::npos);
  const auto j = nlohmann::json::parse(line);
  CHECK(j["episodes"] == 100);
  CHECK(j["rank1"].get<double>() == r.rank1);
  CHECK(j["accuracy"]["shot_type"].get<double>() == r.per_attribute[6]);
  CHECK(table_row("Random", r).find("Random") == 0);
}
