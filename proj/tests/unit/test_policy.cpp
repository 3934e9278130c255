#include <chrono>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "shotwright/ops.hpp"
#include "shotwright/optim.hpp"
#include "shotwright/policy.hpp"
#include "support.hpp"

using namespace shotwright;

namespace {

AttributeVector random_vector(Rng& rng) {
  std::array<int, kAttributeCount> c{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) c[i] = static_cast<int>(rng.index(kClassCounts[i]));
  return AttributeVector(c);
}

ContextState random_state(Rng& rng) {
  std::array<AttributeDistribution, kContextShots> shots;
  for (auto& s : shots) s = synth_distribution(random_vector(rng), 1.0, rng);
  return ContextState(shots);
}

Episode random_episode(Rng& rng) {
  Episode ep;
  int k = 0;
  for (auto& s : ep.context) s = Shot{"c" + std::to_string(k++), "s", random_vector(rng), std::nullopt};
  for (auto& s : ep.targets) s = Shot{"t" + std::to_string(k++), "s", random_vector(rng), std::nullopt};
  return ep;
}

// Telescoped form: A_t = Σ_{k≥t} γ^{k-t} r_k + γ^{T-t} V_T - V_t.
std::vector<double> brute_force_advantages(const std::vector<double>& r, const std::vector<double>& v,
                                           const std::vector<double>& terminal, std::size_t channels, double gamma) {
  const std::size_t steps = r.size() / channels;
  std::vector<double> out(r.size());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t c = 0; c < channels; ++c) {
      double ret = 0.0;
      for (std::size_t k = t; k < steps; ++k) ret += std::pow(gamma, static_cast<double>(k - t)) * r[k * channels + c];
      ret += std::pow(gamma, static_cast<double>(steps - t)) * terminal[c];
      out[t * channels + c] = ret - v[t * channels + c];
    }
  }
  return out;
}

}  // namespace

TEST_CASE("reward") {
  const AttributeVector truth({1, 2, 0, 3, 4, 5, 6, 1});
  const auto all = reward(truth, truth);
  for (double r : all) CHECK(r == 1.0);
  const AttributeVector off({1, 2, 0, 3, 4, 5, 6, 2});
  const auto r = reward(off, truth);
  CHECK(r[7] == -1.0);
  CHECK(std::accumulate(r.begin(), r.end(), 0.0) == 6.0);
}

TEST_CASE("advantage examples") {
  SUBCASE("two steps, one channel") {
    const std::vector<double> r{1.0, -1.0}, v{0.5, 0.2}, term{0.0};
    const auto a = advantages(r, v, term, 1, 0.9);
    CHECK(a[1] == doctest::Approx(-1.2).epsilon(1e-12));
    CHECK(a[0] == doctest::Approx(-0.40).epsilon(1e-12));
    std::vector<ChannelValues> rows(2);
    rows[0][0] = a[0];
    rows[1][0] = a[1];
    CHECK(critic_loss(rows) == doctest::Approx(0.80).epsilon(1e-12));
  }
  SUBCASE("gamma zero reduces to r - V") {
    const std::vector<double> r{1.0, -1.0, 1.0}, v{0.3, -0.1, 0.7}, term{5.0};
    const auto a = advantages(r, v, term, 1, 0.0);
    for (std::size_t k = 0; k < 3; ++k) CHECK(a[k] == doctest::Approx(r[k] - v[k]));
  }
  SUBCASE("shape mismatch") {
    const std::vector<double> r{1.0, -1.0, 1.0}, v{0.3, -0.1}, term{0.0};
    CHECK_THROWS_AS(advantages(r, v, term, 1, 0.9), ShapeError);
  }
}

TEST_CASE("advantage recurrence matches the telescoped sum") {
  Rng rng(2024);
  double worst = 0.0;
  for (int n = 0; n < 1000; ++n) {
    const std::size_t steps = 1 + rng.index(5);
    const std::size_t channels = 8;
    const double gamma = rng.uniform();
    std::vector<double> r(steps * channels), v(steps * channels), term(channels);
    for (auto& x : r) x = rng.bernoulli(0.5) ? 1.0 : -1.0;
    for (auto& x : v) x = rng.uniform(-3.0, 3.0);
    for (auto& x : term) x = rng.bernoulli(0.5) ? 0.0 : rng.uniform(-3.0, 3.0);
    const auto fast = advantages(r, v, term, channels, gamma);
    const auto slow = brute_force_advantages(r, v, term, channels, gamma);
    for (std::size_t k = 0; k < fast.size(); ++k) worst = std::max(worst, std::abs(fast[k] - slow[k]));
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("actor loss properties") {
  Rng rng(5);
  std::vector<ChannelValues> lp(3), adv(3);
  for (auto& row : lp) {
    for (auto& x : row) x = std::log(rng.uniform(0.05, 1.0));
  }
  for (auto& row : adv) {
    for (auto& x : row) x = rng.uniform(-2.0, 2.0);
  }
  const double base = actor_loss(lp, adv);
  auto doubled = adv;
  for (auto& row : doubled) {
    for (auto& x : row) x *= 2.0;
  }
  CHECK(actor_loss(lp, doubled) == doctest::Approx(2.0 * base));

  // With positive advantage, raising log π lowers the loss.
  std::vector<ChannelValues> one(1), pos(1);
  one[0].fill(std::log(0.3));
  pos[0].fill(1.0);
  const double before = actor_loss(one, pos);
  one[0][2] = std::log(0.6);
  CHECK(actor_loss(one, pos) < before);
}

TEST_CASE("sample_action") {
  SUBCASE("uniform 3-class block draws each class a third of the time") {
    Rng rng(77);
    const AttributeDistribution uniform;
    std::array<std::size_t, 3> counts{};
    const std::size_t n = 30000;
    for (std::size_t k = 0; k < n; ++k) {
      const auto [a, lp] = sample_action(uniform, rng);
      ++counts[static_cast<std::size_t>(a[2])];
      CHECK(lp[2] == doctest::Approx(std::log(1.0 / 3.0)));
    }
    for (auto c : counts) CHECK(std::abs(static_cast<double>(c) / n - 1.0 / 3.0) <= 0.02);
  }
  SUBCASE("one-hot distribution always yields its class") {
    Rng rng(1);
    const AttributeVector v({3, 1, 2, 0, 5, 8, 7, 4});
    for (int k = 0; k < 100; ++k) CHECK(sample_action(one_hot_encode(v), rng).first == v);
  }
  SUBCASE("greedy ties go to the lowest class") {
    CHECK(greedy_action(AttributeDistribution{}) == AttributeVector{});
  }
}

TEST_CASE("tape critic loss agrees with the scalar path and has exact gradients") {
  Rng rng(31);
  const std::size_t episodes = 3, steps = 5, channels = 8;
  const double gamma = 0.9;
  Parameter values("values", testing::random_tensor({episodes * steps, channels}, rng));
  Tensor rewards = Tensor::matrix(episodes * steps, channels);
  for (auto& r : rewards.data()) r = rng.bernoulli(0.5) ? 1.0 : -1.0;

  Tape t;
  const Var loss = critic_loss(t, t.parameter(values), rewards, steps, gamma);
  double expected = 0.0;
  const std::vector<double> term(channels, 0.0);
  const std::size_t span = steps * channels;
  for (std::size_t e = 0; e < episodes; ++e) {
    const auto a = advantages(rewards.data().subspan(e * span, span), values.value.data().subspan(e * span, span),
                              term, channels, gamma);
    for (double x : a) expected += 0.5 * x * x;
  }
  CHECK(t.value(loss)[0] == doctest::Approx(expected).epsilon(1e-12));

  std::vector<Parameter*> params{&values};
  const auto res = grad_check([&](Tape& tp) { return critic_loss(tp, tp.parameter(values), rewards, steps, gamma); },
                              params, 1e-5, 1000, rng);
  CHECK(res.max_relative_error < 1e-6);
  CHECK(res.coordinates == episodes * steps * channels);
}

TEST_CASE("actor and critic gradients match central differences") {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(11);
  ActorNetwork actor(ActorConfig{}, 3);
  CriticNetwork critic(CriticConfig{}, 4);

  const std::size_t batch = 4;
  std::vector<ContextState> states;
  std::vector<AttributeVector> actions;
  for (std::size_t b = 0; b < batch; ++b) {
    states.push_back(random_state(rng));
    actions.push_back(random_vector(rng));
  }
  std::vector<int> chosen;
  for (const auto& a : actions) chosen.insert(chosen.end(), a.classes().begin(), a.classes().end());
  Tensor adv = testing::random_tensor({batch, kAttributeCount}, rng);
  Tensor rewards = Tensor::matrix(batch, kAttributeCount);
  for (auto& r : rewards.data()) r = rng.bernoulli(0.5) ? 1.0 : -1.0;

  auto actor_params = actor.parameters();
  const auto actor_res = grad_check(
      [&](Tape& t) {
        const auto heads = actor.forward(t, states);
        return actor_loss(t, heads.heads, chosen, adv);
      },
      actor_params, 1e-5, 12, rng, 1e-6);
  CAPTURE(actor_res.coordinates);
  CHECK(actor_res.max_relative_error < 1e-3);

  auto critic_params = critic.parameters();
  const auto critic_res = grad_check(
      [&](Tape& t) { return critic_loss(t, critic.forward(t, states, actions), rewards, batch, 0.9); }, critic_params,
      1e-5, 12, rng, 1e-6);
  CAPTURE(critic_res.coordinates);
  CHECK(critic_res.max_relative_error < 1e-3);

  CHECK(std::chrono::steady_clock::now() - start < std::chrono::minutes(1));
}

TEST_CASE("rollout") {
  Rng data(9);
  const auto episode = random_episode(data);
  ActorNetwork actor(ActorConfig{}, 1);
  CriticNetwork critic(CriticConfig{}, 2);

  SUBCASE("trajectory bookkeeping") {
    Rng rng(4);
    const auto traj = rollout(actor, critic, episode, rng);
    REQUIRE(traj.length() == kTargetShots);
    CHECK(traj.states[0] == initial_context(episode));
    for (std::size_t s = 0; s < kTargetShots; ++s) {
      CHECK(traj.rewards[s] == reward(traj.actions[s], episode.targets[s].attributes));
      if (s + 1 < kTargetShots) CHECK(traj.states[s + 1] == advance_context(traj.states[s], traj.actions[s]));
      const auto v = critic.evaluate(std::span(&traj.states[s], 1), std::span(&traj.actions[s], 1));
      CHECK(v[0] == traj.values[s]);
    }
  }
  SUBCASE("same seed, same trajectory") {
    Rng a(4), b(4);
    const auto ta = rollout(actor, critic, episode, a);
    const auto tb = rollout(actor, critic, episode, b);
    CHECK(ta.actions == tb.actions);
    CHECK(ta.log_probs == tb.log_probs);
    CHECK(ta.values == tb.values);
  }
  SUBCASE("batch rollout equals single rollouts") {
    std::vector<Episode> eps{episode, random_episode(data)};
    std::vector<Rng> rngs{Rng(1), Rng(2)};
    const auto batch = rollout_batch(actor, critic, eps, rngs);
    Rng r1(1), r2(2);
    CHECK(batch[0].actions == rollout(actor, critic, eps[0], r1).actions);
    CHECK(batch[1].actions == rollout(actor, critic, eps[1], r2).actions);
  }
  SUBCASE("an actor certain of the right answer earns 5 per channel") {
    const AttributeVector target({2, 3, 1, 4, 0, 7, 5, 2});
    Episode fixed = episode;
    for (auto& s : fixed.targets) s.attributes = target;
    actor.zero_heads();
    for (auto* p : actor.parameters()) {
      for (std::size_t i = 0; i < kAttributeCount; ++i) {
        if (p->name == "actor.head." + attribute_names()[i] + ".bias") p->value[static_cast<std::size_t>(target[i])] = 60.0;
      }
    }
    Rng rng(3);
    const auto traj = rollout(actor, critic, fixed, rng);
    for (double total : traj.discounted_return(1.0)) CHECK(total == 5.0);
  }
}
