#include <fstream>
#include <set>

#include "doctest.h"
#include "shotwright/checkpoint.hpp"
#include "shotwright/training.hpp"
#include "support.hpp"

using namespace shotwright;
using shotwright::testing::TempDir;

namespace {

TrainConfig small_config() {
  TrainConfig c;
  c.actor = ActorConfig{16, 1, 2, 32};
  c.critic.hidden = {32};
  c.batch_size = 8;
  c.epochs = 2;
  c.rl_iterations = 3;
  c.seed = 5;
  return c;
}

std::vector<Episode> markov_episodes(std::size_t scenes, double determinism, std::uint64_t seed) {
  auto data = generate_markov_dataset({scenes, 10, determinism, seed});
  apply_representation(data, ReprMode::OneHot, 1.0, 0);
  return sample_episodes(data, 1);
}

std::vector<double> flatten(ActorNetwork& actor) {
  std::vector<double> out;
  for (auto* p : actor.parameters()) out.insert(out.end(), p->value.data().begin(), p->value.data().end());
  return out;
}

}  // namespace

TEST_CASE("TrainConfig validation and text round trip") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.actor_lr == 1e-4);

  auto bad = c;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.gamma = 1.5;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.critic_lr = -1e-3;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = c;
  bad.actor.heads = 5;
  CHECK_THROWS_AS(bad.validate(), Error);

  apply_config_entries(c, {{"gamma", "0.5"}, {"repr", "synthetic"}, {"critic_hidden", "64, 32"},
                           {"teacher_forcing", "false"}});
  CHECK(c.gamma == 0.5);
  CHECK(c.repr == ReprMode::Synthetic);
  CHECK(c.critic.hidden == std::vector<std::size_t>{64, 32});
  CHECK_FALSE(c.teacher_forcing);
  CHECK_THROWS_WITH_AS(apply_config_entries(c, {{"learning_rate", "1"}}), doctest::Contains("learning_rate"), Error);
  CHECK_THROWS_WITH_AS(apply_config_entries(c, {{"epochs", "many"}}), doctest::Contains("epochs"), Error);

  TempDir dir;
  std::ofstream(dir.path() / "run.cfg") << "# comment\n" << to_text(c) << "\n";
  TrainConfig back;
  apply_config_entries(back, read_config_file(dir.path() / "run.cfg"));
  CHECK(to_text(back) == to_text(c));

  std::ofstream(dir.path() / "bad.cfg") << "gamma = 0.5\nno equals sign\n";
  try {
    read_config_file(dir.path() / "bad.cfg");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("Markov generator") {
  const MarkovRule rule(3);
  SUBCASE("each attribute follows a permutation") {
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      std::set<int> images;
      for (int cls = 0; cls < static_cast<int>(kClassCounts[i]); ++cls) {
        std::array<int, kAttributeCount> c{};
        c[i] = cls;
        images.insert(rule.next(AttributeVector(c))[i]);
      }
      CHECK(images.size() == kClassCounts[i]);
    }
  }
  SUBCASE("shape and determinism") {
    const auto a = generate_markov_dataset({7, 12, 1.0, 3});
    REQUIRE(a.size() == 7);
    for (const auto& s : a) {
      REQUIRE(s.shots.size() == 12);
      for (std::size_t k = 1; k < s.shots.size(); ++k) CHECK(s.shots[k].attributes == rule.next(s.shots[k - 1].attributes));
    }
    CHECK(generate_markov_dataset({7, 12, 1.0, 3}) == a);
    CHECK(generate_markov_dataset({7, 12, 1.0, 4}) != a);
  }
  SUBCASE("determinism controls how often the rule is followed") {
    const auto data = generate_markov_dataset({200, 20, 0.6, 9});
    const MarkovRule own(9);
    std::size_t own_follow = 0, total = 0;
    for (const auto& s : data) {
      for (std::size_t k = 1; k < s.shots.size(); ++k, ++total) {
        own_follow += s.shots[k].attributes == own.next(s.shots[k - 1].attributes);
      }
    }
    CHECK(std::abs(static_cast<double>(own_follow) / static_cast<double>(total) - 0.6) <= 0.03);
  }
  SUBCASE("per-attribute noise") {
    const auto data = generate_markov_dataset({200, 20, 0.7, 9, true});
    const MarkovRule own(9);
    std::size_t follow = 0, whole = 0, total = 0;
    for (const auto& s : data) {
      for (std::size_t k = 1; k < s.shots.size(); ++k, ++total) {
        const auto next = own.next(s.shots[k - 1].attributes);
        whole += s.shots[k].attributes == next;
        for (std::size_t i = 0; i < kAttributeCount; ++i) follow += s.shots[k].attributes[i] == next[i];
      }
    }
    // per attribute: p + (1 - p) / C_i, averaged over the 8 attributes
    double expected = 0.0;
    for (auto c : kClassCounts) expected += 0.7 + 0.3 / static_cast<double>(c);
    expected /= static_cast<double>(kAttributeCount);
    CHECK(std::abs(static_cast<double>(follow) / static_cast<double>(total * kAttributeCount) - expected) <= 0.01);
    CHECK(static_cast<double>(whole) / static_cast<double>(total) < 0.2);
  }
  CHECK_THROWS_AS(generate_markov_dataset({1, 9, 1.5, 0}), Error);
}

TEST_CASE("pretrain_supervised") {
  const auto episodes = markov_episodes(6, 1.0, 2);
  auto config = small_config();

  SUBCASE("empty dataset") {
    auto m = make_models(config);
    CHECK_THROWS_AS(pretrain_supervised(*m.actor, {}, config), Error);
  }
  SUBCASE("zero epochs leave the actor unchanged") {
    auto m = make_models(config);
    const auto before = flatten(*m.actor);
    config.epochs = 0;
    CHECK(pretrain_supervised(*m.actor, episodes, config).empty());
    CHECK(flatten(*m.actor) == before);
  }
  SUBCASE("same seed and data give identical checkpoints") {
    TempDir dir;
    for (const char* name : {"a.ckpt", "b.ckpt"}) {
      auto m = make_models(config);
      pretrain_supervised(*m.actor, episodes, config);
      save_checkpoint(*m.actor, *m.critic, dir.path() / name);
    }
    CHECK(testing::read_bytes(dir.path() / "a.ckpt") == testing::read_bytes(dir.path() / "b.ckpt"));
  }
  SUBCASE("loss falls on a deterministic dataset") {
    config.epochs = 30;
    config.actor_lr = 1e-3;
    auto m = make_models(config);
    const auto log = pretrain_supervised(*m.actor, episodes, config);
    REQUIRE(log.size() == 30);
    const double early = (log[0] + log[1] + log[2]) / 3.0;
    const double late = (log[27] + log[28] + log[29]) / 3.0;
    CHECK(late < 0.5 * early);
  }
}

TEST_CASE("train_rl") {
  const auto episodes = markov_episodes(4, 0.8, 3);
  auto config = small_config();

  SUBCASE("identical seeds give identical logs") {
    auto run = [&] {
      auto m = make_models(config);
      return train_rl(*m.actor, *m.critic, episodes, config);
    };
    const auto a = run(), b = run();
    REQUIRE(a.size() == 3);
    for (std::size_t k = 0; k < a.size(); ++k) {
      CHECK(a[k].mean_reward == b[k].mean_reward);
      CHECK(a[k].critic_loss == b[k].critic_loss);
      CHECK(a[k].actor_loss == b[k].actor_loss);
    }
  }
  SUBCASE("critic warm-up leaves the actor untouched") {
    config.critic_warmup = 2;
    config.rl_iterations = 0;
    auto m = make_models(config);
    const auto before = flatten(*m.actor);
    const auto log = train_rl(*m.actor, *m.critic, episodes, config);
    CHECK(log.size() == 2);
    CHECK_FALSE(log[1].actor_updated);
    CHECK(flatten(*m.actor) == before);
  }
  SUBCASE("a constant target is learned from reward alone") {
    auto scenes = generate_markov_dataset({8, 9, 0.0, 4});
    const AttributeVector target({2, 3, 1, 4, 0, 7, 5, 2});
    for (auto& s : scenes) {
      for (std::size_t k = kContextShots; k < s.shots.size(); ++k) s.shots[k].attributes = target;
    }
    apply_representation(scenes, ReprMode::OneHot, 1.0, 0);
    const auto eps = sample_episodes(scenes, 1);
    config.rl_iterations = 150;
    config.actor_lr = 1e-3;
    config.critic_lr = 1e-3;
    auto m = make_models(config);
    const auto log = train_rl(*m.actor, *m.critic, eps, config);
    CHECK(log.back().episode_reward > log.front().episode_reward + 20.0);
    const auto d = m.actor->predict(initial_context(eps[0]));
    CHECK(d.argmax() == target);
  }
  SUBCASE("parameters stay finite") {
    config.rl_iterations = 20;
    auto m = make_models(config);
    train_rl(*m.actor, *m.critic, episodes, config);
    CHECK(all_finite(m.actor->parameters()));
    CHECK(all_finite(m.critic->parameters()));
  }
}

TEST_CASE("model checkpoints") {
  TempDir dir;
  auto config = small_config();
  auto m = make_models(config);
  pretrain_supervised(*m.actor, markov_episodes(3, 1.0, 1), config);
  save_checkpoint(*m.actor, *m.critic, dir.path() / "m.ckpt");

  SUBCASE("round trip keeps predictions bit-identical") {
    auto loaded = load_checkpoint(dir.path() / "m.ckpt");
    CHECK(loaded.actor->config().model_width == 16);
    CHECK(loaded.critic->config().hidden == std::vector<std::size_t>{32});
    Rng rng(4);
    std::vector<ContextState> states;
    std::vector<AttributeVector> actions;
    for (int k = 0; k < 100; ++k) {
      std::array<AttributeDistribution, kContextShots> shots;
      std::array<int, kAttributeCount> c{};
      for (auto& s : shots) {
        for (std::size_t i = 0; i < kAttributeCount; ++i) c[i] = static_cast<int>(rng.index(kClassCounts[i]));
        s = synth_distribution(AttributeVector(c), 1.0, rng);
      }
      states.emplace_back(shots);
      actions.emplace_back(c);
    }
    CHECK(loaded.actor->predict(states) == m.actor->predict(states));
    CHECK(loaded.critic->evaluate(states, actions) == m.critic->evaluate(states, actions));
    save_checkpoint(*loaded.actor, *loaded.critic, dir.path() / "again.ckpt");
    CHECK(testing::read_bytes(dir.path() / "again.ckpt") == testing::read_bytes(dir.path() / "m.ckpt"));
  }
  SUBCASE("corrupted header") {
    auto bytes = testing::read_bytes(dir.path() / "m.ckpt");
    bytes[17] = '9';
    testing::write_bytes(dir.path() / "bad.ckpt", bytes);
    CHECK_THROWS_WITH(load_checkpoint(dir.path() / "bad.ckpt"), doctest::Contains("version"));
  }
  SUBCASE("wrong architecture") {
    auto other = config;
    other.actor.model_width = 8;
    auto wrong = make_models(other);
    const auto entries = read_checkpoint(dir.path() / "m.ckpt");
    CHECK_THROWS_WITH_AS(assign_parameters(entries, wrong.actor->parameters()),
                         doctest::Contains("actor.token_projection.weight"), ShapeError);
  }
}
