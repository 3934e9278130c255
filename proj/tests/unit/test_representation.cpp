#include <cmath>
#include <limits>
#include <numeric>

#include "doctest.h"
#include "shotwright/representation.hpp"

using namespace shotwright;

namespace {

std::array<SimilarityBlock, kAttributeCount> zero_blocks() {
  std::array<SimilarityBlock, kAttributeCount> b;
  for (std::size_t i = 0; i < kAttributeCount; ++i) b[i].scores.assign(kClassCounts[i], 0.0);
  return b;
}

AttributeVector random_vector(Rng& rng) {
  std::array<int, kAttributeCount> c{};
  for (std::size_t i = 0; i < kAttributeCount; ++i) c[i] = static_cast<int>(rng.index(kClassCounts[i]));
  return AttributeVector(c);
}

AttributeDistribution random_distribution(Rng& rng) {
  auto blocks = zero_blocks();
  for (auto& b : blocks) {
    for (auto& s : b.scores) s = 2.0 * rng.normal();
  }
  return distribution_from_similarities(blocks);
}

}  // namespace

TEST_CASE("distribution_from_similarities") {
  SUBCASE("zero scores give a uniform block") {
    const auto d = distribution_from_similarities(zero_blocks());
    for (double v : d.block(2)) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  }
  SUBCASE("shift invariance") {
    Rng rng(1);
    auto blocks = zero_blocks();
    for (auto& b : blocks) {
      for (auto& s : b.scores) s = rng.normal();
    }
    const auto base = distribution_from_similarities(blocks);
    for (auto& s : blocks[4].scores) s += 5.0;
    const auto shifted = distribution_from_similarities(blocks);
    for (std::size_t k = 0; k < kDistributionWidth; ++k) CHECK(std::abs(base[k] - shifted[k]) < 1e-9);
  }
  SUBCASE("3-class scores [1, 0, 0]") {
    auto blocks = zero_blocks();
    blocks[2].scores = {1.0, 0.0, 0.0};
    const auto d = distribution_from_similarities(blocks);
    const auto b = d.block(2);
    CHECK(b[0] == doctest::Approx(0.5761).epsilon(1e-3));
    CHECK(b[1] == doctest::Approx(0.2119).epsilon(1e-3));
    CHECK(b[2] == doctest::Approx(0.2119).epsilon(1e-3));
  }
  SUBCASE("errors") {
    auto blocks = zero_blocks();
    blocks[0].scores[3] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(distribution_from_similarities(blocks), Error);
    blocks = zero_blocks();
    blocks[6].scores.pop_back();
    CHECK_THROWS_WITH_AS(distribution_from_similarities(blocks), doctest::Contains("shot_type"), Error);
  }
  SUBCASE("score order equals probability order within each block") {
    Rng rng(12);
    for (int n = 0; n < 200; ++n) {
      auto blocks = zero_blocks();
      for (auto& b : blocks) {
        for (auto& s : b.scores) s = 3.0 * rng.normal();
      }
      const auto d = distribution_from_similarities(blocks);
      for (std::size_t i = 0; i < kAttributeCount; ++i) {
        const auto p = d.block(i);
        double sum = 0.0;
        for (std::size_t a = 0; a < p.size(); ++a) {
          sum += p[a];
          for (std::size_t b = 0; b < p.size(); ++b) {
            if (blocks[i].scores[a] < blocks[i].scores[b]) CHECK(p[a] < p[b]);
          }
        }
        CHECK(std::abs(sum - 1.0) < 1e-6);
      }
    }
  }
}

TEST_CASE("synth_distribution") {
  SUBCASE("high concentration recovers the labels") {
    std::size_t agree = 0, total = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
      Rng rng(seed);
      const auto attrs = random_vector(rng);
      const auto d = synth_distribution(attrs, 50.0, rng);
      const auto arg = d.argmax();
      for (std::size_t i = 0; i < kAttributeCount; ++i, ++total) agree += arg[i] == attrs[i];
    }
    CHECK(static_cast<double>(agree) / static_cast<double>(total) >= 0.99);
  }
  SUBCASE("tiny concentration is at chance per block") {
    std::array<std::size_t, kAttributeCount> agree{};
    const std::size_t n = 1000;
    for (std::uint64_t seed = 0; seed < n; ++seed) {
      Rng rng(seed + 5000);
      const auto attrs = random_vector(rng);
      const auto arg = synth_distribution(attrs, 1e-4, rng).argmax();
      for (std::size_t i = 0; i < kAttributeCount; ++i) agree[i] += arg[i] == attrs[i];
    }
    for (std::size_t i = 0; i < kAttributeCount; ++i) {
      CAPTURE(i);
      CHECK(std::abs(static_cast<double>(agree[i]) / n - 1.0 / static_cast<double>(kClassCounts[i])) <= 0.05);
    }
  }
  SUBCASE("deterministic for a fixed seed") {
    const AttributeVector v({1, 2, 0, 3, 4, 5, 6, 1});
    Rng a(42), b(42);
    CHECK(synth_distribution(v, 2.0, a) == synth_distribution(v, 2.0, b));
  }
  SUBCASE("concentration must be positive") {
    Rng rng(1);
    CHECK_THROWS_AS(synth_distribution(AttributeVector{}, 0.0, rng), Error);
  }
}

TEST_CASE("build_context") {
  Rng rng(3);
  SUBCASE("uniform shots") {
    const std::array<AttributeDistribution, 4> shots{};
    const auto state = build_context(shots);
    REQUIRE(state.flat().size() == 204);
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t i = 0; i < kAttributeCount; ++i) {
        CHECK(state.flat()[s * 51 + kBlockOffsets[i]] == doctest::Approx(1.0 / kClassCounts[i]));
      }
    }
  }
  SUBCASE("concatenation order") {
    const std::array<AttributeDistribution, 4> shots{random_distribution(rng), random_distribution(rng),
                                                     random_distribution(rng), random_distribution(rng)};
    const auto state = build_context(shots);
    for (std::size_t s = 0; s < 4; ++s) {
      for (std::size_t k = 0; k < 51; ++k) CHECK(state.flat()[s * 51 + k] == shots[s][k]);
    }
  }
  SUBCASE("four one-hot shots contain exactly 32 ones") {
    std::array<AttributeDistribution, 4> shots;
    for (auto& s : shots) s = one_hot_encode(random_vector(rng));
    const auto flat = build_context(shots).flat();
    CHECK(std::count(flat.begin(), flat.end(), 1.0) == 32);
    CHECK(std::count(flat.begin(), flat.end(), 0.0) == 204 - 32);
  }
  SUBCASE("wrong count") {
    const std::array<AttributeDistribution, 3> three{};
    CHECK_THROWS_AS(build_context(three), Error);
  }
}

TEST_CASE("advance_context") {
  Rng rng(8);
  const std::array<AttributeDistribution, 4> shots{random_distribution(rng), random_distribution(rng),
                                                   random_distribution(rng), random_distribution(rng)};
  const auto state = build_context(shots);
  const auto v1 = random_vector(rng);
  const auto v2 = random_vector(rng);

  const auto next = advance_context(state, v1);
  CHECK(next.shots()[0] == shots[1]);
  CHECK(next.shots()[1] == shots[2]);
  CHECK(next.shots()[2] == shots[3]);
  CHECK(next.shots()[3] == one_hot_encode(v1));
  CHECK(next.flat().size() == 204);

  const auto twice = advance_context(next, v2);
  CHECK(twice.shots()[2] == one_hot_encode(v1));
  CHECK(twice.shots()[3] == one_hot_encode(v2));

  auto s = state;
  for (int k = 0; k < 4; ++k) s = advance_context(s, v1);
  for (const auto& shot : s.shots()) CHECK(shot == one_hot_encode(v1));
}

TEST_CASE("apply_representation") {
  Rng rng(2);
  std::vector<Scene> scenes(2);
  for (auto& sc : scenes) {
    for (int k = 0; k < 10; ++k) sc.shots.push_back(Shot{"s" + std::to_string(k), "x", random_vector(rng), {}});
  }
  CHECK_THROWS_AS(apply_representation(scenes, ReprMode::Stored, 1.0, 0), Error);

  auto onehot = scenes;
  apply_representation(onehot, ReprMode::OneHot, 1.0, 0);
  CHECK(*onehot[1].shots[3].distribution == one_hot_encode(scenes[1].shots[3].attributes));

  auto a = scenes, b = scenes;
  apply_representation(a, ReprMode::Synthetic, 1.5, 7);
  apply_representation(b, ReprMode::Synthetic, 1.5, 7);
  CHECK(a == b);
  CHECK(a[0].shots[0].distribution != a[1].shots[0].distribution);
  CHECK(initial_context(sample_episodes(a[0]).front()).shots()[0] == *a[0].shots[0].distribution);

  CHECK(parse_repr_mode("onehot") == ReprMode::OneHot);
  CHECK_THROWS_AS(parse_repr_mode("soft"), Error);
}
