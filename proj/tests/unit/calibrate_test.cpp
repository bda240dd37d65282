#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "mcqpsy/analysis.hpp"
#include "mcqpsy/calibrate.hpp"
#include "mcqpsy/error.hpp"
#include "test_support.hpp"

namespace mcqpsy {
namespace {

using testing::make_item;

// All four runs carry the same canonical logits.
ModelResponse response_from_canonical(const std::string& id, const OptionScores& canonical) {
  ModelResponse r;
  r.item_id = id;
  r.model_id = "m";
  auto perms = cyclic_permutations();
  for (int s = 0; s < 4; ++s) r.runs[s] = {perms[s], permute(canonical, perms[s])};
  return r;
}

ModelResponse random_response(const std::string& id, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 2.0);
  ModelResponse r;
  r.item_id = id;
  r.model_id = "m";
  auto perms = cyclic_permutations();
  for (int s = 0; s < 4; ++s) {
    r.runs[s].permutation = perms[s];
    for (double& l : r.runs[s].logits_by_position) l = noise(rng);
  }
  return r;
}

double entropy(const ResponseDistribution& d) {
  double h = 0.0;
  for (double p : d.probs()) h -= p > 0 ? p * std::log(p) : 0.0;
  return h;
}

TEST(ScaledDistribution, HalvedLogitsGiveClosedForm) {
  auto d = scaled_distribution(response_from_canonical("x", {2, 0, 0, 0}), 2.0);
  const double e = std::exp(1.0);
  EXPECT_NEAR(d[0], e / (e + 3), 1e-15);
  for (int k = 1; k < 4; ++k) EXPECT_NEAR(d[k], 1 / (e + 3), 1e-15);
  EXPECT_NEAR(d[0], 0.4754, 5e-5);
  EXPECT_NEAR(d[1], 0.1749, 5e-5);
}

TEST(ScaledDistribution, HugeTemperatureIsNearUniform) {
  auto d = scaled_distribution(response_from_canonical("x", {9, -3, 1, 0.5}), 1e6);
  for (double p : d.probs()) EXPECT_NEAR(p, 0.25, 1e-5);
}

TEST(ScaledDistribution, NonPositiveTemperatureRejected) {
  auto r = response_from_canonical("x", {1, 0, 0, 0});
  EXPECT_THROW(scaled_distribution(r, 0.0), std::invalid_argument);
  EXPECT_THROW(scaled_distribution(r, -1.0), std::invalid_argument);
}

TEST(ScaledDistributionProperty, SimplexAndPositive) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto r = random_response("x", rng);
    for (double t : {0.05, 0.3, 1.0, 7.0, 500.0}) {
      auto d = scaled_distribution(r, t);
      const auto& p = d.probs();
      EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
      for (double v : p) EXPECT_GT(v, 0.0);
    }
  }
}

// Holds per run; the run average is not monotone when runs disagree.
TEST(ScaledDistributionProperty, EntropyNonDecreasingInTemperature) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    auto r = random_response("x", rng);
    for (const auto& run : r.runs) {
      double previous = -1.0;
      for (double t = 0.05; t < 200; t *= 1.3) {
        double h = entropy(ResponseDistribution(softmax(unpermute(run), t)));
        EXPECT_GE(h, previous - 1e-12);
        previous = h;
      }
    }
  }
}

// Softmax is rank-preserving per run; the averaged argmax is not asserted.
TEST(ScaledDistributionProperty, PerRunArgmaxInvariantToTemperature) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 100; ++i) {
    auto r = random_response("x", rng);
    for (const auto& run : r.runs) {
      OptionScores canonical = unpermute(run);
      auto at_one = softmax(canonical, 1.0);
      auto expected = std::max_element(at_one.begin(), at_one.end()) - at_one.begin();
      for (double t : {0.02, 0.5, 3.0, 90.0}) {
        auto p = softmax(canonical, t);
        EXPECT_EQ(std::max_element(p.begin(), p.end()) - p.begin(), expected);
      }
    }
  }
}

TEST(MeanKl, ZeroWhenModelEqualsHuman) {
  auto r = response_from_canonical("x", {1.0, 0.2, -0.5, 0.0});
  Item item = make_item("x", 0, scaled_distribution(r, 1.0).probs());
  std::vector<ItemResponse> pairs{{&item, &r}};
  EXPECT_NEAR(mean_kl(pairs, 1.0), 0.0, 1e-15);
}

TEST(MeanKl, UniformModelAgainstFixedHuman) {
  auto r = response_from_canonical("x", {0, 0, 0, 0});
  Item item = make_item("x", 0, OptionScores{0.5, 0.2, 0.2, 0.1});
  std::vector<ItemResponse> pairs{{&item, &r}};
  EXPECT_NEAR(mean_kl(pairs, 3.0), 0.165687, 1e-6);
}

TEST(MeanKl, ArithmeticMeanOfItemKls) {
  // Item KLs chosen as exactly 0.1 and 0.3 by solving for a two-point human
  // distribution against a uniform model: KL = ln 4 - H(p).
  auto uniform = response_from_canonical("u", {0, 0, 0, 0});
  auto solve = [](double kl) {
    // p = [x, 1-x, 0, 0] with ln4 + x ln x + (1-x) ln(1-x) = kl; bisection.
    double lo = 0.5, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
      double x = (lo + hi) / 2;
      double v = std::log(4.0) + x * std::log(x) + (1 - x) * std::log(1 - x);
      (v < kl ? lo : hi) = x;
    }
    return OptionScores{lo, 1 - lo, 0, 0};
  };
  Item a = make_item("a", 0, solve(std::log(2.0) + 0.1));
  Item b = make_item("b", 0, solve(std::log(2.0) + 0.3));
  std::vector<ItemResponse> pairs{{&a, &uniform}, {&b, &uniform}};
  auto kls = per_item_kl(pairs, 1.0);
  EXPECT_NEAR(kls[0], std::log(2.0) + 0.1, 1e-12);
  EXPECT_NEAR(kls[1], std::log(2.0) + 0.3, 1e-12);
  EXPECT_NEAR(mean_kl(pairs, 1.0), std::log(2.0) + 0.2, 1e-12);
}

TEST(MeanKl, EmptyOrMissingHumanRejected) {
  std::vector<ItemResponse> none;
  EXPECT_THROW(mean_kl(none, 1.0), Error);
  auto r = response_from_canonical("x", {0, 0, 0, 0});
  Item item = make_item("x", 0);
  std::vector<ItemResponse> pairs{{&item, &r}};
  EXPECT_THROW(mean_kl(pairs, 1.0), Error);
}

struct Subset {
  std::vector<Item> items;
  std::vector<ModelResponse> responses;
  std::vector<ItemResponse> pairs() const {
    std::vector<ItemResponse> out;
    for (std::size_t i = 0; i < items.size(); ++i) out.push_back({&items[i], &responses[i]});
    return out;
  }
};

// Human distributions are the model's own at T*, so KL is zero there.
Subset scaled_subset(double t_star, std::uint64_t seed, int n = 20) {
  std::mt19937_64 rng(seed);
  Subset s;
  for (int i = 0; i < n; ++i) {
    s.responses.push_back(random_response("i" + std::to_string(i), rng));
    s.items.push_back(make_item("i" + std::to_string(i), i % 4,
                                scaled_distribution(s.responses.back(), t_star).probs()));
  }
  return s;
}

TEST(OptimizeTemperature, RecoversKnownTemperature) {
  Subset s = scaled_subset(4.0, 21);
  auto pairs = s.pairs();
  auto result = optimize_temperature(pairs);
  EXPECT_NEAR(result.temperature, 4.0, 0.04);
  EXPECT_LT(result.mean_kl_after, 1e-8);
  EXPECT_EQ(result.n_items, 20u);
  EXPECT_GE(result.mean_kl_before, result.mean_kl_after);
}

TEST(OptimizeTemperature, FixedPointAtOne) {
  Subset s = scaled_subset(1.0, 22);
  auto pairs = s.pairs();
  auto result = optimize_temperature(pairs);
  EXPECT_NEAR(result.temperature, 1.0, 1e-3);
  EXPECT_LT(result.mean_kl_after, 1e-10);
}

TEST(OptimizeTemperature, NeverWorseThanUnscaled) {
  std::mt19937_64 rng(23);
  Subset s;
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 15; ++i) {
    s.responses.push_back(random_response("i" + std::to_string(i), rng));
    s.items.push_back(make_item("i" + std::to_string(i), 0,
                                renormalize_distribution({u(rng), u(rng), u(rng), u(rng)}).probs()));
  }
  auto pairs = s.pairs();
  auto result = optimize_temperature(pairs);
  EXPECT_LE(result.mean_kl_after, result.mean_kl_before);
  EXPECT_GE(result.temperature, kMinTemperature);
  EXPECT_LE(result.temperature, kMaxTemperature);
}

// Against a dense independent grid, the optimizer's value is no worse than
// the best grid value (up to the stated 1e-6).
TEST(OptimizeTemperature, MatchesDenseGridMinimum) {
  std::mt19937_64 rng(24);
  Subset s;
  std::uniform_real_distribution<double> u(0.01, 1.0);
  for (int i = 0; i < 12; ++i) {
    s.responses.push_back(random_response("i" + std::to_string(i), rng));
    s.items.push_back(make_item("i" + std::to_string(i), 0,
                                renormalize_distribution({u(rng), u(rng), u(rng), u(rng)}).probs()));
  }
  auto pairs = s.pairs();
  auto result = optimize_temperature(pairs);
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= 20000; ++i) {
    double t = std::exp(std::log(1e-2) + (std::log(1e3) - std::log(1e-2)) * i / 20000.0);
    best = std::min(best, mean_kl(pairs, t));
  }
  EXPECT_LE(result.mean_kl_after, best + 1e-6);
}

TEST(OptimizeTemperature, SurvivesUnderflowAtTinyTemperatures) {
  ModelResponse r = response_from_canonical("x", {40, 0, -5, -10});
  Item item = make_item("x", 0, OptionScores{0.4, 0.3, 0.2, 0.1});
  std::vector<ItemResponse> pairs{{&item, &r}};
  auto result = optimize_temperature(pairs);
  EXPECT_TRUE(std::isfinite(result.mean_kl_after));
  EXPECT_GT(result.temperature, 1.0);
}

TEST(CalibrationJson, RoundTrip) {
  CalibrationResult r{"m", {"d", "s", "l"}, 2.5, 0.4, 0.1, 7};
  auto back = calibration_from_json(calibration_to_json(r));
  EXPECT_EQ(back.model_id, "m");
  EXPECT_EQ(back.subset, r.subset);
  EXPECT_EQ(back.temperature, 2.5);
  EXPECT_EQ(back.n_items, 7u);
}

}  // namespace
}  // namespace mcqpsy
