#include <doctest.h>

#include <cmath>
#include <random>

#include "aif/error.hpp"
#include "aif/mountain_car.hpp"
#include "aif/prior.hpp"
#include "aif/rng.hpp"
#include "support/chain.hpp"
#include "support/gradcheck.hpp"

using namespace aif;
using aif::testing::uniform_vector;

namespace {

std::vector<std::vector<double>> weights(const UtilityModel& u) {
  std::vector<std::vector<double>> out;
  for (const nn::Parameter* p : u.parameters()) out.push_back(p->value.data);
  return out;
}

// Zero the network and set the output bias so U ≡ tanh(bias).
void constant_utility(UtilityModel& u, double bias) {
  for (nn::Parameter* p : u.parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  u.output().bias.value.data = {bias};
}

}  // namespace

TEST_CASE("utility output stays inside (-1, 1)") {
  std::mt19937_64 rng(1);
  UtilityModel u(2, 40, 2);
  for (int i = 0; i < 10000; ++i) {
    const double v = u(uniform_vector(rng, 2, -50, 50));
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("extrinsic value examples") {
  const GivenPrior given{DiagGaussian({0.375, 0.0}, {0.05, 0.05})};
  CHECK(extrinsic_value(given.preference, PriorModel(given)) == 0.0);

  UtilityModel u(2, 40, 3);
  constant_utility(u, 40.0);
  CHECK(extrinsic_value(DiagGaussian({0.2, 0.1}, {0.05, 0.05}), PriorModel(u)) == 0.0);
  constant_utility(u, -40.0);
  CHECK(extrinsic_value(DiagGaussian({0.2, 0.1}, {0.05, 0.05}), PriorModel(u)) == 2.0);
}

TEST_CASE("given-prior extrinsic value is minimized at the preference mean") {
  const GivenPrior given{DiagGaussian({0.375, 0.0}, {0.05, 0.05})};
  double best = 1e300;
  std::pair<double, double> arg{};
  for (int i = 0; i <= 200; ++i) {
    for (int j = 0; j <= 200; ++j) {
      const double p = -1.0 + 0.0125 * i + 0.0, v = -1.0 + 0.01 * j;
      const double e = extrinsic_value(DiagGaussian({p, v}, {0.05, 0.05}), PriorModel(given));
      if (e < best) best = e, arg = {p, v};
    }
  }
  CHECK(arg.first == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(arg.second == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("utility target example") {
  UtilityModel u(2, 40, 4);
  constant_utility(u, std::atanh(0.5));
  const std::vector<std::vector<double>> ys{{0.0, 0.0}, {0.1, 0.0}, {0.2, 0.0}};
  const std::vector<double> rs{0.0, 0.0, -0.3};
  const auto targets = utility_targets(ys, rs, u, 0.995);
  CHECK(targets[2] == -0.3);
  CHECK(targets[0] == doctest::Approx(0.995 * 0.995 * 0.5).epsilon(1e-14));
  CHECK(targets[0] == doctest::Approx(0.49501).epsilon(1e-5));
  CHECK(targets[1] == doctest::Approx(0.995 * 0.5).epsilon(1e-14));
}

TEST_CASE("learn_utility is a no-op for zero reward or zero rate") {
  UtilityModel u(2, 40, 5);
  const auto before = weights(u);
  const std::vector<std::vector<double>> ys{{0.0, 0.0}, {0.1, 0.0}};
  learn_utility(ys, std::vector<double>{0.0, 0.0}, u, UtilityLearnerConfig{});
  CHECK(weights(u) == before);
  UtilityLearnerConfig zero_rate;
  zero_rate.learning_rate = 0.0;
  learn_utility(ys, std::vector<double>{0.0, -0.5}, u, zero_rate);
  CHECK(weights(u) == before);
  learn_utility(ys, std::vector<double>{0.0, -0.5}, u, UtilityLearnerConfig{});
  CHECK(weights(u) != before);
}

TEST_CASE("learn_utility validates its inputs") {
  UtilityModel u(2, 40, 6);
  const std::vector<std::vector<double>> ys{{0.0, 0.0}};
  CHECK_THROWS_AS(learn_utility({}, {}, u, UtilityLearnerConfig{}), ArgumentError);
  CHECK_THROWS_AS(learn_utility(ys, std::vector<double>{1.5}, u, UtilityLearnerConfig{}), ArgumentError);
  CHECK_THROWS_AS(learn_utility(ys, std::vector<double>{0.1, 0.2}, u, UtilityLearnerConfig{}), ArgumentError);
  UtilityLearnerConfig bad;
  bad.discount = 1.0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
  bad = UtilityLearnerConfig{};
  bad.iterations = 0;
  CHECK_THROWS_AS(bad.validate(), ArgumentError);
}

TEST_CASE("utility loss gradients match finite differences") {
  std::mt19937_64 rng(7);
  UtilityModel u(2, 40, 8);
  std::vector<std::vector<double>> ys;
  std::vector<double> targets;
  for (int i = 0; i < 6; ++i) {
    ys.push_back(uniform_vector(rng, 2, -1, 1));
    targets.push_back(uniform_vector(rng, 1, -1, 1)[0]);
  }
  const auto g = utility_loss_gradients(ys, targets, u);
  auto params = u.parameters();
  const double worst = aif::testing::worst_fd_error(params, g, [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) s += (u(ys[i]) - targets[i]) * (u(ys[i]) - targets[i]);
    return s / static_cast<double>(ys.size());
  }, 1e-7);
  CHECK(worst <= 1e-4);
}

TEST_CASE("chain utility ordering follows discounted returns") {
  int matches = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const UtilityModel u = aif::testing::train_chain(mix_seed({s, 77}), 50, UtilityLearnerConfig{});
    matches += aif::testing::chain_order_matches(u, 0.995);
  }
  CHECK(matches >= 9);
}

TEST_CASE("reward clamping") {
  CHECK(clamp_reward(100.0) == 1.0);
  CHECK(clamp_reward(0.0) == 0.0);
  CHECK(clamp_reward(-0.05) == -0.05);
  CHECK(clamp_reward(-0.6) == -0.6);
  CHECK(clamp_reward(-3.0) == -1.0);
  for (double a = -1.0; a <= 1.0; a += 0.125) {
    const double r = clamp_reward(-0.1 * a * a);
    CHECK(r <= 0.0);
    CHECK(r >= -0.1);
  }
}
