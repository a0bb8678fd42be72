#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "aif/mountain_car.hpp"

using namespace aif;
using namespace aif::env;

TEST_CASE("sim_step examples") {
  const CarState s = sim_step(CarState{-0.5, 0.0, 0}, 1.0);
  CHECK(s.velocity == doctest::Approx(0.0013232).epsilon(1e-4));
  CHECK(s.velocity == doctest::Approx(0.0015 - 0.0025 * std::cos(-1.5)).epsilon(1e-15));
  CHECK(s.position == doctest::Approx(-0.4986768).epsilon(1e-6));
  CHECK(s.sim_steps == 1);

  const double p0 = -std::numbers::pi / 6.0;
  const CarState flat = sim_step(CarState{p0, 0.01, 0}, 0.0);
  CHECK(flat.velocity == doctest::Approx(0.01).epsilon(1e-12));

  CHECK(at_goal(sim_step(CarState{0.45, 0.01, 0}, 0.0)));
  CHECK(at_goal(CarState{0.45, 0.0, 0}));
  CHECK_FALSE(at_goal(CarState{0.4499, 0.0, 0}));
}

TEST_CASE("left wall stops the car") {
  const CarState s = sim_step(CarState{-1.19, -0.05, 0}, -1.0);
  CHECK(s.position == kMinPosition);
  CHECK(s.velocity == 0.0);
}

TEST_CASE("dynamics fuzz keeps the state in bounds") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> f(-1.5, 1.5);
  CarState s = reset(rng);
  for (int i = 0; i < 100000; ++i) {
    s = sim_step(s, f(rng));
    CHECK(s.position >= kMinPosition);
    CHECK(s.position <= kMaxPosition);
    CHECK(std::fabs(s.velocity) <= kMaxSpeed);
    if (s.position == kMinPosition) CHECK(s.velocity >= 0.0);
    if (i % 500 == 0) s = reset(rng);
  }
}

TEST_CASE("gravity alone never reaches the goal") {
  MountainCar env(EnvConfig{}, 2);
  env.reset();
  env.set_state(CarState{-0.5236, 0.0, 0});
  StepResult r;
  while (!r.done) r = env.agent_step(0.0);
  CHECK_FALSE(r.goal_reached);
  CHECK(env.state().sim_steps == 200);
}

TEST_CASE("bang-bang controller reaches the goal quickly") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    CarState s = reset(rng);
    double force = -1.0;  // initial kick away from the goal
    while (!at_goal(s) && s.sim_steps < 200) {
      if (s.velocity != 0.0) force = s.velocity > 0.0 ? 1.0 : -1.0;
      s = sim_step(s, force);
    }
    CHECK(at_goal(s));
    CHECK(s.sim_steps <= 120);
  }
}

TEST_CASE("agent_step rewards and repeat") {
  MountainCar env(EnvConfig{}, 4);
  env.reset();
  env.set_state(CarState{-0.5, 0.0, 0});
  StepResult r = env.agent_step(0.0);
  CHECK(r.reward == 0.0);
  CHECK_FALSE(r.done);
  CHECK(env.state().sim_steps == 6);

  r = env.agent_step(1.0);
  CHECK(r.raw_reward == doctest::Approx(-0.6).epsilon(1e-12));
  CHECK(r.reward == doctest::Approx(-0.6).epsilon(1e-12));
  CHECK(env.state().sim_steps == 12);

  r = env.agent_step(3.0);  // clipped to 1
  CHECK(r.raw_reward == doctest::Approx(-0.6).epsilon(1e-12));
}

TEST_CASE("goal reached mid-step ends the agent step early") {
  MountainCar env(EnvConfig{}, 5);
  env.reset();
  // three sub-steps at 0.05 per step from 0.31 reach 0.46
  env.set_state(CarState{0.31, 0.05, 10});
  std::vector<SimRecord> seen;
  env.set_observer([&](const SimRecord& rec) { seen.push_back(rec); });
  const StepResult r = env.agent_step(1.0);
  CHECK(r.done);
  CHECK(r.goal_reached);
  CHECK(r.reward == 1.0);
  CHECK(env.state().sim_steps < 16);
  CHECK(seen.size() == static_cast<std::size_t>(env.state().sim_steps - 10));
  CHECK(seen.back().reward > 90.0);
}

TEST_CASE("episode length is capped") {
  MountainCar env(EnvConfig{}, 6);
  env.reset();
  int steps = 0;
  StepResult r;
  while (!r.done) {
    r = env.agent_step(0.3);
    ++steps;
  }
  CHECK(env.state().sim_steps <= 200);
  CHECK(steps <= 34);
}

TEST_CASE("observations") {
  std::mt19937_64 rng(7);
  const ObservationConfig clean;
  const CarState s{0.6, -0.035, 0};
  const auto y = observe(s, clean, rng);
  CHECK(y[0] == 0.6 / 1.2);
  CHECK(y[1] == -0.5);
  CHECK(observe(s, clean, rng) == y);

  ObservationConfig noisy;
  noisy.noise_std = 0.1;
  double sum[2] = {0, 0}, sq[2] = {0, 0};
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto o = observe(s, noisy, rng);
    for (int k = 0; k < 2; ++k) {
      sum[k] += o[k] - y[k];
      sq[k] += (o[k] - y[k]) * (o[k] - y[k]);
    }
  }
  for (int k = 0; k < 2; ++k) {
    const double mean = sum[k] / n;
    CHECK(std::fabs(mean) < 2e-3);
    CHECK(std::sqrt(sq[k] / n - mean * mean) == doctest::Approx(0.1).epsilon(0.01));
  }
}

TEST_CASE("reset range and determinism") {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 10000; ++i) {
    const CarState s = reset(rng);
    CHECK(s.position >= -0.6);
    CHECK(s.position <= -0.4);
    CHECK(s.velocity == 0.0);
    CHECK(s.sim_steps == 0);
  }
  MountainCar a(EnvConfig{}, 9), b(EnvConfig{}, 9);
  CHECK(a.reset() == b.reset());
  CHECK(a.state().position == b.state().position);
}
