#include "aif/mountain_car.hpp"

#include <algorithm>
#include <cmath>

#include "aif/error.hpp"
#include "aif/prior.hpp"

namespace aif::env {

void ObservationConfig::validate() const {
  if (!(noise_std >= 0.0)) throw ArgumentError("observation noise std must be >= 0");
  if (!(position_scale > 0.0) || !(velocity_scale > 0.0)) throw ArgumentError("observation scales must be > 0");
}

void EnvConfig::validate() const {
  if (action_repeat < 1) throw ArgumentError("action_repeat must be >= 1");
  if (max_sim_steps < 1) throw ArgumentError("max_sim_steps must be >= 1");
  observation.validate();
}

CarState sim_step(const CarState& state, double force) {
  force = std::clamp(force, -1.0, 1.0);
  CarState next = state;
  next.velocity += force * kPower - kGravity * std::cos(3.0 * state.position);
  next.velocity = std::clamp(next.velocity, -kMaxSpeed, kMaxSpeed);
  next.position += next.velocity;
  next.position = std::clamp(next.position, kMinPosition, kMaxPosition);
  if (next.position == kMinPosition && next.velocity < 0.0) next.velocity = 0.0;
  ++next.sim_steps;
  return next;
}

bool at_goal(const CarState& state) { return state.position >= kGoalPosition; }

std::vector<double> observe(const CarState& state, const ObservationConfig& cfg, std::mt19937_64& rng) {
  std::vector<double> y{state.position / cfg.position_scale, state.velocity / cfg.velocity_scale};
  if (cfg.noise_std > 0.0) {
    std::normal_distribution<double> normal(0.0, cfg.noise_std);
    for (double& v : y) v += normal(rng);
  }
  return y;
}

CarState reset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> start(-0.6, -0.4);
  return CarState{start(rng), 0.0, 0};
}

MountainCar::MountainCar(EnvConfig cfg, std::uint64_t seed) : cfg_(cfg), rng_(seed) { cfg_.validate(); }

std::vector<double> MountainCar::reset() {
  state_ = env::reset(rng_);
  return observe(state_, cfg_.observation, rng_);
}

bool MountainCar::episode_over() const { return at_goal(state_) || state_.sim_steps >= cfg_.max_sim_steps; }

StepResult MountainCar::agent_step(double action) {
  action = std::clamp(action, -1.0, 1.0);
  StepResult out;
  for (int i = 0; i < cfg_.action_repeat && !episode_over(); ++i) {
    state_ = sim_step(state_, action);
    double r = -cfg_.action_cost * action * action;
    if (at_goal(state_)) r += cfg_.goal_bonus;
    out.raw_reward += r;
    if (observer_) observer_(SimRecord{state_.sim_steps, state_.position, state_.velocity, action, r});
  }
  out.goal_reached = at_goal(state_);
  out.done = episode_over();
  out.reward = clamp_reward(out.raw_reward);
  out.raw_state = state_;
  out.observation = observe(state_, cfg_.observation, rng_);
  return out;
}

}  // namespace aif::env
