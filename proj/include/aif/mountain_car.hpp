#pragma once

#include <functional>
#include <random>
#include <vector>

namespace aif::env {

// Continuous mountain car, re-implemented from the classic-control reference:
//   v ← clip(v + 0.0015·force − 0.0025·cos(3p), ±0.07)
//   p ← clip(p + v, [−1.2, 0.6]);  v ← 0 if p hits −1.2 while moving left
//   goal: p ≥ 0.45
inline constexpr double kMinPosition = -1.2;
inline constexpr double kMaxPosition = 0.6;
inline constexpr double kMaxSpeed = 0.07;
inline constexpr double kGoalPosition = 0.45;
inline constexpr double kPower = 0.0015;
inline constexpr double kGravity = 0.0025;

struct CarState {
  double position = -0.5;
  double velocity = 0.0;
  int sim_steps = 0;
};

struct ObservationConfig {
  double noise_std = 0.0;
  double position_scale = 1.2;
  double velocity_scale = 0.07;

  void validate() const;
};

struct EnvConfig {
  int action_repeat = 6;
  int max_sim_steps = 200;
  double goal_bonus = 100.0;
  double action_cost = 0.1;
  ObservationConfig observation;

  void validate() const;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;      // clamped to [−1, 1]
  double raw_reward = 0.0;  // summed sub-step rewards before clamping
  bool done = false;
  bool goal_reached = false;
  CarState raw_state;
};

/// One simulation step; `force` is clipped to [−1, 1].
CarState sim_step(const CarState& state, double force);
bool at_goal(const CarState& state);

/// Normalized observation [p/scale_p, v/scale_v] plus optional Gaussian noise.
std::vector<double> observe(const CarState& state, const ObservationConfig& cfg, std::mt19937_64& rng);

/// Start state: position ~ U[−0.6, −0.4], velocity 0.
CarState reset(std::mt19937_64& rng);

/// Per-simulation-step record for trajectory export.
struct SimRecord {
  int step;
  double position;
  double velocity;
  double action;
  double reward;
};

class MountainCar {
 public:
  using SimObserver = std::function<void(const SimRecord&)>;

  MountainCar(EnvConfig cfg, std::uint64_t seed);

  /// Starts an episode and returns its first observation.
  std::vector<double> reset();
  /// Repeats `action` for up to action_repeat simulation steps, stopping early at the
  /// goal or at the episode step limit.
  StepResult agent_step(double action);

  const CarState& state() const { return state_; }
  void set_state(const CarState& s) { state_ = s; }
  const EnvConfig& config() const { return cfg_; }
  void set_observer(SimObserver obs) { observer_ = std::move(obs); }
  bool episode_over() const;

 private:
  EnvConfig cfg_;
  std::mt19937_64 rng_;
  CarState state_;
  SimObserver observer_;
};

}  // namespace aif::env
