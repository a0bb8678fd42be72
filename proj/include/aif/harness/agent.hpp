#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "aif/harness/config.hpp"
#include "aif/mountain_car.hpp"
#include "aif/nn/checkpoint.hpp"

namespace aif::harness {

struct PlanRecord {
  int agent_step = 0;
  std::vector<CemIteration> iterations;
  std::vector<double> policy_mean;
  /// Imagined observations (normalized) along the policy mean, one per step.
  std::vector<std::vector<double>> predicted_observations;
};

/// Time-aligned record of one episode. Index t holds observation y_t, the
/// action that produced it (0 at t = 0), the reward received with it, and
/// the world-model beliefs and metrics computed when perceiving it.
struct EpisodeBuffer {
  int episode = 0;
  std::vector<std::vector<double>> observations;
  std::vector<double> actions;
  std::vector<double> rewards;
  std::vector<DiagGaussian> posteriors;
  std::vector<std::optional<DiagGaussian>> predicted;
  std::vector<PerceptionMetrics> metrics;

  int sim_steps = 0;
  bool goal_reached = false;
  double final_position = 0.0;
  bool aborted = false;
  std::string abort_reason;

  std::vector<env::SimRecord> trajectory;  // filled when recording
  std::vector<PlanRecord> plans;            // filled when recording

  std::size_t size() const { return observations.size(); }
  double reward_total() const;
  double cumulative_vfe() const;
};

struct RecordOptions {
  bool trajectory = false;
  bool plans = false;
};

/// An AIF capsule wired to the mountain car task: world model, prior, planner settings and RNG.
class Agent {
 public:
  Agent(const ExperimentConfig& cfg, std::uint64_t seed);

  EpisodeBuffer run_episode(env::MountainCar& env, int episode, RecordOptions record = {});

  const ExperimentConfig& config() const { return cfg_; }
  WorldModel& model() { return model_; }
  const WorldModel& model() const { return model_; }
  PriorModel& prior() { return prior_; }
  const PriorModel& prior() const { return prior_; }

  nn::Checkpoint checkpoint() const;
  /// Restores parameters; the checkpoint's stored config must match this agent's architecture.
  void restore(const nn::Checkpoint& ck);

 private:
  ExperimentConfig cfg_;
  WorldModel model_;
  PriorModel prior_;
  PlannerConfig planner_;
  std::mt19937_64 rng_;
};

}  // namespace aif::harness
