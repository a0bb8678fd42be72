#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "aif/mountain_car.hpp"
#include "aif/planner.hpp"
#include "aif/prior.hpp"
#include "aif/world_model.hpp"

namespace aif::harness {

enum class AgentType { GivenPrior, LearnedPrior, Random };
enum class Ablation { Full, IntrinsicOnly, ExtrinsicOnly, ExtrinsicHotStart };

std::string to_string(AgentType t);
std::string to_string(Ablation a);
AgentType parse_agent_type(const std::string& s);
Ablation parse_ablation(const std::string& s);

/// Everything needed to reproduce a run. Defaults are the agent hyperparameters
/// used for the mountain car experiments.
struct ExperimentConfig {
  AgentType agent = AgentType::LearnedPrior;
  std::size_t horizon = 6;
  double noise_std = 0.0;
  Ablation ablation = Ablation::Full;
  int hot_start_episodes = 2;
  int episodes = 150;
  int seeds = 30;
  std::uint64_t first_seed = 0;
  int jobs = 1;
  int planner_threads = 1;

  std::size_t latent_dim = 2;
  std::size_t vae_hidden = 20;
  double vae_learning_rate = 1e-3;
  double transition_learning_rate = 1e-3;
  /// 0 selects 0.05, or 0.1 when observations are noisy.
  double decoder_std = 0.0;
  int action_repeat = 6;
  int max_sim_steps = 200;

  std::size_t actions_per_plan = 2;
  /// 0 selects 700 for H ≤ 10 and 1500 otherwise.
  std::size_t policy_samples = 0;
  std::size_t candidates = 70;
  std::size_t cem_iterations = 2;

  std::size_t utility_hidden = 40;
  double utility_learning_rate = 0.1;
  int utility_iterations = 15;
  double discount = 0.995;
  double prior_std = 0.05;

  std::string out_dir;
  bool verbose = false;
  bool planner_trace = false;
  bool save_checkpoints = true;

  void validate() const;

  double effective_decoder_std() const;
  WorldModelConfig world_model() const;
  PlannerConfig planner() const;
  env::EnvConfig environment() const;
  UtilityLearnerConfig utility() const;
  /// Preference N(goal observation, prior_std) for the given-prior agent.
  GivenPrior given_prior() const;
  FeefTerms terms_for_episode(int episode) const;

  nlohmann::json to_json() const;
  /// Fields present in `j` override `base`; unknown keys throw ArgumentError.
  static ExperimentConfig from_json(const nlohmann::json& j, ExperimentConfig base);
  static ExperimentConfig from_json(const nlohmann::json& j);
};

}  // namespace aif::harness
