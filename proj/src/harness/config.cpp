#include "aif/harness/config.hpp"

#include <set>

#include "aif/error.hpp"

namespace aif::harness {

std::string to_string(AgentType t) {
  switch (t) {
    case AgentType::GivenPrior: return "given_prior";
    case AgentType::LearnedPrior: return "learned_prior";
    case AgentType::Random: return "random";
  }
  return "?";
}

std::string to_string(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::IntrinsicOnly: return "intrinsic_only";
    case Ablation::ExtrinsicOnly: return "extrinsic_only";
    case Ablation::ExtrinsicHotStart: return "extrinsic_hot_start";
  }
  return "?";
}

AgentType parse_agent_type(const std::string& s) {
  if (s == "given_prior" || s == "given") return AgentType::GivenPrior;
  if (s == "learned_prior" || s == "learned") return AgentType::LearnedPrior;
  if (s == "random") return AgentType::Random;
  throw ArgumentError("unknown agent type '" + s + "' (given_prior | learned_prior | random)");
}

Ablation parse_ablation(const std::string& s) {
  if (s == "full") return Ablation::Full;
  if (s == "intrinsic_only") return Ablation::IntrinsicOnly;
  if (s == "extrinsic_only") return Ablation::ExtrinsicOnly;
  if (s == "extrinsic_hot_start") return Ablation::ExtrinsicHotStart;
  throw ArgumentError("unknown ablation '" + s + "' (full | intrinsic_only | extrinsic_only | extrinsic_hot_start)");
}

void ExperimentConfig::validate() const {
  if (seeds < 1) throw ArgumentError("seeds must be >= 1");
  if (episodes < 1) throw ArgumentError("episodes must be >= 1");
  if (jobs < 1) throw ArgumentError("jobs must be >= 1");
  if (hot_start_episodes < 0) throw ArgumentError("hot_start_episodes must be >= 0");
  if (!(prior_std > 0.0)) throw ArgumentError("prior_std must be > 0");
  world_model().validate();
  planner().validate();
  environment().validate();
  utility().validate();
}

double ExperimentConfig::effective_decoder_std() const {
  if (decoder_std > 0.0) return decoder_std;
  return noise_std > 0.0 ? 0.1 : 0.05;
}

WorldModelConfig ExperimentConfig::world_model() const {
  WorldModelConfig c;
  c.latent_dim = latent_dim;
  c.hidden = vae_hidden;
  c.horizon = horizon;
  c.decoder_std = effective_decoder_std();
  c.vae_learning_rate = vae_learning_rate;
  c.transition_learning_rate = transition_learning_rate;
  return c;
}

PlannerConfig ExperimentConfig::planner() const {
  PlannerConfig c = PlannerConfig::for_horizon(horizon);
  if (policy_samples > 0) c.samples = policy_samples;
  c.candidates = candidates;
  c.iterations = cem_iterations;
  c.commit = actions_per_plan;
  c.threads = planner_threads;
  return c;
}

env::EnvConfig ExperimentConfig::environment() const {
  env::EnvConfig c;
  c.action_repeat = action_repeat;
  c.max_sim_steps = max_sim_steps;
  c.observation.noise_std = noise_std;
  return c;
}

UtilityLearnerConfig ExperimentConfig::utility() const {
  return UtilityLearnerConfig{discount, utility_learning_rate, utility_iterations};
}

GivenPrior ExperimentConfig::given_prior() const {
  const env::ObservationConfig obs;
  return GivenPrior{DiagGaussian::isotropic({env::kGoalPosition / obs.position_scale, 0.0}, prior_std)};
}

FeefTerms ExperimentConfig::terms_for_episode(int episode) const {
  switch (ablation) {
    case Ablation::Full: return {true, true};
    case Ablation::IntrinsicOnly: return {false, true};
    case Ablation::ExtrinsicOnly: return {true, false};
    case Ablation::ExtrinsicHotStart:
      return episode < hot_start_episodes ? FeefTerms{true, true} : FeefTerms{true, false};
  }
  return {};
}

nlohmann::json ExperimentConfig::to_json() const {
  return nlohmann::json{
      {"agent", to_string(agent)},
      {"horizon", horizon},
      {"noise_std", noise_std},
      {"ablation", to_string(ablation)},
      {"hot_start_episodes", hot_start_episodes},
      {"episodes", episodes},
      {"seeds", seeds},
      {"first_seed", first_seed},
      {"jobs", jobs},
      {"planner_threads", planner_threads},
      {"latent_dim", latent_dim},
      {"vae_hidden", vae_hidden},
      {"vae_learning_rate", vae_learning_rate},
      {"transition_learning_rate", transition_learning_rate},
      {"decoder_std", decoder_std},
      {"action_repeat", action_repeat},
      {"max_sim_steps", max_sim_steps},
      {"actions_per_plan", actions_per_plan},
      {"policy_samples", policy_samples},
      {"candidates", candidates},
      {"cem_iterations", cem_iterations},
      {"utility_hidden", utility_hidden},
      {"utility_learning_rate", utility_learning_rate},
      {"utility_iterations", utility_iterations},
      {"discount", discount},
      {"prior_std", prior_std},
      {"out_dir", out_dir},
      {"verbose", verbose},
      {"planner_trace", planner_trace},
      {"save_checkpoints", save_checkpoints},
  };
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) { return from_json(j, ExperimentConfig{}); }

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ArgumentError("config must be a JSON object");
  const std::set<std::string> known = [] {
    std::set<std::string> keys;
    const nlohmann::json defaults = ExperimentConfig{}.to_json();
    for (const auto& [k, v] : defaults.items()) keys.insert(k);
    return keys;
  }();
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ArgumentError("unknown config key '" + k + "'");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  try {
    if (j.contains("agent")) c.agent = parse_agent_type(j.at("agent").get<std::string>());
    if (j.contains("ablation")) c.ablation = parse_ablation(j.at("ablation").get<std::string>());
    get("horizon", c.horizon);
    get("noise_std", c.noise_std);
    get("hot_start_episodes", c.hot_start_episodes);
    get("episodes", c.episodes);
    get("seeds", c.seeds);
    get("first_seed", c.first_seed);
    get("jobs", c.jobs);
    get("planner_threads", c.planner_threads);
    get("latent_dim", c.latent_dim);
    get("vae_hidden", c.vae_hidden);
    get("vae_learning_rate", c.vae_learning_rate);
    get("transition_learning_rate", c.transition_learning_rate);
    get("decoder_std", c.decoder_std);
    get("action_repeat", c.action_repeat);
    get("max_sim_steps", c.max_sim_steps);
    get("actions_per_plan", c.actions_per_plan);
    get("policy_samples", c.policy_samples);
    get("candidates", c.candidates);
    get("cem_iterations", c.cem_iterations);
    get("utility_hidden", c.utility_hidden);
    get("utility_learning_rate", c.utility_learning_rate);
    get("utility_iterations", c.utility_iterations);
    get("discount", c.discount);
    get("prior_std", c.prior_std);
    get("out_dir", c.out_dir);
    get("verbose", c.verbose);
    get("planner_trace", c.planner_trace);
    get("save_checkpoints", c.save_checkpoints);
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("bad config value: ") + e.what());
  }
  return c;
}

}  // namespace aif::harness
