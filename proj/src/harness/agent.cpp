#include "aif/harness/agent.hpp"

#include <cmath>
#include <deque>

#include "aif/error.hpp"
#include "aif/rng.hpp"

namespace aif::harness {

double EpisodeBuffer::reward_total() const {
  double acc = 0.0;
  for (double r : rewards) acc += r;
  return acc;
}

double EpisodeBuffer::cumulative_vfe() const {
  double acc = 0.0;
  for (const auto& m : metrics) acc += m.vfe_capsule;
  return acc;
}

namespace {

PriorModel make_prior(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.agent == AgentType::LearnedPrior) return UtilityModel(2, cfg.utility_hidden, mix_seed({seed, 2}));
  return cfg.given_prior();
}

}  // namespace

Agent::Agent(const ExperimentConfig& cfg, std::uint64_t seed)
    : cfg_(cfg),
      model_(cfg.world_model(), mix_seed({seed, 1})),
      prior_(make_prior(cfg, seed)),
      planner_(cfg.planner()),
      rng_(mix_seed({seed, 3})) {
  cfg_.validate();
}

EpisodeBuffer Agent::run_episode(env::MountainCar& env, int episode, RecordOptions record) {
  EpisodeBuffer buf;
  buf.episode = episode;
  if (record.trajectory) {
    env.set_observer([&buf](const env::SimRecord& r) { buf.trajectory.push_back(r); });
  } else {
    env.set_observer(nullptr);
  }

  const FeefTerms terms = cfg_.terms_for_episode(episode);
  const UtilityLearnerConfig utility_cfg = cfg_.utility();
  auto* utility = std::get_if<UtilityModel>(&prior_);

  std::vector<double> y = env.reset();
  if (record.trajectory) {
    buf.trajectory.push_back(env::SimRecord{0, env.state().position, env.state().velocity, 0.0, 0.0});
  }
  AgentBelief belief = model_.initial_belief();
  double a_prev = 0.0;
  double reward = 0.0;
  bool done = false;
  std::deque<double> pending;
  std::uniform_real_distribution<double> uniform_action(planner_.action_low, planner_.action_high);

  try {
    for (int t = 0;; ++t) {
      Perception p = model_.perceive(belief, y, std::span<const double>(&a_prev, 1), rng_);
      buf.observations.push_back(y);
      buf.actions.push_back(a_prev);
      buf.rewards.push_back(reward);
      buf.posteriors.push_back(std::move(p.posterior));
      buf.predicted.push_back(std::move(p.predicted));
      buf.metrics.push_back(p.metrics);

      if (utility && cfg_.agent == AgentType::LearnedPrior) {
        learn_utility(buf.observations, buf.rewards, *utility, utility_cfg);
      }
      if (done) break;

      if (pending.empty()) {
        if (cfg_.agent == AgentType::Random) {
          pending.push_back(uniform_action(rng_));
        } else {
          const std::uint64_t plan_seed = rng_();
          PlanResult result = plan(belief, model_, prior_, planner_, terms, plan_seed);
          const std::vector<double> actions =
              next_actions(result.policy, planner_.commit, planner_.action_low, planner_.action_high);
          pending.assign(actions.begin(), actions.end());
          if (record.plans) {
            PlanRecord pr{t, std::move(result.iterations), result.policy.mean, {}};
            for (const ImaginedStep& s : model_.imagine(belief.h, belief.latent.mean, result.policy.mean)) {
              pr.predicted_observations.push_back(s.decoded.mean);
            }
            buf.plans.push_back(std::move(pr));
          }
        }
      }
      const double a = pending.front();
      pending.pop_front();
      env::StepResult step = env.agent_step(a);
      y = std::move(step.observation);
      reward = step.reward;
      done = step.done;
      a_prev = a;
    }
  } catch (const std::exception& e) {
    buf.aborted = true;
    buf.abort_reason = e.what();
  }

  env.set_observer(nullptr);
  buf.sim_steps = env.state().sim_steps;
  buf.goal_reached = env::at_goal(env.state());
  buf.final_position = env.state().position;
  return buf;
}

nn::Checkpoint Agent::checkpoint() const {
  nn::Checkpoint ck;
  model_.save(ck);
  if (const auto* u = std::get_if<UtilityModel>(&prior_)) u->save(ck);
  // execution settings do not affect the model, so they stay out of the checkpoint
  ExperimentConfig stored = cfg_;
  stored.jobs = 1;
  stored.planner_threads = 1;
  stored.out_dir.clear();
  ck.metadata["config"] = stored.to_json().dump();
  return ck;
}

void Agent::restore(const nn::Checkpoint& ck) {
  model_.load(ck);
  if (auto* u = std::get_if<UtilityModel>(&prior_)) u->load(ck);
}

}  // namespace aif::harness
