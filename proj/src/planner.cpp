#include "aif/planner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "aif/error.hpp"
#include "aif/rng.hpp"
#include "aif/rollout_kernel.hpp"

namespace aif {

PlannerConfig PlannerConfig::for_horizon(std::size_t horizon) {
  PlannerConfig cfg;
  cfg.horizon = horizon;
  cfg.samples = horizon > 10 ? 1500 : 700;
  return cfg;
}

void PlannerConfig::validate() const {
  if (horizon < 1) throw ArgumentError("planner: horizon must be >= 1");
  if (iterations < 1) throw ArgumentError("planner: iterations must be >= 1");
  if (candidates < 2) throw ArgumentError("planner: need at least 2 candidates to refit");
  if (candidates > samples) throw ArgumentError("planner: candidates must not exceed samples");
  if (commit < 1 || commit > horizon) throw ArgumentError("planner: committed actions must lie in [1, horizon]");
  if (action_dim < 1) throw ArgumentError("planner: action_dim must be >= 1");
  if (!(action_low < action_high)) throw ArgumentError("planner: empty action bounds");
  if (!(std_floor > 0.0)) throw ArgumentError("planner: std floor must be positive");
  if (threads < 1) throw ArgumentError("planner: threads must be >= 1");
}

GaussianPolicy GaussianPolicy::standard(std::size_t horizon, std::size_t action_dim) {
  const std::size_t n = horizon * action_dim;
  return GaussianPolicy{horizon, action_dim, std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)};
}

FeefBreakdown feef_of_sample(std::span<const double> actions, const AgentBelief& belief, const WorldModel& model,
                             const PriorModel& prior, FeefTerms terms) {
  const auto trajectory = model.imagine(belief.h, belief.latent.mean, actions);
  FeefBreakdown out;
  out.extrinsic.reserve(trajectory.size());
  out.intrinsic.reserve(trajectory.size());
  for (const ImaginedStep& step : trajectory) {
    const double ext = terms.extrinsic ? extrinsic_value(step.decoded, prior) : 0.0;
    const double intr = terms.intrinsic ? kl_divergence(step.reencoded, step.predicted) : 0.0;
    out.extrinsic.push_back(ext);
    out.intrinsic.push_back(intr);
    out.total += ext - intr;
  }
  return out;
}

std::vector<std::size_t> select_elites(std::span<const double> scores, std::size_t k) {
  if (k > scores.size()) throw ArgumentError("select_elites: k exceeds the number of scores");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto key = [&](std::size_t i) { return std::isnan(scores[i]) ? INFINITY : scores[i]; };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double ka = key(a), kb = key(b);
                      return ka < kb || (ka == kb && a < b);
                    });
  idx.resize(k);
  return idx;
}

void draw_policy_sample(const GaussianPolicy& policy, std::uint64_t seed, std::size_t iteration, std::size_t j,
                        double low, double high, std::span<double> out) {
  SplitMix64 gen(mix_seed({seed, iteration, j}));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (std::size_t c = 0; c < out.size(); ++c) {
    out[c] = std::clamp(policy.mean[c] + policy.std[c] * normal(gen), low, high);
  }
}

PlanResult cem_optimize(const PolicyObjective& objective, const PlannerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  const std::size_t width = cfg.sample_width();
  PlanResult result;
  result.policy = GaussianPolicy::standard(cfg.horizon, cfg.action_dim);

  std::vector<double> samples(cfg.samples * width);
  std::vector<double> scores(cfg.samples);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    for (std::size_t j = 0; j < cfg.samples; ++j) {
      draw_policy_sample(result.policy, seed, it, j, cfg.action_low, cfg.action_high,
                         std::span<double>(samples).subspan(j * width, width));
    }
    objective(samples, scores);

    const std::vector<std::size_t> elites = select_elites(scores, cfg.candidates);
    std::vector<std::vector<double>> elite_rows;
    elite_rows.reserve(elites.size());
    CemIteration stats;
    for (std::size_t j : elites) {
      const auto first = samples.begin() + static_cast<std::ptrdiff_t>(j * width);
      elite_rows.emplace_back(first, first + static_cast<std::ptrdiff_t>(width));
      stats.elite_mean += scores[j];
    }
    stats.elite_mean /= static_cast<double>(elites.size());
    stats.elite_best = scores[elites.front()];
    stats.elite_worst = scores[elites.back()];
    for (double s : scores) stats.sample_mean += s;
    stats.sample_mean /= static_cast<double>(scores.size());
    result.iterations.push_back(stats);

    const DiagGaussian refit = refit_gaussian(elite_rows, cfg.std_floor);
    result.policy.mean = refit.mean;
    result.policy.std = refit.std;
  }
  return result;
}

PlanResult plan(const AgentBelief& belief, const WorldModel& model, const PriorModel& prior,
                const PlannerConfig& cfg, FeefTerms terms, std::uint64_t seed, RolloutBackend backend) {
  if (cfg.action_dim != model.config().action_dim) throw StructuralError("planner and model disagree on dim(a)");
  const std::size_t width = cfg.sample_width();
  if (backend == RolloutBackend::Reference) {
    auto objective = [&](std::span<const double> samples, std::span<double> scores) {
      for (std::size_t j = 0; j < scores.size(); ++j) {
        scores[j] = feef_of_sample(samples.subspan(j * width, width), belief, model, prior, terms).total;
      }
    };
    return cem_optimize(objective, cfg, seed);
  }
  const RolloutKernel kernel(model, prior, terms);
  auto objective = [&](std::span<const double> samples, std::span<double> scores) {
    kernel.evaluate(belief, samples, cfg.horizon, scores, cfg.threads);
  };
  return cem_optimize(objective, cfg, seed);
}

std::vector<double> next_actions(const GaussianPolicy& policy, std::size_t count, double low, double high) {
  if (count > policy.horizon) throw ArgumentError("next_actions: count exceeds the policy horizon");
  std::vector<double> out(policy.mean.begin(),
                          policy.mean.begin() + static_cast<std::ptrdiff_t>(count * policy.action_dim));
  for (double& a : out) a = std::clamp(a, low, high);
  return out;
}

}  // namespace aif
