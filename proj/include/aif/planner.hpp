#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "aif/prior.hpp"
#include "aif/world_model.hpp"

namespace aif {

struct PlannerConfig {
  std::size_t horizon = 6;
  std::size_t iterations = 2;
  std::size_t samples = 700;
  std::size_t candidates = 70;
  std::size_t commit = 2;
  std::size_t action_dim = 1;
  double action_low = -1.0;
  double action_high = 1.0;
  double std_floor = kRefitStdFloor;
  /// OpenMP threads for rollout evaluation; results do not depend on it.
  int threads = 1;

  /// Defaults for a planning window: 700 samples up to H=10, 1500 beyond.
  static PlannerConfig for_horizon(std::size_t horizon);
  std::size_t sample_width() const { return horizon * action_dim; }
  void validate() const;
};

/// Which FEEF terms contribute; a disabled term contributes exactly zero.
struct FeefTerms {
  bool extrinsic = true;
  bool intrinsic = true;
};

/// Independent Gaussian per (timestep, action dimension), row-major [horizon × action_dim].
struct GaussianPolicy {
  std::size_t horizon = 0;
  std::size_t action_dim = 0;
  std::vector<double> mean;
  std::vector<double> std;

  static GaussianPolicy standard(std::size_t horizon, std::size_t action_dim);
};

struct FeefBreakdown {
  std::vector<double> extrinsic;
  std::vector<double> intrinsic;
  double total = 0.0;
};

/// FEEF of one action sequence from the current belief: Σ_τ (extrinsic_τ − intrinsic_τ),
/// with intrinsic_τ = KL(q(x|ŷ_τ) ‖ q(x_τ|π)) on the re-encoded decoded prediction.
FeefBreakdown feef_of_sample(std::span<const double> actions, const AgentBelief& belief, const WorldModel& model,
                             const PriorModel& prior, FeefTerms terms = {});

/// Scores samples laid out row-major [n × sample_width] into `scores` (lower is better).
using PolicyObjective = std::function<void(std::span<const double> samples, std::span<double> scores)>;

struct CemIteration {
  double sample_mean = 0.0;
  double elite_mean = 0.0;
  double elite_best = 0.0;
  double elite_worst = 0.0;
};

struct PlanResult {
  GaussianPolicy policy;
  std::vector<CemIteration> iterations;
};

/// Indices of the k lowest scores, ascending by (score, index); NaN ranks last.
std::vector<std::size_t> select_elites(std::span<const double> scores, std::size_t k);

/// Draws sample `j` of CEM iteration `iteration` into `out`, clipped to the action bounds.
/// The noise depends only on (seed, iteration, j).
void draw_policy_sample(const GaussianPolicy& policy, std::uint64_t seed, std::size_t iteration, std::size_t j,
                        double low, double high, std::span<double> out);

/// Cross-entropy method over Gaussian policies, starting from N(0, I).
PlanResult cem_optimize(const PolicyObjective& objective, const PlannerConfig& cfg, std::uint64_t seed);

enum class RolloutBackend {
  Reference,  // per-sample feef_of_sample, serial
  Kernel,     // batched lanes, OpenMP over blocks
};

PlanResult plan(const AgentBelief& belief, const WorldModel& model, const PriorModel& prior,
                const PlannerConfig& cfg, FeefTerms terms, std::uint64_t seed,
                RolloutBackend backend = RolloutBackend::Kernel);

/// First `count` policy means, clipped to [low, high].
std::vector<double> next_actions(const GaussianPolicy& policy, std::size_t count, double low = -1.0,
                                 double high = 1.0);

}  // namespace aif
