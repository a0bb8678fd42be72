#pragma once

#include <span>

#include "aif/planner.hpp"

namespace aif {

/// Batched FEEF evaluation for many action sequences sharing one start belief.
///
/// Samples are processed in blocks of kLanes with a [feature][lane] layout so
/// the inner loops vectorize across samples. Every lane performs the same
/// floating-point operation sequence as feef_of_sample, so scores match the
/// serial reference bit for bit, for any thread count.
class RolloutKernel {
 public:
  static constexpr std::size_t kLanes = 16;

  RolloutKernel(const WorldModel& model, const PriorModel& prior, FeefTerms terms);

  /// samples: row-major [n × horizon·action_dim]; scores: n totals.
  void evaluate(const AgentBelief& belief, std::span<const double> samples, std::size_t horizon,
                std::span<double> scores, int threads = 1) const;

 private:
  void evaluate_block(const AgentBelief& belief, const double* samples, std::size_t rows, std::size_t horizon,
                      double* scores) const;

  const WorldModel& model_;
  const PriorModel& prior_;
  FeefTerms terms_;
};

}  // namespace aif
