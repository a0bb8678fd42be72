#pragma once

// Five-state deterministic chain s0 → s1 → … → s4; reward 1 arrives with s4, 0 elsewhere.
// The exact discounted return of s_k grows with k, so a learned utility should
// rank the states in index order.

#include <vector>

#include "aif/prior.hpp"

namespace aif::testing {

inline constexpr int kChainStates = 5;

inline std::vector<double> chain_observation(int k) { return {0.5 * (k - 2), 0.0}; }

/// Exact discounted return from state k, with each reward attributed to the
/// observation it arrives with (as the utility learner does): β^(4−k).
inline double chain_return(int k, double discount) {
  double v = 1.0;
  for (int i = k; i < kChainStates - 1; ++i) v *= discount;
  return v;
}

/// Runs `episodes` passes of the chain, calling learn_utility after every observation as the agent does.
inline UtilityModel train_chain(std::uint64_t seed, int episodes, const UtilityLearnerConfig& cfg) {
  UtilityModel u(2, 40, seed);
  for (int e = 0; e < episodes; ++e) {
    std::vector<std::vector<double>> ys;
    std::vector<double> rs;
    for (int k = 0; k < kChainStates; ++k) {
      ys.push_back(chain_observation(k));
      rs.push_back(k == kChainStates - 1 ? 1.0 : 0.0);
      learn_utility(ys, rs, u, cfg);
    }
  }
  return u;
}

/// True when U orders the states exactly as their discounted returns do.
inline bool chain_order_matches(const UtilityModel& u, double discount) {
  for (int k = 0; k + 1 < kChainStates; ++k) {
    const bool exact_up = chain_return(k + 1, discount) > chain_return(k, discount);
    const bool learned_up = u(chain_observation(k + 1)) > u(chain_observation(k));
    if (exact_up != learned_up) return false;
  }
  return true;
}

}  // namespace aif::testing
