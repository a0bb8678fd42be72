#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "aif/nn/tape.hpp"

namespace aif {

/// Gaussian with diagonal covariance.
struct DiagGaussian {
  std::vector<double> mean;
  std::vector<double> std;

  DiagGaussian() = default;
  /// Throws StructuralError on empty or mismatched vectors, ArgumentError on std <= 0.
  DiagGaussian(std::vector<double> mean_, std::vector<double> std_);
  static DiagGaussian standard(std::size_t dim);
  static DiagGaussian isotropic(std::vector<double> mean_, double std_);

  std::size_t dim() const { return mean.size(); }
};

constexpr double kRefitStdFloor = 1e-3;

/// One-dimensional KL(N(mq, sq) ‖ N(mp, sp)), clamped at zero against rounding.
inline double kl_term(double mq, double sq, double mp, double sp) {
  const double log_ratio = std::log(sp) - std::log(sq);
  const double r = sq / sp;
  const double d = (mq - mp) / sp;
  const double v = log_ratio + 0.5 * (r * r + d * d) - 0.5;
  return v > 0.0 ? v : 0.0;
}

/// ln N(x; m, s) for one dimension.
inline double log_density_term(double x, double m, double s) {
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  const double d = (x - m) / s;
  return -0.5 * d * d - std::log(s) - kHalfLog2Pi;
}

double kl_divergence(const DiagGaussian& q, const DiagGaussian& p);
double log_likelihood(const DiagGaussian& d, std::span<const double> x);
std::vector<double> sample_reparameterized(const DiagGaussian& d, std::span<const double> noise);
/// Per-dimension sample mean and population std (floored at `std_floor`). Needs >= 2 samples.
DiagGaussian refit_gaussian(std::span<const std::vector<double>> samples, double std_floor = kRefitStdFloor);

/// Diagonal Gaussian whose parameters live on a tape.
struct GaussianVar {
  nn::Var mean;
  nn::Var std;
};

GaussianVar constant_gaussian(nn::Tape& tape, const DiagGaussian& d);
nn::Var kl_divergence(const GaussianVar& q, const GaussianVar& p);
nn::Var log_likelihood(const GaussianVar& d, nn::Var x);
nn::Var sample_reparameterized(const GaussianVar& d, nn::Var noise);

}  // namespace aif
