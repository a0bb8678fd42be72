#pragma once

// Scalar activation functions shared by the traced, untraced and batched
// forward paths. Everything here is branch-free so that a loop over samples
// vectorizes while each lane still performs exactly the scalar operation
// sequence; that is what makes the batched rollout kernel bit-identical to
// the per-sample reference.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>

namespace aif::nn {

/// exp(x) with ~2 ulp accuracy. Inputs are clamped to [-708, 709]; NaN propagates.
inline double det_exp(double x) {
  constexpr double kLog2e = 1.4426950408889634;
  constexpr double kLn2Hi = 6.93147180369123816490e-01;
  constexpr double kLn2Lo = 1.90821492927058770002e-10;
  constexpr double kShift = 0x1.8p52;

  x = x < -708.0 ? -708.0 : x;
  x = x > 709.0 ? 709.0 : x;
  double kd = x * kLog2e + kShift;
  const auto kbits = std::bit_cast<std::int64_t>(kd);
  kd -= kShift;
  const double r = x - kd * kLn2Hi - kd * kLn2Lo;

  // Taylor series to degree 13; |r| <= ln2/2 keeps the truncation below 1e-17.
  double p = 1.0 / 6227020800.0;
  p = p * r + 1.0 / 479001600.0;
  p = p * r + 1.0 / 39916800.0;
  p = p * r + 1.0 / 3628800.0;
  p = p * r + 1.0 / 362880.0;
  p = p * r + 1.0 / 40320.0;
  p = p * r + 1.0 / 5040.0;
  p = p * r + 1.0 / 720.0;
  p = p * r + 1.0 / 120.0;
  p = p * r + 1.0 / 24.0;
  p = p * r + 1.0 / 6.0;
  p = p * r + 0.5;
  p = p * r + 1.0;
  p = p * r + 1.0;

  const std::int64_t k = kbits - std::bit_cast<std::int64_t>(kShift);
  const double scale = std::bit_cast<double>(static_cast<std::uint64_t>(k + 1023) << 52);
  return p * scale;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + det_exp(-x)); }

inline double silu(double x) { return x * sigmoid(x); }

inline double tanh_act(double x) {
  const double t = det_exp(-2.0 * std::fabs(x));
  return std::copysign((1.0 - t) / (1.0 + t), x);
}

inline double softplus(double x) {
  return std::max(x, 0.0) + std::log1p(det_exp(-std::fabs(x)));
}

enum class Activation { Identity, SiLU, Tanh, Sigmoid, Softplus };

inline double activate(Activation act, double x) {
  switch (act) {
    case Activation::Identity: return x;
    case Activation::SiLU: return silu(x);
    case Activation::Tanh: return tanh_act(x);
    case Activation::Sigmoid: return sigmoid(x);
    case Activation::Softplus: return softplus(x);
  }
  return x;
}

/// d activation / dx, given the pre-activation x and the output y.
inline double activation_slope(Activation act, double x, double y) {
  switch (act) {
    case Activation::Identity: return 1.0;
    case Activation::SiLU: {
      const double s = sigmoid(x);
      return s + x * s * (1.0 - s);
    }
    case Activation::Tanh: return 1.0 - y * y;
    case Activation::Sigmoid: return y * (1.0 - y);
    case Activation::Softplus: return sigmoid(x);
  }
  return 1.0;
}

const char* activation_name(Activation act);

}  // namespace aif::nn
