#include "aif/distributions.hpp"

#include <cmath>
#include <string>

#include "aif/error.hpp"

namespace aif {

DiagGaussian::DiagGaussian(std::vector<double> mean_, std::vector<double> std_)
    : mean(std::move(mean_)), std(std::move(std_)) {
  if (mean.empty()) throw StructuralError("DiagGaussian: dimension must be >= 1");
  if (mean.size() != std.size()) throw StructuralError("DiagGaussian: mean/std length mismatch");
  for (double s : std) {
    if (!(s > 0.0)) throw ArgumentError("DiagGaussian: std must be strictly positive, got " + std::to_string(s));
  }
}

DiagGaussian DiagGaussian::standard(std::size_t dim) {
  return DiagGaussian(std::vector<double>(dim, 0.0), std::vector<double>(dim, 1.0));
}

DiagGaussian DiagGaussian::isotropic(std::vector<double> mean_, double std_) {
  const std::size_t n = mean_.size();
  return DiagGaussian(std::move(mean_), std::vector<double>(n, std_));
}

namespace {

void require_dims(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw StructuralError(std::string(op) + ": dimension mismatch " + std::to_string(a) + " vs " +
                          std::to_string(b));
  }
}

}  // namespace

double kl_divergence(const DiagGaussian& q, const DiagGaussian& p) {
  require_dims(q.dim(), p.dim(), "kl_divergence");
  double acc = 0.0;
  for (std::size_t i = 0; i < q.dim(); ++i) acc += kl_term(q.mean[i], q.std[i], p.mean[i], p.std[i]);
  return acc;
}

double log_likelihood(const DiagGaussian& d, std::span<const double> x) {
  require_dims(d.dim(), x.size(), "log_likelihood");
  double acc = 0.0;
  for (std::size_t i = 0; i < d.dim(); ++i) acc += log_density_term(x[i], d.mean[i], d.std[i]);
  return acc;
}

std::vector<double> sample_reparameterized(const DiagGaussian& d, std::span<const double> noise) {
  require_dims(d.dim(), noise.size(), "sample_reparameterized");
  std::vector<double> out(d.dim());
  for (std::size_t i = 0; i < d.dim(); ++i) out[i] = d.mean[i] + d.std[i] * noise[i];
  return out;
}

DiagGaussian refit_gaussian(std::span<const std::vector<double>> samples, double std_floor) {
  if (samples.size() < 2) throw ArgumentError("refit_gaussian: need at least 2 samples");
  const std::size_t dim = samples.front().size();
  if (dim == 0) throw StructuralError("refit_gaussian: empty samples");
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (const auto& s : samples) {
    require_dims(s.size(), dim, "refit_gaussian");
    for (std::size_t i = 0; i < dim; ++i) mean[i] += s[i];
  }
  const double n = static_cast<double>(samples.size());
  for (double& m : mean) m /= n;
  for (const auto& s : samples) {
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = s[i] - mean[i];
      sd[i] += d * d;
    }
  }
  for (double& v : sd) v = std::max(std::sqrt(v / n), std_floor);
  return DiagGaussian(std::move(mean), std::move(sd));
}

GaussianVar constant_gaussian(nn::Tape& tape, const DiagGaussian& d) {
  return {tape.constant(d.mean), tape.constant(d.std)};
}

nn::Var kl_divergence(const GaussianVar& q, const GaussianVar& p) {
  using namespace nn;
  require_dims(q.mean.size(), p.mean.size(), "kl_divergence");
  // Σ [ln sp − ln sq + ½((sq/sp)² + ((mq − mp)/sp)²) − ½]
  Var log_ratio = sub(log(p.std), log(q.std));
  Var r = div(q.std, p.std);
  Var d = div(sub(q.mean, p.mean), p.std);
  Var quad = scale(add(square(r), square(d)), 0.5);
  return add_scalar(sum(add(log_ratio, quad)), -0.5 * static_cast<double>(q.mean.size()));
}

nn::Var log_likelihood(const GaussianVar& g, nn::Var x) {
  using namespace nn;
  require_dims(g.mean.size(), x.size(), "log_likelihood");
  constexpr double kHalfLog2Pi = 0.91893853320467274178;
  Var d = div(sub(x, g.mean), g.std);
  Var per_dim = add(scale(square(d), -0.5), scale(log(g.std), -1.0));
  return add_scalar(sum(per_dim), -kHalfLog2Pi * static_cast<double>(x.size()));
}

nn::Var sample_reparameterized(const GaussianVar& g, nn::Var noise) {
  require_dims(g.mean.size(), noise.size(), "sample_reparameterized");
  return nn::add(g.mean, nn::mul(g.std, noise));
}

}  // namespace aif
