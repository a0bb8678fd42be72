#include "aif/rollout_kernel.hpp"

#include <cstring>
#include <vector>

#include "aif/error.hpp"

namespace aif {

namespace {

constexpr std::size_t B = RolloutKernel::kLanes;

using nn::Activation;

using v8 = double __attribute__((vector_size(64)));
static_assert(B == 16, "two 8-wide vectors per feature row");

inline v8 load8(const double* p) {
  v8 v;
  std::memcpy(&v, p, sizeof v);
  return v;
}
inline void store8(double* p, v8 v) { std::memcpy(p, &v, sizeof v); }

// out[i][·] = init[i] + Σ_k W[i,k]·in[k][·], k ascending. Four rows at a time so
// each input row is loaded once per block; per-lane arithmetic is unchanged.
void matvec_lanes(const double* w, std::size_t rows, std::size_t cols, const double* init, const double* in,
                  double* out) {
  std::size_t i = 0;
  for (; i + 4 <= rows; i += 4) {
    const double* w0 = w + i * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    v8 a0 = v8{} + (init ? init[i] : 0.0), b0 = a0;
    v8 a1 = v8{} + (init ? init[i + 1] : 0.0), b1 = a1;
    v8 a2 = v8{} + (init ? init[i + 2] : 0.0), b2 = a2;
    v8 a3 = v8{} + (init ? init[i + 3] : 0.0), b3 = a3;
    for (std::size_t k = 0; k < cols; ++k) {
      const v8 lo = load8(in + k * B), hi = load8(in + k * B + 8);
      a0 += w0[k] * lo, b0 += w0[k] * hi;
      a1 += w1[k] * lo, b1 += w1[k] * hi;
      a2 += w2[k] * lo, b2 += w2[k] * hi;
      a3 += w3[k] * lo, b3 += w3[k] * hi;
    }
    store8(out + i * B, a0), store8(out + i * B + 8, b0);
    store8(out + (i + 1) * B, a1), store8(out + (i + 1) * B + 8, b1);
    store8(out + (i + 2) * B, a2), store8(out + (i + 2) * B + 8, b2);
    store8(out + (i + 3) * B, a3), store8(out + (i + 3) * B + 8, b3);
  }
  for (; i < rows; ++i) {
    const double* wi = w + i * cols;
    v8 a = v8{} + (init ? init[i] : 0.0), b = a;
    for (std::size_t k = 0; k < cols; ++k) {
      a += wi[k] * load8(in + k * B);
      b += wi[k] * load8(in + k * B + 8);
    }
    store8(out + i * B, a), store8(out + i * B + 8, b);
  }
}

// out[i][l] = act(bias[i] + Σ_k W[i,k]·in[k][l]); same order as DenseLayer::apply.
template <Activation Act>
void dense_lanes(const nn::DenseLayer& layer, const double* in, double* out) {
  const std::size_t n = layer.out_size() * B;
  matvec_lanes(layer.weight.value.data.data(), layer.out_size(), layer.in_size(), layer.bias.value.data.data(), in,
               out);
  if constexpr (Act != Activation::Identity) {
    for (std::size_t k = 0; k < n; ++k) out[k] = nn::activate(Act, out[k]);
  }
}

// Gate pre-activations: (bias + Σ W_in·x) + (0 + Σ W_hid·h), as in GruCell::apply.
void gate_lanes(const nn::GruCell::Gate& g, std::size_t n_in, std::size_t n_hid, const double* x, const double* h,
                double* pre, double* tmp) {
  matvec_lanes(g.w_input.value.data.data(), n_hid, n_in, g.bias.value.data.data(), x, pre);
  matvec_lanes(g.w_hidden.value.data.data(), n_hid, n_hid, nullptr, h, tmp);
  for (std::size_t k = 0; k < n_hid * B; ++k) pre[k] = pre[k] + tmp[k];
}

struct Scratch {
  std::vector<double> h, h_next, z, rh, pre, tmp, in, x, pred_mean, pred_std, dec_hidden, y, enc_hidden, enc_mean, enc_std,
      util_hidden, util_out, total;

  Scratch(std::size_t dz, std::size_t dx, std::size_t da, std::size_t dy, std::size_t dh, std::size_t du)
      : h(dz * B), h_next(dz * B), z(dz * B), rh(dz * B), pre(dz * B), tmp(dz * B), in((dx + da) * B), x(dx * B), pred_mean(dx * B),
        pred_std(dx * B), dec_hidden(dh * B), y(dy * B), enc_hidden(dh * B), enc_mean(dx * B), enc_std(dx * B),
        util_hidden(du * B), util_out(B), total(B) {}
};

}  // namespace

RolloutKernel::RolloutKernel(const WorldModel& model, const PriorModel& prior, FeefTerms terms)
    : model_(model), prior_(prior), terms_(terms) {}

void RolloutKernel::evaluate(const AgentBelief& belief, std::span<const double> samples, std::size_t horizon,
                             std::span<double> scores, int threads) const {
  const std::size_t width = horizon * model_.config().action_dim;
  if (samples.size() != scores.size() * width) throw StructuralError("rollout kernel: samples/scores size mismatch");
  if (belief.h.size() != model_.config().recurrent_size() || belief.latent.dim() != model_.config().latent_dim) {
    throw StructuralError("rollout kernel: belief does not match the model");
  }
  const std::size_t n = scores.size();
  const auto blocks = static_cast<std::ptrdiff_t>((n + B - 1) / B);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (std::ptrdiff_t blk = 0; blk < blocks; ++blk) {
    const std::size_t first = static_cast<std::size_t>(blk) * B;
    const std::size_t rows = std::min(B, n - first);
    evaluate_block(belief, samples.data() + first * width, rows, horizon, scores.data() + first);
  }
}

void RolloutKernel::evaluate_block(const AgentBelief& belief, const double* samples, std::size_t rows,
                                   std::size_t horizon, double* scores) const {
  const WorldModelConfig& cfg = model_.config();
  const Encoder& enc = model_.encoder();
  const Decoder& dec = model_.decoder();
  const TransitionModel& tr = model_.transition();
  const std::size_t dz = cfg.recurrent_size(), dx = cfg.latent_dim, da = cfg.action_dim, dy = cfg.obs_dim;
  const std::size_t din = dx + da;
  const std::size_t width = horizon * da;

  const auto* utility = std::get_if<UtilityModel>(&prior_);
  const auto* given = std::get_if<GivenPrior>(&prior_);
  Scratch s(dz, dx, da, dy, cfg.hidden, utility ? utility->hidden().out_size() : 1);

  for (std::size_t k = 0; k < dz; ++k)
    for (std::size_t l = 0; l < B; ++l) s.h[k * B + l] = belief.h[k];
  for (std::size_t k = 0; k < dx; ++k)
    for (std::size_t l = 0; l < B; ++l) s.x[k * B + l] = belief.latent.mean[k];
  for (std::size_t l = 0; l < B; ++l) s.total[l] = 0.0;

  for (std::size_t t = 0; t < horizon; ++t) {
    // GRU input concat(x, a); padded lanes reuse row 0.
    for (std::size_t k = 0; k < dx; ++k)
      for (std::size_t l = 0; l < B; ++l) s.in[k * B + l] = s.x[k * B + l];
    for (std::size_t k = 0; k < da; ++k)
      for (std::size_t l = 0; l < B; ++l) {
        const std::size_t row = l < rows ? l : 0;
        s.in[(dx + k) * B + l] = samples[row * width + t * da + k];
      }

    gate_lanes(tr.cell.update, din, dz, s.in.data(), s.h.data(), s.z.data(), s.tmp.data());
    for (std::size_t k = 0; k < dz * B; ++k) s.z[k] = nn::sigmoid(s.z[k]);
    gate_lanes(tr.cell.reset, din, dz, s.in.data(), s.h.data(), s.rh.data(), s.tmp.data());
    for (std::size_t k = 0; k < dz * B; ++k) s.rh[k] = nn::sigmoid(s.rh[k]) * s.h[k];
    gate_lanes(tr.cell.candidate, din, dz, s.in.data(), s.rh.data(), s.pre.data(), s.tmp.data());
    for (std::size_t k = 0; k < dz * B; ++k) {
      const double c = nn::tanh_act(s.pre[k]);
      s.h_next[k] = (1.0 - s.z[k]) * s.h[k] + s.z[k] * c;
    }

    dense_lanes<Activation::Identity>(tr.delta_head, s.h_next.data(), s.pred_mean.data());
    for (std::size_t k = 0; k < dx * B; ++k) s.pred_mean[k] = s.x[k] + s.pred_mean[k];
    dense_lanes<Activation::Softplus>(tr.std_head, s.h_next.data(), s.pred_std.data());
    for (std::size_t k = 0; k < dx * B; ++k) s.pred_std[k] += tr.std_min;

    dense_lanes<Activation::SiLU>(dec.hidden, s.pred_mean.data(), s.dec_hidden.data());
    dense_lanes<Activation::Identity>(dec.mean_head, s.dec_hidden.data(), s.y.data());

    dense_lanes<Activation::SiLU>(enc.hidden, s.y.data(), s.enc_hidden.data());
    dense_lanes<Activation::Identity>(enc.mean_head, s.enc_hidden.data(), s.enc_mean.data());
    dense_lanes<Activation::Softplus>(enc.std_head, s.enc_hidden.data(), s.enc_std.data());
    for (std::size_t k = 0; k < dx * B; ++k) s.enc_std[k] += enc.std_min;

    if (terms_.extrinsic && utility) {
      dense_lanes<Activation::SiLU>(utility->hidden(), s.y.data(), s.util_hidden.data());
      dense_lanes<Activation::Tanh>(utility->output(), s.util_hidden.data(), s.util_out.data());
    }

    for (std::size_t l = 0; l < B; ++l) {
      double ext = 0.0;
      if (terms_.extrinsic) {
        if (utility) {
          ext = 1.0 - s.util_out[l];
        } else {
          for (std::size_t k = 0; k < dy; ++k) {
            ext += kl_term(s.y[k * B + l], dec.fixed_std, given->preference.mean[k], given->preference.std[k]);
          }
        }
      }
      double intr = 0.0;
      if (terms_.intrinsic) {
        for (std::size_t k = 0; k < dx; ++k) {
          intr += kl_term(s.enc_mean[k * B + l], s.enc_std[k * B + l], s.pred_mean[k * B + l], s.pred_std[k * B + l]);
        }
      }
      s.total[l] += ext - intr;
    }

    std::swap(s.h, s.h_next);
    std::swap(s.x, s.pred_mean);
  }
  for (std::size_t l = 0; l < rows; ++l) scores[l] = s.total[l];
}

}  // namespace aif
