#include "aif/world_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aif/error.hpp"

namespace aif {

using nn::Activation;
using nn::DenseLayer;
using nn::Tape;
using nn::Var;

void WorldModelConfig::validate() const {
  if (obs_dim == 0 || latent_dim == 0 || action_dim == 0 || hidden == 0 || horizon == 0) {
    throw ArgumentError("world model dimensions must be positive");
  }
  if (!(decoder_std > 0.0)) throw ArgumentError("decoder std must be positive");
  if (!(vae_learning_rate >= 0.0) || !(transition_learning_rate >= 0.0)) {
    throw ArgumentError("learning rates must be non-negative");
  }
  if (!(std_min >= 0.0)) throw ArgumentError("std_min must be non-negative");
}

namespace {

void require_finite(std::span<const double> v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw InputError(std::string(what) + " contains a non-finite value");
  }
}

void require_size(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw StructuralError(std::string(what) + ": expected size " + std::to_string(n) + ", got " +
                          std::to_string(v.size()));
  }
}

std::vector<double> add_floor(std::vector<double> v, double floor) {
  for (double& s : v) s += floor;
  return v;
}

}  // namespace

DiagGaussian Encoder::operator()(std::span<const double> y) const {
  require_size(y, hidden.in_size(), "encode");
  require_finite(y, "observation");
  const std::vector<double> z = hidden.apply(y);
  return DiagGaussian(mean_head.apply(z), add_floor(std_head.apply(z), std_min));
}

GaussianVar Encoder::forward(Tape& tape, Var y) const {
  Var z = hidden.forward(tape, y);
  return {mean_head.forward(tape, z), nn::add_scalar(std_head.forward(tape, z), std_min)};
}

DiagGaussian Decoder::operator()(std::span<const double> x) const {
  require_size(x, hidden.in_size(), "decode");
  require_finite(x, "latent");
  const std::vector<double> z = hidden.apply(x);
  std::vector<double> mean = mean_head.apply(z);
  const std::size_t n = mean.size();
  return DiagGaussian(std::move(mean), std::vector<double>(n, fixed_std));
}

GaussianVar Decoder::forward(Tape& tape, Var x) const {
  Var mean = mean_head.forward(tape, hidden.forward(tape, x));
  const std::vector<double> sd(mean.size(), fixed_std);
  return {mean, tape.constant(sd)};
}

TransitionModel::Step TransitionModel::operator()(std::span<const double> h_prev, std::span<const double> x,
                                                  std::span<const double> a) const {
  const std::size_t dx = delta_head.out_size();
  require_size(x, dx, "transition latent");
  require_size(a, cell.input_size() - dx, "transition action");
  std::vector<double> in(x.begin(), x.end());
  in.insert(in.end(), a.begin(), a.end());
  Step out;
  out.h_next.resize(cell.hidden_size());
  cell.apply(h_prev, in, out.h_next);
  std::vector<double> mean = delta_head.apply(out.h_next);
  for (std::size_t i = 0; i < dx; ++i) mean[i] = x[i] + mean[i];
  out.predicted = DiagGaussian(std::move(mean), add_floor(std_head.apply(out.h_next), std_min));
  return out;
}

TransitionModel::TracedStep TransitionModel::forward(Tape& tape, Var h_prev, Var x, Var a) const {
  Var h_next = cell.forward(tape, h_prev, nn::concat(x, a));
  Var mean = nn::add(x, delta_head.forward(tape, h_next));
  Var sd = nn::add_scalar(std_head.forward(tape, h_next), std_min);
  return {h_next, {mean, sd}};
}

WorldModel::WorldModel(const WorldModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  cfg_.validate();
  const std::size_t dy = cfg.obs_dim, dx = cfg.latent_dim, da = cfg.action_dim, dh = cfg.hidden;
  const std::size_t dz = cfg.recurrent_size();

  encoder_ = Encoder{DenseLayer("encoder.hidden", dy, dh, Activation::SiLU),
                     DenseLayer("encoder.mean", dh, dx, Activation::Identity),
                     DenseLayer("encoder.std", dh, dx, Activation::Softplus), cfg.std_min};
  decoder_ = Decoder{DenseLayer("decoder.hidden", dx, dh, Activation::SiLU),
                     DenseLayer("decoder.mean", dh, dy, Activation::Identity), cfg.decoder_std};
  transition_ = TransitionModel{nn::GruCell("transition.gru", dx + da, dz),
                                DenseLayer("transition.delta", dz, dx, Activation::Identity),
                                DenseLayer("transition.std", dz, dx, Activation::Softplus), cfg.std_min};

  std::mt19937_64 rng(seed);
  for (DenseLayer* l : {&encoder_.hidden, &encoder_.mean_head, &encoder_.std_head, &decoder_.hidden,
                        &decoder_.mean_head}) {
    l->init_uniform(rng);
  }
  transition_.cell.init_uniform(rng);
  transition_.delta_head.init_uniform(rng);
  transition_.std_head.init_uniform(rng);

  vae_opt_ = nn::Adam(vae_parameters(), {.learning_rate = cfg.vae_learning_rate});
  transition_opt_ = nn::Adam(transition_parameters(), {.learning_rate = cfg.transition_learning_rate});
}

WorldModel::WorldModel(const WorldModel& other)
    : cfg_(other.cfg_),
      encoder_(other.encoder_),
      decoder_(other.decoder_),
      transition_(other.transition_),
      vae_opt_(other.vae_opt_),
      transition_opt_(other.transition_opt_) {
  bind_optimizers();
}

WorldModel& WorldModel::operator=(const WorldModel& other) {
  if (this != &other) {
    cfg_ = other.cfg_;
    encoder_ = other.encoder_;
    decoder_ = other.decoder_;
    transition_ = other.transition_;
    vae_opt_ = other.vae_opt_;
    transition_opt_ = other.transition_opt_;
    bind_optimizers();
  }
  return *this;
}

void WorldModel::bind_optimizers() {
  vae_opt_.rebind(vae_parameters());
  transition_opt_.rebind(transition_parameters());
}

std::vector<nn::Parameter*> WorldModel::vae_parameters() {
  std::vector<nn::Parameter*> out;
  for (DenseLayer* l : {&encoder_.hidden, &encoder_.mean_head, &encoder_.std_head, &decoder_.hidden,
                        &decoder_.mean_head}) {
    for (nn::Parameter* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<nn::Parameter*> WorldModel::transition_parameters() {
  std::vector<nn::Parameter*> out = transition_.cell.parameters();
  for (DenseLayer* l : {&transition_.delta_head, &transition_.std_head}) {
    for (nn::Parameter* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<nn::Parameter*> WorldModel::parameters() {
  std::vector<nn::Parameter*> out = vae_parameters();
  for (nn::Parameter* p : transition_parameters()) out.push_back(p);
  return out;
}

std::vector<const nn::Parameter*> WorldModel::parameters() const {
  auto* self = const_cast<WorldModel*>(this);
  std::vector<const nn::Parameter*> out;
  for (nn::Parameter* p : self->parameters()) out.push_back(p);
  return out;
}

DiagGaussian WorldModel::encode(std::span<const double> y) const { return encoder_(y); }

DiagGaussian WorldModel::decode(std::span<const double> x) const { return decoder_(x); }

TransitionModel::Step WorldModel::transition_step(std::span<const double> h_prev, std::span<const double> x,
                                                  std::span<const double> a) const {
  require_size(h_prev, cfg_.recurrent_size(), "transition recurrent state");
  return transition_(h_prev, x, a);
}

nn::Gradients WorldModel::vae_gradients(std::span<const double> y, std::span<const double> noise,
                                        double* loss) const {
  require_size(y, cfg_.obs_dim, "vae_loss observation");
  require_size(noise, cfg_.latent_dim, "vae_loss noise");
  Tape tape;
  Var yv = tape.constant(y);
  GaussianVar posterior = encoder_.forward(tape, yv);
  Var x = sample_reparameterized(posterior, tape.constant(noise));
  GaussianVar likelihood = decoder_.forward(tape, x);
  Var reconstruction = nn::scale(log_likelihood(likelihood, yv), -1.0);
  Var kl = kl_divergence(posterior, constant_gaussian(tape, DiagGaussian::standard(cfg_.latent_dim)));
  Var total = nn::add(reconstruction, kl);
  if (loss) *loss = total.item();
  return tape.backward(total);
}

nn::Gradients WorldModel::transition_gradients(std::span<const double> h_prev, std::span<const double> x,
                                               std::span<const double> a, const DiagGaussian& posterior,
                                               double* loss) const {
  require_size(h_prev, cfg_.recurrent_size(), "transition recurrent state");
  Tape tape;
  auto step = transition_.forward(tape, tape.constant(h_prev), tape.constant(x), tape.constant(a));
  Var kl = kl_divergence(step.predicted, constant_gaussian(tape, posterior));
  if (loss) *loss = kl.item();
  return tape.backward(kl);
}

double WorldModel::vae_loss(std::span<const double> y, std::span<const double> noise) const {
  const DiagGaussian posterior = encode(y);
  const DiagGaussian likelihood = decode(sample_reparameterized(posterior, noise));
  return -log_likelihood(likelihood, y) + kl_divergence(posterior, DiagGaussian::standard(cfg_.latent_dim));
}

double WorldModel::transition_loss(const DiagGaussian& predicted, const DiagGaussian& posterior) {
  return kl_divergence(predicted, posterior);
}

double WorldModel::model_free_energy(const DiagGaussian& predicted, const DiagGaussian& posterior,
                                     std::span<const double> y, std::span<const double> noise) const {
  const DiagGaussian likelihood = decode(sample_reparameterized(predicted, noise));
  return -log_likelihood(likelihood, y) + kl_divergence(predicted, posterior);
}

AgentBelief WorldModel::initial_belief() const {
  return AgentBelief{DiagGaussian::standard(cfg_.latent_dim), std::vector<double>(cfg_.recurrent_size(), 0.0),
                     std::vector<double>(cfg_.action_dim, 0.0), false};
}

Perception WorldModel::perceive(AgentBelief& belief, std::span<const double> y, std::span<const double> a_prev,
                                std::mt19937_64& rng) {
  require_size(y, cfg_.obs_dim, "perceive observation");
  require_size(a_prev, cfg_.action_dim, "perceive action");
  require_finite(y, "observation");
  require_finite(a_prev, "action");

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> vae_noise(cfg_.latent_dim);
  for (double& e : vae_noise) e = normal(rng);

  Perception out;
  out.posterior = encode(y);

  std::vector<double> h_next(cfg_.recurrent_size(), 0.0);
  nn::Gradients transition_grads;
  if (belief.has_history) {
    auto step = transition_step(belief.h, belief.latent.mean, a_prev);
    std::vector<double> fe_noise(cfg_.latent_dim);
    for (double& e : fe_noise) e = normal(rng);
    out.metrics.vfe_capsule = model_free_energy(step.predicted, out.posterior, y, fe_noise);
    transition_grads =
        transition_gradients(belief.h, belief.latent.mean, a_prev, out.posterior, &out.metrics.transition_kl);
    out.metrics.has_prediction = true;
    out.predicted = std::move(step.predicted);
    h_next = std::move(step.h_next);
  }
  const nn::Gradients vae_grads = vae_gradients(y, vae_noise, &out.metrics.vae_loss);

  if (!std::isfinite(out.metrics.vae_loss) || !std::isfinite(out.metrics.transition_kl) ||
      !std::isfinite(out.metrics.vfe_capsule)) {
    throw InputError("perceive produced a non-finite metric");
  }

  vae_opt_.step(vae_grads);
  if (out.metrics.has_prediction) transition_opt_.step(transition_grads);

  belief.latent = out.posterior;
  belief.h = std::move(h_next);
  belief.last_action.assign(a_prev.begin(), a_prev.end());
  belief.has_history = true;
  return out;
}

std::vector<ImaginedStep> WorldModel::imagine(std::span<const double> h, std::span<const double> x,
                                              std::span<const double> actions) const {
  const std::size_t da = cfg_.action_dim;
  if (actions.size() % da != 0) throw StructuralError("imagine: action sequence length not a multiple of dim(a)");
  require_size(h, cfg_.recurrent_size(), "imagine recurrent state");
  require_size(x, cfg_.latent_dim, "imagine latent");
  const std::size_t steps = actions.size() / da;

  std::vector<ImaginedStep> out;
  out.reserve(steps);
  std::vector<double> hh(h.begin(), h.end());
  std::vector<double> xx(x.begin(), x.end());
  for (std::size_t t = 0; t < steps; ++t) {
    auto step = transition_(hh, xx, actions.subspan(t * da, da));
    DiagGaussian decoded = decoder_(step.predicted.mean);
    DiagGaussian reencoded = encoder_(decoded.mean);
    xx = step.predicted.mean;
    hh = std::move(step.h_next);
    out.push_back(ImaginedStep{std::move(step.predicted), std::move(decoded), std::move(reencoded)});
  }
  return out;
}

void WorldModel::save(nn::Checkpoint& ck) const {
  ck.add(parameters());
  ck.metadata["world_model.horizon"] = std::to_string(cfg_.horizon);
  ck.metadata["world_model.decoder_std"] = std::to_string(cfg_.decoder_std);
}

void WorldModel::load(const nn::Checkpoint& ck) { ck.restore(parameters()); }

}  // namespace aif
