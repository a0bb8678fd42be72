#include <doctest.h>

#include <cmath>
#include <random>

#include "aif/error.hpp"
#include "aif/world_model.hpp"
#include "support/gradcheck.hpp"

using namespace aif;
using aif::testing::uniform_vector;

namespace {

std::vector<std::vector<double>> snapshot(const WorldModel& m) {
  std::vector<std::vector<double>> out;
  for (const nn::Parameter* p : m.parameters()) out.push_back(p->value.data);
  return out;
}

void zero_transition_heads(WorldModel& m) {
  for (nn::DenseLayer* l : {&m.transition().delta_head, &m.transition().std_head}) {
    for (nn::Parameter* p : l->parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  }
}

}  // namespace

TEST_CASE("encoder gives finite beliefs with positive std, deterministically") {
  WorldModel m(WorldModelConfig{}, 1);
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto y = uniform_vector(rng, 2, -3, 3);
    const DiagGaussian q = m.encode(y);
    CHECK(q.dim() == 2);
    for (std::size_t k = 0; k < 2; ++k) {
      CHECK(std::isfinite(q.mean[k]));
      CHECK(q.std[k] > 0.0);
    }
    const DiagGaussian again = m.encode(y);
    CHECK(again.mean == q.mean);
    CHECK(again.std == q.std);
  }
  CHECK_THROWS_AS(m.encode(std::vector<double>{std::nan(""), 0.0}), InputError);
  CHECK_THROWS_AS(m.encode(std::vector<double>{1.0}), StructuralError);
}

TEST_CASE("decoder std is the configured constant") {
  WorldModelConfig clean;
  WorldModelConfig noisy;
  noisy.decoder_std = 0.1;
  WorldModel a(clean, 3), b(noisy, 3);
  std::mt19937_64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const auto x = uniform_vector(rng, 2, -5, 5);
    for (double s : a.decode(x).std) CHECK(s == 0.05);
    for (double s : b.decode(x).std) CHECK(s == 0.1);
  }
  CHECK_THROWS_AS(a.decode(std::vector<double>{INFINITY, 0.0}), InputError);
}

TEST_CASE("zero-weight transition heads give identity dynamics") {
  WorldModel m(WorldModelConfig{}, 5);
  zero_transition_heads(m);
  const std::vector<double> x{0.3, -0.7}, a{0.5};
  std::vector<double> h(m.config().recurrent_size(), 0.0);
  for (int t = 0; t < 10; ++t) {
    auto step = m.transition_step(h, x, a);
    CHECK(step.predicted.mean == x);
    for (double s : step.predicted.std) CHECK(s > 0.0);
    CHECK(step.h_next.size() == m.config().recurrent_size());
    h = step.h_next;
  }
  const auto roll = m.imagine(std::vector<double>(m.config().recurrent_size(), 0.0), x,
                              std::vector<double>{0.1, -0.4, 1.0});
  REQUIRE(roll.size() == 3);
  for (const auto& s : roll) CHECK(s.predicted.mean == x);
  CHECK(m.imagine(h, x, std::vector<double>{}).empty());
  CHECK_THROWS_AS(m.transition_step(std::vector<double>(3, 0.0), x, a), StructuralError);
}

TEST_CASE("recurrent size follows the planning horizon") {
  WorldModelConfig cfg;
  cfg.horizon = 15;
  WorldModel m(cfg, 6);
  CHECK(m.config().recurrent_size() == 60);
  CHECK(m.initial_belief().h.size() == 60);
  CHECK(m.initial_belief().latent.dim() == 2);
}

TEST_CASE("vae loss with a perfect, prior-matching posterior") {
  // Zero encoder weights give posterior N(0, softplus(0) + std_min); rescale so it is N(0, 1).
  WorldModel m(WorldModelConfig{}, 7);
  for (nn::Parameter* p : m.vae_parameters()) std::fill(p->value.data.begin(), p->value.data.end(), 0.0);
  m.encoder().std_head.bias.value.data = {std::log(std::exp(1.0 - m.config().std_min) - 1.0),
                                          std::log(std::exp(1.0 - m.config().std_min) - 1.0)};
  const std::vector<double> y{0.0, 0.0};
  const DiagGaussian q = m.encode(y);
  CHECK(q.std[0] == doctest::Approx(1.0).epsilon(1e-12));
  const double loss = m.vae_loss(y, std::vector<double>{0.4, -1.2});
  const DiagGaussian decoded = m.decode(std::vector<double>{0.0, 0.0});
  CHECK(loss == doctest::Approx(-log_likelihood(decoded, y)).epsilon(1e-10));
}

TEST_CASE("transition loss examples") {
  const DiagGaussian p({0.1, 0.2}, {0.3, 0.4});
  CHECK(WorldModel::transition_loss(p, p) == 0.0);

  WorldModel m(WorldModelConfig{}, 8);
  const std::vector<double> h(m.config().recurrent_size(), 0.1), x{0.2, -0.1}, a{0.7};
  const DiagGaussian posterior({0.5, 0.5}, {0.2, 0.2});
  auto params = m.transition_parameters();
  nn::Adam opt(params, nn::AdamConfig{1e-2});
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 50; ++i) {
    double loss = 0.0;
    const auto g = m.transition_gradients(h, x, a, posterior, &loss);
    if (i == 0) first = loss;
    last = loss;
    opt.step(g);
  }
  CHECK(last < first);
}

TEST_CASE("world model gradients match finite differences") {
  std::mt19937_64 rng(9);
  WorldModelConfig cfg;
  cfg.horizon = 2;
  WorldModel m(cfg, 10);
  for (int trial = 0; trial < 3; ++trial) {
    const auto y = uniform_vector(rng, 2, -1, 1), noise = uniform_vector(rng, 2, -1, 1);
    auto vae = m.vae_parameters();
    const auto g = m.vae_gradients(y, noise);
    CHECK(aif::testing::worst_fd_error(vae, g, [&] { return m.vae_loss(y, noise); }, 1e-7) <= 1e-4);

    const auto h = uniform_vector(rng, cfg.recurrent_size(), -0.5, 0.5), x = uniform_vector(rng, 2, -1, 1),
               a = uniform_vector(rng, 1, -1, 1);
    const DiagGaussian post(uniform_vector(rng, 2, -1, 1), uniform_vector(rng, 2, 0.1, 1.0));
    auto tp = m.transition_parameters();
    const auto tg = m.transition_gradients(h, x, a, post);
    CHECK(aif::testing::worst_fd_error(
              tp, tg, [&] { return WorldModel::transition_loss(m.transition_step(h, x, a).predicted, post); }, 1e-7) <=
          1e-4);
  }
}

TEST_CASE("perceive boundary rule and metrics") {
  WorldModel m(WorldModelConfig{}, 11);
  std::mt19937_64 rng(12);
  AgentBelief b = m.initial_belief();
  const double a0 = 0.0;
  Perception p = m.perceive(b, std::vector<double>{-0.4, 0.0}, std::span<const double>(&a0, 1), rng);
  CHECK_FALSE(p.metrics.has_prediction);
  CHECK(p.metrics.vfe_capsule == 0.0);
  CHECK(p.metrics.transition_kl == 0.0);
  CHECK_FALSE(p.predicted.has_value());
  CHECK(b.has_history);
  for (double v : b.h) CHECK(v == 0.0);

  const double a1 = 0.5;
  p = m.perceive(b, std::vector<double>{-0.39, 0.05}, std::span<const double>(&a1, 1), rng);
  CHECK(p.metrics.has_prediction);
  CHECK(p.predicted.has_value());
  CHECK(std::isfinite(p.metrics.vfe_capsule));
  CHECK(p.metrics.transition_kl >= 0.0);

  const auto before = snapshot(m);
  AgentBelief copy = b;
  CHECK_THROWS_AS(m.perceive(copy, std::vector<double>{std::nan(""), 0.0}, std::span<const double>(&a1, 1), rng),
                  InputError);
  CHECK(snapshot(m) == before);
}

TEST_CASE("perceive with zero learning rates leaves parameters unchanged") {
  WorldModelConfig cfg;
  cfg.vae_learning_rate = 0.0;
  cfg.transition_learning_rate = 0.0;
  WorldModel m(cfg, 13);
  const auto before = snapshot(m);
  std::mt19937_64 rng(14);
  AgentBelief b = m.initial_belief();
  for (int t = 0; t < 10; ++t) {
    const double a = 0.1 * t;
    m.perceive(b, std::vector<double>{-0.4 + 0.01 * t, 0.02 * t}, std::span<const double>(&a, 1), rng);
  }
  CHECK(snapshot(m) == before);
}

TEST_CASE("online training trends") {
  WorldModel m(WorldModelConfig{}, 15);
  std::mt19937_64 rng(16);
  const std::vector<double> y{0.3, -0.2};
  const double a = 0.0;

  // encoder drift on a fixed observation shrinks
  std::vector<double> prev = m.encode(y).mean;
  double early = 0.0, late = 0.0;
  for (int t = 0; t < 3000; ++t) {
    AgentBelief b = m.initial_belief();
    m.perceive(b, y, std::span<const double>(&a, 1), rng);
    const auto cur = m.encode(y).mean;
    const double drift = std::hypot(cur[0] - prev[0], cur[1] - prev[1]);
    if (t < 100) early += drift;
    if (t >= 2900) late += drift;
    prev = cur;
  }
  CHECK(late < early);

  // capsule free energy on a constant trajectory trends down
  WorldModel m2(WorldModelConfig{}, 17);
  std::vector<double> vfe;
  AgentBelief b = m2.initial_belief();
  for (int t = 0; t < 1500; ++t) {
    const Perception p = m2.perceive(b, y, std::span<const double>(&a, 1), rng);
    CHECK(std::isfinite(p.metrics.vfe_capsule));
    CHECK(std::isfinite(p.metrics.vae_loss));
    if (p.metrics.has_prediction) vfe.push_back(p.metrics.vfe_capsule);
  }
  auto avg = [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += vfe[i];
    return s / static_cast<double>(hi - lo);
  };
  CHECK(avg(vfe.size() - 200, vfe.size()) < avg(0, 200));
}

TEST_CASE("copied world models train independently") {
  WorldModel a(WorldModelConfig{}, 18);
  WorldModel b = a;
  std::mt19937_64 rng(19);
  AgentBelief belief = b.initial_belief();
  const double act = 0.0;
  b.perceive(belief, std::vector<double>{0.1, 0.1}, std::span<const double>(&act, 1), rng);
  CHECK(snapshot(a) != snapshot(b));
  WorldModel c(WorldModelConfig{}, 18);
  CHECK(snapshot(a) == snapshot(c));
}

TEST_CASE("world model checkpoint round trip") {
  WorldModel a(WorldModelConfig{}, 20), b(WorldModelConfig{}, 21);
  nn::Checkpoint ck;
  a.save(ck);
  b.load(nn::Checkpoint::deserialize(ck.serialize()));
  CHECK(snapshot(a) == snapshot(b));
}
