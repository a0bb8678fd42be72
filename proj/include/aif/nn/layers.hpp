#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "aif/nn/tape.hpp"

namespace aif::nn {

/// Fully connected layer: activation(W·x + b).
class DenseLayer {
 public:
  DenseLayer() = default;
  DenseLayer(const std::string& name, std::size_t in, std::size_t out, Activation act);

  /// Weights ~ U(-1/sqrt(in), 1/sqrt(in)); bias zero.
  void init_uniform(std::mt19937_64& rng);

  Var forward(Tape& tape, Var x) const;
  /// Untraced forward for one sample; same operation order as forward().
  void apply(std::span<const double> x, std::span<double> out) const;
  std::vector<double> apply(std::span<const double> x) const;

  std::size_t in_size() const { return in_; }
  std::size_t out_size() const { return out_; }
  Activation activation() const { return act_; }

  std::vector<Parameter*> parameters() { return {&weight, &bias}; }
  std::vector<const Parameter*> parameters() const { return {&weight, &bias}; }

  Parameter weight;  // [out x in]
  Parameter bias;    // [out]

 private:
  std::size_t in_ = 0;
  std::size_t out_ = 0;
  Activation act_ = Activation::Identity;
};

/// Gated recurrent unit, update-gate-mixes-candidate form:
///   z = σ(Wz·x + Uz·h + bz),  r = σ(Wr·x + Ur·h + br)
///   c = tanh(Wc·x + Uc·(r⊙h) + bc)
///   h' = (1 − z)⊙h + z⊙c
class GruCell {
 public:
  struct Gate {
    Parameter w_input;   // [hidden x input]
    Parameter w_hidden;  // [hidden x hidden]
    Parameter bias;      // [hidden]
  };

  GruCell() = default;
  GruCell(const std::string& name, std::size_t input, std::size_t hidden);

  /// Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) with fan_in = input + hidden; biases zero.
  void init_uniform(std::mt19937_64& rng);

  Var forward(Tape& tape, Var h_prev, Var x) const;
  void apply(std::span<const double> h_prev, std::span<const double> x, std::span<double> h_next) const;

  std::size_t input_size() const { return input_; }
  std::size_t hidden_size() const { return hidden_; }

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  Gate update;
  Gate reset;
  Gate candidate;

 private:
  std::size_t input_ = 0;
  std::size_t hidden_ = 0;
};

}  // namespace aif::nn
