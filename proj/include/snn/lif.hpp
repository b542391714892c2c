#pragma once

#include <string>

#include "snn/tape.hpp"
#include "snn/tensor.hpp"

namespace snn {

// Leaky integrate-and-fire constants. Time is measured in simulation steps.
struct LifParams {
  float tau = 2.0f;
  float v_th = 1.0f;
  float v_rest = 0.0f;
  float v_reset = 0.0f;
  float resistance = 1.0f;
  // Extra multiplicative decay applied after integration, off by default.
  bool leak_enabled = false;
  float leak_factor = 0.1f;
  // Steepness of the arctan surrogate.
  float alpha = 2.0f;

  void validate() const;
};

// heaviside: binary spikes forward, arctan surrogate backward.
// soft: the arctan sigmoid forward, whose exact derivative is the surrogate;
// only used to check gradients against finite differences.
enum class SpikeMode { heaviside, soft };

// (alpha/2) / (1 + (pi*alpha*u/2)^2)
float surrogate_derivative(float u, float alpha);
// atan(pi*alpha*u/2)/pi + 1/2
float soft_spike(float u, float alpha);

struct LifState {
  Tensor v;
  int t = 0;
};

void reset_state(LifState& state, const LifParams& params);

// Spike op s = H(v - v_th) with the surrogate registered as its backward rule.
Tensor spike(Tape& tape, const Tensor& v, const LifParams& params, SpikeMode mode,
             const std::string& label = "spike");

// One explicit-Euler step (dt = 1) of tau dV/dt = -(V - V_rest) + R I, then
// threshold and hard reset. An undefined state.v is initialised to v_rest with
// the current's shape. Returns the spike tensor; state.v holds the post-reset
// potential.
Tensor lif_step(Tape& tape, LifState& state, const Tensor& current,
                const LifParams& params, SpikeMode mode = SpikeMode::heaviside,
                const std::string& layer = "lif");

// Untaped convenience overload.
Tensor lif_step(LifState& state, const Tensor& current, const LifParams& params);

}  // namespace snn
