#include "snn/lif.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace snn {

void LifParams::validate() const {
  if (!(tau > 0.0f)) throw std::invalid_argument("lif: tau must be > 0");
  if (!(v_th > v_reset)) throw std::invalid_argument("lif: v_th must exceed v_reset");
  if (!(alpha > 0.0f)) throw std::invalid_argument("lif: alpha must be > 0");
  if (leak_enabled && !(leak_factor >= 0.0f && leak_factor < 1.0f)) {
    throw std::invalid_argument("lif: leak_factor must lie in [0, 1)");
  }
}

float surrogate_derivative(float u, float alpha) {
  const float z = std::numbers::pi_v<float> * alpha * u / 2.0f;
  return alpha / 2.0f / (1.0f + z * z);
}

float soft_spike(float u, float alpha) {
  return std::atan(std::numbers::pi_v<float> * alpha * u / 2.0f) /
             std::numbers::pi_v<float> +
         0.5f;
}

void reset_state(LifState& state, const LifParams& params) {
  if (state.v.defined()) {
    state.v = Tensor(state.v.shape(), params.v_rest);
  }
  state.t = 0;
}

Tensor spike(Tape& tape, const Tensor& v, const LifParams& params, SpikeMode mode,
             const std::string& label) {
  Tensor out(v.shape());
  auto x = v.data();
  auto s = out.data();
  const float th = params.v_th, alpha = params.alpha;
  if (mode == SpikeMode::heaviside) {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = x[i] >= th ? 1.0f : 0.0f;
  } else {
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = soft_spike(x[i] - th, alpha);
  }
  if (tape.wants({&v})) {
    tape.record(label, {v}, out, [=]() mutable {
      auto dy = out.grad();
      auto dx = v.grad();
      auto xv = v.data();
      for (std::size_t i = 0; i < dx.size(); ++i)
        dx[i] += dy[i] * surrogate_derivative(xv[i] - th, alpha);
    });
  }
  return out;
}

namespace {

// v + (-(v - v_rest) + R I) / tau, optionally scaled by (1 - leak).
Tensor charge(Tape& tape, const Tensor& v, const Tensor& current, const LifParams& p,
              const std::string& label) {
  const float keep = p.leak_enabled ? 1.0f - p.leak_factor : 1.0f;
  Tensor out(current.shape());
  auto y = out.data();
  auto vv = v.data();
  auto ii = current.data();
  for (std::size_t k = 0; k < y.size(); ++k) {
    float h = vv[k] + (-(vv[k] - p.v_rest) + p.resistance * ii[k]) / p.tau;
    if (p.leak_enabled) h *= keep;
    y[k] = h;
  }
  if (tape.wants({&v, &current})) {
    const float dv = (1.0f - 1.0f / p.tau) * keep;
    const float di = p.resistance / p.tau * keep;
    tape.record(label, {v, current}, out, [=]() mutable {
      auto dy = out.grad();
      if (v.requires_grad()) {
        auto g = v.grad();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += dy[k] * dv;
      }
      if (current.requires_grad()) {
        auto g = current.grad();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += dy[k] * di;
      }
    });
  }
  return out;
}

// v_pre (1 - s) + v_reset s; exact hard reset for binary s.
Tensor hard_reset(Tape& tape, const Tensor& v_pre, const Tensor& s, float v_reset,
                  const std::string& label) {
  Tensor out(v_pre.shape());
  auto y = out.data();
  for (std::size_t k = 0; k < y.size(); ++k)
    y[k] = v_pre[k] * (1.0f - s[k]) + v_reset * s[k];
  if (tape.wants({&v_pre, &s})) {
    tape.record(label, {v_pre, s}, out, [=]() mutable {
      auto dy = out.grad();
      if (v_pre.requires_grad()) {
        auto g = v_pre.grad();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += dy[k] * (1.0f - s[k]);
      }
      if (s.requires_grad()) {
        auto g = s.grad();
        for (std::size_t k = 0; k < g.size(); ++k) g[k] += dy[k] * (v_reset - v_pre[k]);
      }
    });
  }
  return out;
}

}  // namespace

Tensor lif_step(Tape& tape, LifState& state, const Tensor& current,
                const LifParams& params, SpikeMode mode, const std::string& layer) {
  if (!all_finite(current.data())) {
    throw std::invalid_argument("lif_step: non-finite input current in layer '" +
                                layer + "'");
  }
  if (!state.v.defined()) {
    state.v = Tensor(current.shape(), params.v_rest);
  } else if (state.v.shape() != current.shape()) {
    throw std::invalid_argument("lif_step: layer '" + layer + "' state " +
                                to_string(state.v.shape()) + " vs current " +
                                to_string(current.shape()));
  }
  Tensor v_pre = charge(tape, state.v, current, params, layer + ".charge");
  Tensor s = spike(tape, v_pre, params, mode, layer + ".spike");
  state.v = hard_reset(tape, v_pre, s, params.v_reset, layer + ".reset");
  ++state.t;
  return s;
}

Tensor lif_step(LifState& state, const Tensor& current, const LifParams& params) {
  Tape tape(false);
  return lif_step(tape, state, current, params);
}

}  // namespace snn
