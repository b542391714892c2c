#pragma once

// Two convolutions, each followed by a LIF stage, unrolled over a few time
// steps. The library version runs on the tape; the double version is an
// independent re-derivation used for finite differences.

#include <vector>

#include "oracles.hpp"
#include "snn/lif.hpp"
#include "snn/ops.hpp"
#include "snn/tape.hpp"

namespace toy {

struct Net {
  snn::Tensor x, w1, b1, w2, b2;
  std::vector<snn::Tensor> readout;  // per step, shaped like the second LIF output
  int steps = 3;
  snn::LifParams lif;

  std::vector<snn::Tensor*> params() { return {&w1, &b1, &w2, &b2}; }
};

inline Net make(std::uint64_t seed) {
  snn::Rng rng(seed);
  Net n;
  n.x = oracle::random_tensor({1, 2, 5, 5}, rng, 0.0f, 1.0f);
  n.w1 = oracle::random_tensor({3, 2, 3, 3}, rng, -0.5f, 0.5f);
  n.b1 = oracle::random_tensor({3}, rng, 0.2f, 0.8f);
  n.w2 = oracle::random_tensor({2, 3, 3, 3}, rng, -0.5f, 0.5f);
  n.b2 = oracle::random_tensor({2}, rng, 0.5f, 1.0f);
  for (int t = 0; t < n.steps; ++t) n.readout.push_back(oracle::random_tensor({1, 2, 5, 5}, rng));
  for (auto* p : n.params()) p->set_requires_grad(true);
  return n;
}

inline snn::Tensor loss(snn::Tape& tape, Net& n, snn::SpikeMode mode) {
  snn::Tensor cur1 = snn::conv2d(tape, n.x, n.w1, n.b1, 1, 1, "toy.conv1");
  snn::LifState s1, s2;
  snn::Tensor total;
  for (int t = 0; t < n.steps; ++t) {
    snn::Tensor a = snn::lif_step(tape, s1, cur1, n.lif, mode, "toy.lif1");
    snn::Tensor cur2 = snn::conv2d(tape, a, n.w2, n.b2, 1, 1, "toy.conv2");
    snn::Tensor b = snn::lif_step(tape, s2, cur2, n.lif, mode, "toy.lif2");
    snn::Tensor l = snn::sum(tape, snn::mul(tape, b, n.readout[t]));
    total = total.defined() ? snn::add(tape, total, l) : l;
  }
  return total;
}

struct Params {
  std::vector<double> w1, b1, w2, b2;
};

inline Params widen(const Net& n) {
  return {oracle::widen(n.w1.data()), oracle::widen(n.b1.data()), oracle::widen(n.w2.data()),
          oracle::widen(n.b2.data())};
}

// Soft-spike forward in double.
inline double loss_double(const Net& n, const Params& p) {
  const auto& L = n.lif;
  const oracle::Conv c1{1, 2, 5, 5, 3, 3, 1, 1}, c2{1, 3, 5, 5, 2, 3, 1, 1};
  const auto cur1 = oracle::conv2d(c1, oracle::widen(n.x.data()), p.w1, p.b1);
  std::vector<double> v1(cur1.size(), L.v_rest), v2(2 * 25, L.v_rest);
  auto step = [&](std::vector<double>& v, const std::vector<double>& cur) {
    std::vector<double> s(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double h = v[i] + (-(v[i] - L.v_rest) + double(L.resistance) * cur[i]) / L.tau;
      if (L.leak_enabled) h *= 1.0 - L.leak_factor;
      s[i] = oracle::arctan_spike(h - L.v_th, L.alpha);
      v[i] = h * (1.0 - s[i]) + L.v_reset * s[i];
    }
    return s;
  };
  double total = 0.0;
  for (int t = 0; t < n.steps; ++t) {
    const auto a = step(v1, cur1);
    const auto cur2 = oracle::conv2d(c2, a, p.w2, p.b2);
    const auto b = step(v2, cur2);
    for (std::size_t i = 0; i < b.size(); ++i) total += b[i] * n.readout[t][i];
  }
  return total;
}

struct GradCheck {
  double max_rel = 0.0;
  std::size_t checked = 0;
};

// Central differences (step h) of the double forward against the tape's
// gradients; relative error uses max(|analytic|, 1e-6).
inline GradCheck check(std::uint64_t seed, double h = 1e-3) {
  Net n = make(seed);
  snn::Tape tape;
  snn::Tensor l = loss(tape, n, snn::SpikeMode::soft);
  snn::backward(tape, l);
  const Params base = widen(n);
  GradCheck out;
  std::vector<double> Params::*fields[] = {&Params::w1, &Params::b1, &Params::w2, &Params::b2};
  auto tensors = n.params();
  for (std::size_t f = 0; f < 4; ++f) {
    const auto g = tensors[f]->grad();
    for (std::size_t i = 0; i < g.size(); ++i) {
      Params plus = base, minus = base;
      (plus.*fields[f])[i] += h;
      (minus.*fields[f])[i] -= h;
      const double fd = (loss_double(n, plus) - loss_double(n, minus)) / (2 * h);
      const double rel = std::abs(fd - g[i]) / std::max(std::abs(double(g[i])), 1e-6);
      out.max_rel = std::max(out.max_rel, rel);
      ++out.checked;
    }
  }
  return out;
}

}  // namespace toy
