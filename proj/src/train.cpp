#include "snn/train.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "snn/random.hpp"

namespace snn {

std::string_view to_string(GaMode mode) {
  return mode == GaMode::monitor ? "monitor" : "exact";
}

GaMode parse_ga_mode(std::string_view text) {
  if (text == "monitor") return GaMode::monitor;
  if (text == "exact") return GaMode::exact;
  throw std::invalid_argument("unknown ga_mode '" + std::string(text) +
                              "' (expected monitor or exact)");
}

std::string_view to_string(CeAveraging mode) {
  return mode == CeAveraging::logits ? "logits" : "probabilities";
}

CeAveraging parse_ce_averaging(std::string_view text) {
  if (text == "logits") return CeAveraging::logits;
  if (text == "probabilities") return CeAveraging::probabilities;
  throw std::invalid_argument("unknown ce_averaging '" + std::string(text) +
                              "' (expected logits or probabilities)");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0f)) throw std::invalid_argument("train: lr must be > 0");
  if (!(decay_factor > 0.0f && decay_factor < 1.0f)) {
    throw std::invalid_argument("train: decay_factor must lie in (0, 1)");
  }
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("train: max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("train: patience must be >= 1");
  if (time_steps < 1) throw std::invalid_argument("train: time_steps must be >= 1");
  if (!(lambda >= 0.0f)) throw std::invalid_argument("train: lambda must be >= 0");
  if (!(epsilon > 0.0f)) throw std::invalid_argument("train: epsilon must be > 0");
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    throw std::invalid_argument("train: val_fraction must lie in [0, 1)");
  }
}

// Losses -------------------------------------------------------------------------------

Tensor ce_loss_over_time(Tape& tape, std::span<const Tensor> logits,
                         std::span<const int> labels, CeAveraging averaging) {
  if (logits.empty()) throw std::invalid_argument("ce_loss_over_time: no time steps");
  const std::size_t n = logits[0].dim(0), c = logits[0].dim(1);
  if (labels.size() != n) {
    throw std::invalid_argument("ce_loss_over_time: " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(n));
  }
  for (const auto& l : logits) {
    if (l.shape() != logits[0].shape()) {
      throw std::invalid_argument("ce_loss_over_time: logits shape changes over time");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c) {
      throw std::invalid_argument("ce_loss_over_time: label " + std::to_string(labels[i]) +
                                  " out of range [0, " + std::to_string(c) + ")");
    }
  }
  const std::size_t steps = logits.size();
  const double inv_t = 1.0 / double(steps);

  // dL/dz for every step, filled alongside the loss.
  std::vector<std::vector<float>> dz(steps, std::vector<float>(n * c));
  std::vector<double> p(c);
  double loss = 0.0;

  auto softmax = [&](auto logit_at, std::vector<double>& out) {
    double mx = -INFINITY;
    for (std::size_t k = 0; k < c; ++k) mx = std::max(mx, logit_at(k));
    double z = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      out[k] = std::exp(logit_at(k) - mx);
      z += out[k];
    }
    for (auto& v : out) v /= z;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const auto y = static_cast<std::size_t>(labels[i]);
    if (averaging == CeAveraging::logits) {
      softmax(
          [&](std::size_t k) {
            double s = 0.0;
            for (const auto& l : logits) s += l[i * c + k];
            return s * inv_t;
          },
          p);
      loss -= std::log(std::max(p[y], 1e-300));
      for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t k = 0; k < c; ++k)
          dz[t][i * c + k] =
              static_cast<float>((p[k] - (k == y ? 1.0 : 0.0)) * inv_t / double(n));
    } else {
      std::vector<std::vector<double>> pt(steps, std::vector<double>(c));
      double mean_y = 0.0;
      for (std::size_t t = 0; t < steps; ++t) {
        softmax([&](std::size_t k) { return double(logits[t][i * c + k]); }, pt[t]);
        mean_y += pt[t][y] * inv_t;
      }
      loss -= std::log(std::max(mean_y, 1e-300));
      for (std::size_t t = 0; t < steps; ++t)
        for (std::size_t k = 0; k < c; ++k)
          dz[t][i * c + k] = static_cast<float>(-inv_t / mean_y * pt[t][y] *
                                                ((k == y ? 1.0 : 0.0) - pt[t][k]) / double(n));
    }
  }
  Tensor out = Tensor::scalar(static_cast<float>(loss / double(n)));

  bool any = false;
  for (const auto& l : logits) any = any || tape.wants({&l});
  if (any) {
    std::vector<Tensor> ins(logits.begin(), logits.end());
    tape.record("cross_entropy", ins, out, [=]() mutable {
      const float g = out.grad()[0];
      for (std::size_t t = 0; t < ins.size(); ++t) {
        if (!ins[t].requires_grad()) continue;
        auto d = ins[t].grad();
        for (std::size_t k = 0; k < d.size(); ++k) d[k] += g * dz[t][k];
      }
    });
  }
  return out;
}

float ga_loss(std::span<const float> grad_norms, float lambda, float epsilon) {
  float s = 0.0f;
  for (float g : grad_norms) {
    if (g < 0.0f) throw std::invalid_argument("ga_loss: negative gradient norm");
    s += 1.0f - g / (g + epsilon);
  }
  return lambda * s;
}

float total_loss(float ce, float ga) { return ce + ga; }

// Optimiser and schedule ------------------------------------------------------------------

void adam_step(std::span<Tensor> params, AdamState& st, float lr) {
  if (st.m.size() != params.size()) {
    st.m.assign(params.size(), {});
    st.v.assign(params.size(), {});
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.m[i].assign(params[i].numel(), 0.0f);
      st.v[i].assign(params[i].numel(), 0.0f);
    }
  }
  for (auto& p : params) {
    if (!p.has_grad()) continue;
    for (float g : p.grad()) {
      if (std::isnan(g)) throw std::runtime_error("NaN gradient in '" + p.name() + "'");
    }
  }
  ++st.step;
  const float bc1 = 1.0f - std::pow(st.beta1, float(st.step));
  const float bc2 = 1.0f - std::pow(st.beta2, float(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    if (p.numel() != st.m[i].size()) {
      throw std::invalid_argument("adam_step: parameter '" + p.name() + "' changed shape");
    }
    if (!p.has_grad()) continue;
    auto w = p.data();
    auto g = p.grad();
    auto& m = st.m[i];
    auto& v = st.v[i];
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = st.beta1 * m[k] + (1.0f - st.beta1) * g[k];
      v[k] = st.beta2 * v[k] + (1.0f - st.beta2) * g[k] * g[k];
      const float mh = m[k] / bc1;
      const float vh = v[k] / bc2;
      w[k] -= lr * mh / (std::sqrt(vh) + st.eps);
    }
  }
}

float lr_at_epoch(int epoch, const TrainConfig& config) {
  if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch");
  float lr = config.lr;
  for (int e : config.decay_epochs)
    if (e <= epoch) lr *= config.decay_factor;
  return lr;
}

bool early_stop_check(std::span<const double> history, int patience) {
  if (history.empty()) return false;
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i)
    if (history[i] > history[best]) best = i;
  return history.size() - 1 - best >= static_cast<std::size_t>(patience);
}

std::vector<GradNorm> log_grad_norms(const Network& net) {
  std::vector<GradNorm> out;
  for (const auto& l : net.layers()) {
    if (!l.weight.has_grad()) {
      throw std::logic_error("log_grad_norms: layer '" + l.name +
                             "' has no gradient; run backward first");
    }
    double s = 0.0;
    for (float g : std::as_const(l.weight).grad()) s += double(g) * double(g);
    out.push_back({l.name, static_cast<float>(std::sqrt(s))});
  }
  return out;
}

// Gradients of the full objective ---------------------------------------------------------

namespace {

float l2(std::span<const float> v) {
  double s = 0.0;
  for (float x : v) s += double(x) * double(x);
  return static_cast<float>(std::sqrt(s));
}

std::vector<std::vector<float>> snapshot_grads(std::span<Tensor> params) {
  std::vector<std::vector<float>> out;
  for (auto& p : params) {
    auto g = p.grad();
    out.emplace_back(g.begin(), g.end());
  }
  return out;
}

float ce_gradients(const std::function<Tensor(Tape&)>& ce_fn, std::span<Tensor> params) {
  for (auto& p : params) p.zero_grad();
  Tape tape;
  Tensor loss = ce_fn(tape);
  backward(tape, loss);
  return loss.item();
}

}  // namespace

LossBreakdown compute_gradients(const std::function<Tensor(Tape&)>& ce_fn,
                                std::span<Tensor> params, std::span<Tensor> weights,
                                std::span<const std::string> names,
                                const TrainConfig& config) {
  LossBreakdown out;
  out.ce = ce_gradients(ce_fn, params);
  std::vector<float> norms;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    norms.push_back(l2(std::as_const(weights[l]).grad()));
    out.per_layer_grad_norms.push_back({l < names.size() ? names[l] : weights[l].name(),
                                        norms.back()});
  }
  out.ga = ga_loss(norms, config.lambda, config.epsilon);
  out.total = total_loss(out.ce, out.ga);
  if (config.ga_mode == GaMode::monitor || config.lambda == 0.0f) return out;

  // grad L_GA = H u with u_l = c_l * grad_l L_CE on each weight tensor and
  // c_l = -lambda * eps / ((g_l + eps)^2 g_l). H u by central difference of
  // the CE gradient along u.
  const auto base = snapshot_grads(params);
  std::vector<std::vector<float>> direction(params.size());
  double u_max = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    direction[i].assign(params[i].numel(), 0.0f);
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (!params[i].same_storage(weights[l]) || norms[l] == 0.0f) continue;
      const double g = norms[l], eps = config.epsilon;
      const double coef = -double(config.lambda) * eps / ((g + eps) * (g + eps) * g);
      for (std::size_t k = 0; k < base[i].size(); ++k) {
        direction[i][k] = static_cast<float>(coef * base[i][k]);
        u_max = std::max(u_max, std::abs(double(direction[i][k])));
      }
    }
  }
  if (u_max == 0.0) return out;
  const double h = 1e-3 / u_max;

  std::vector<std::vector<float>> saved;
  for (auto& p : params) saved.emplace_back(p.data().begin(), p.data().end());
  auto shift = [&](double sign) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].data();
      for (std::size_t k = 0; k < w.size(); ++k)
        w[k] = static_cast<float>(saved[i][k] + sign * h * direction[i][k]);
    }
  };
  shift(+1.0);
  ce_gradients(ce_fn, params);
  const auto plus = snapshot_grads(params);
  shift(-1.0);
  ce_gradients(ce_fn, params);
  const auto minus = snapshot_grads(params);
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::copy(saved[i].begin(), saved[i].end(), params[i].data().begin());
    auto g = params[i].grad();
    for (std::size_t k = 0; k < g.size(); ++k)
      g[k] = static_cast<float>(base[i][k] + (double(plus[i][k]) - minus[i][k]) / (2.0 * h));
  }
  return out;
}

// Trainer -------------------------------------------------------------------------------

Trainer::Trainer(Network& net, TrainConfig config, ForwardOptions forward)
    : net_(net), config_(std::move(config)), forward_(std::move(forward)) {
  config_.validate();
  forward_.time_steps = config_.time_steps;
}

LossBreakdown Trainer::train_step(const Tensor& images, std::span<const int> labels,
                                  float lr, std::vector<int>* predictions,
                                  double* firing_rate) {
  auto params = net_.parameters();
  std::vector<Tensor> weights;
  std::vector<std::string> names;
  for (const auto& l : net_.layers()) {
    weights.push_back(l.weight);
    names.push_back(l.name);
  }
  bool first_pass = true;
  auto ce_fn = [&](Tape& tape) {
    auto fwd = net_.forward(tape, images, forward_);
    if (first_pass) {
      if (predictions) *predictions = predict(fwd);
      if (firing_rate) *firing_rate = fwd.firing_rate();
      first_pass = false;
    }
    return ce_loss_over_time(tape, fwd.logits, labels, config_.ce_averaging);
  };
  auto breakdown = compute_gradients(ce_fn, params, weights, names, config_);
  adam_step(params, adam_, lr);
  return breakdown;
}

double accuracy(const Network& net, const Dataset& data, const ForwardOptions& forward,
                int batch_size, std::vector<int>* predictions) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  if (predictions) predictions->clear();
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + std::size_t(batch_size));
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < end; ++i) idx.push_back(i);
    Tape tape(false);
    const auto preds = predict(net.forward(tape, data.gather(idx), forward));
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (preds[i] == data.labels[start + i]) ++correct;
      if (predictions) predictions->push_back(preds[i]);
    }
  }
  return double(correct) / double(data.size());
}

TrainResult Trainer::fit(const Dataset& train, const Dataset& val,
                         const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.size() == 0) throw std::invalid_argument("fit: empty training set");
  TrainResult result;
  Rng rng(config_.seed);
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<double> val_history;

  for (int epoch = 0; epoch < config_.max_epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.lr = lr_at_epoch(epoch, config_);
    rng.shuffle(std::span<std::size_t>(order));

    std::size_t seen = 0, correct = 0, batches = 0;
    double spikes_weighted = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
      const std::size_t end = std::min(order.size(), start + std::size_t(config_.batch_size));
      std::span<const std::size_t> idx(order.data() + start, end - start);
      std::vector<int> labels;
      for (auto i : idx) labels.push_back(train.labels[i]);
      std::vector<int> preds;
      double rate = 0.0;
      auto br = train_step(train.gather(idx), labels, log.lr, &preds, &rate);
      for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
      const double w = double(idx.size());
      seen += idx.size();
      log.ce += br.ce * w;
      log.ga += br.ga * w;
      log.train_loss += br.total * w;
      spikes_weighted += rate * w;
      if (log.grad_norms.empty()) {
        log.grad_norms = br.per_layer_grad_norms;
      } else {
        for (std::size_t l = 0; l < log.grad_norms.size(); ++l)
          log.grad_norms[l].norm += br.per_layer_grad_norms[l].norm;
      }
      ++batches;
    }
    log.ce /= double(seen);
    log.ga /= double(seen);
    log.train_loss /= double(seen);
    log.firing_rate = spikes_weighted / double(seen);
    for (auto& g : log.grad_norms) g.norm /= static_cast<float>(batches);
    log.train_acc = double(correct) / double(seen);
    log.val_acc = val.size() ? accuracy(net_, val, forward_) : log.train_acc;

    result.history.push_back(log);
    val_history.push_back(log.val_acc);
    if (log.val_acc > result.best_val_acc || epoch == 0) {
      result.best_val_acc = log.val_acc;
      result.best_epoch = epoch;
    }
    if (on_epoch) on_epoch(log);

    if (config_.target_train_acc > 0.0 && log.train_acc >= config_.target_train_acc) {
      result.stop_reason = "target-reached";
      return result;
    }
    if (early_stop_check(val_history, config_.patience)) {
      result.stop_reason = "early-stop";
      return result;
    }
  }
  result.stop_reason = "max-epochs";
  return result;
}

}  // namespace snn
