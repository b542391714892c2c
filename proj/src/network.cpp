#include "snn/network.hpp"

#include <cmath>
#include <stdexcept>

#include "snn/ops.hpp"
#include "snn/random.hpp"

namespace snn {

namespace {

constexpr std::size_t kPoolKernel = 3;
constexpr std::size_t kPoolStride = 2;

ConvLayer make_conv(std::string name, LayerRole role, std::size_t in, std::size_t out,
                    std::size_t kernel, std::size_t stride, std::size_t padding,
                    Rng& rng, float gain) {
  ConvLayer layer;
  layer.name = std::move(name);
  layer.role = role;
  layer.stride = stride;
  layer.padding = padding;
  const float bound = gain / std::sqrt(static_cast<float>(in * kernel * kernel));
  layer.weight = Tensor(Shape{out, in, kernel, kernel}, 0.0f, true);
  for (float& w : layer.weight.data()) w = rng.uniform(-bound, bound);
  layer.bias = Tensor(Shape{out}, 0.0f, true);
  for (float& b : layer.bias.data()) b = rng.uniform(-bound, bound);
  layer.weight.set_name(layer.name + ".weight");
  layer.bias.set_name(layer.name + ".bias");
  return layer;
}

}  // namespace

std::string_view to_string(LayerRole role) {
  switch (role) {
    case LayerRole::stem: return "stem";
    case LayerRole::squeeze: return "squeeze";
    case LayerRole::expand1: return "expand1x1";
    case LayerRole::expand3: return "expand3x3";
    case LayerRole::classifier: return "classifier";
  }
  return "?";
}

double ForwardResult::firing_rate() const {
  double spikes = 0.0, slots = 0.0;
  for (const auto& a : activity) {
    spikes += a.spikes;
    slots += a.neuron_steps;
  }
  return slots > 0.0 ? spikes / slots : 0.0;
}

float default_init_gain(NetMode mode) {
  return mode == NetMode::snn ? 4.0f : std::sqrt(6.0f);
}

Network Network::build(const ArchSpec& spec, std::uint64_t seed,
                       std::optional<float> gain) {
  const float init_gain = gain.value_or(default_init_gain(spec.mode));
  spec.validate();
  Network net;
  net.spec_ = spec;
  Rng rng(seed);
  const auto plan = rewire(spec);

  net.layers_.push_back(make_conv("conv1", LayerRole::stem, spec.in_channels,
                                  spec.conv1.filters, spec.conv1.kernel,
                                  spec.conv1.stride, spec.conv1.padding, rng, init_gain));
  int position = 0;
  for (const auto& fc : plan.fires) {
    ++position;
    const auto& f = spec.fires[fc.fire - kFirstFire];
    const std::string base = "fire" + std::to_string(fc.fire);
    FireBlock block;
    block.fire = fc.fire;
    block.squeeze = net.layers_.size();
    net.layers_.push_back(make_conv(base + ".squeeze", LayerRole::squeeze,
                                    fc.in_channels, f.squeeze, 1, 1, 0, rng, init_gain));
    block.expand1 = net.layers_.size();
    net.layers_.push_back(make_conv(base + ".expand1x1", LayerRole::expand1, f.squeeze,
                                    f.expand1, 1, 1, 0, rng, init_gain));
    block.expand3 = net.layers_.size();
    net.layers_.push_back(make_conv(base + ".expand3x3", LayerRole::expand3, f.squeeze,
                                    f.expand3, 3, 1, 1, rng, init_gain));
    for (int k : spec.pool_after_fires) block.pool_after = block.pool_after || k == position;
    net.blocks_.push_back(block);
  }
  net.classifier_ = net.layers_.size();
  net.layers_.push_back(make_conv("classifier", LayerRole::classifier,
                                  plan.classifier_in, spec.num_classes, 1, 1, 0, rng,
                                  init_gain));
  return net;
}

std::vector<Tensor> Network::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers_) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  return out;
}

std::uint64_t Network::parameter_count() const {
  std::uint64_t total = 0;
  for (const auto& p : parameters()) total += p.numel();
  return total;
}

void Network::zero_grad() {
  for (auto& l : layers_) {
    l.weight.zero_grad();
    l.bias.zero_grad();
  }
}

Network Network::clone() const {
  Network copy = *this;
  for (auto& l : copy.layers_) {
    l.weight = l.weight.clone();
    l.bias = l.bias.clone();
  }
  return copy;
}

ForwardResult Network::forward(Tape& tape, const Tensor& images,
                               const ForwardOptions& options,
                               ForwardObserver* observer) const {
  if (images.rank() != 4 || images.dim(1) != static_cast<std::size_t>(spec_.in_channels)) {
    throw std::invalid_argument("network expects [N, " + std::to_string(spec_.in_channels) +
                                ", H, W] input, got " + to_string(images.shape()));
  }
  ForwardResult result;

  auto conv = [&](const ConvLayer& l, const Tensor& in, bool spiking, int step) {
    if (observer) observer->on_conv(l, in, spiking, step);
    return conv2d(tape, in, l.weight, l.bias, l.stride, l.padding, l.name);
  };
  auto pool = [&](const Tensor& in, const std::string& label) {
    return maxpool2d(tape, in, kPoolKernel, kPoolStride, label);
  };

  const Tensor stem = conv(layers_[0], images, false, -1);

  if (spec_.mode == NetMode::cnn) {
    Tensor h = relu(tape, stem, "conv1.relu");
    if (spec_.pool_after_conv1) h = pool(h, "conv1.pool");
    for (const auto& b : blocks_) {
      const auto& sq = layers_[b.squeeze];
      Tensor s = relu(tape, conv(sq, h, false, 0), sq.name + ".relu");
      const auto& e1 = layers_[b.expand1];
      const auto& e3 = layers_[b.expand3];
      Tensor a = relu(tape, conv(e1, s, false, 0), e1.name + ".relu");
      Tensor c = relu(tape, conv(e3, s, false, 0), e3.name + ".relu");
      const std::string base = "fire" + std::to_string(b.fire);
      h = concat_channels(tape, a, c, base + ".concat");
      if (b.pool_after) h = pool(h, base + ".pool");
    }
    const auto& cls = layers_[classifier_];
    result.logits.push_back(global_avgpool(tape, conv(cls, h, false, 0), "classifier.gap"));
    return result;
  }

  options.lif.validate();
  const int steps = options.time_steps.value_or(spec_.time_steps);
  if (steps < 1) throw std::invalid_argument("time_steps must be >= 1");

  std::vector<LifState> states(layers_.size());
  std::vector<std::size_t> activity_slot(layers_.size(), 0);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (layers_[i].role == LayerRole::classifier) continue;
    activity_slot[i] = result.activity.size();
    result.activity.push_back({layers_[i].name, 0.0, 0.0});
  }

  auto fire = [&](std::size_t idx, const Tensor& current, int step) {
    const auto& l = layers_[idx];
    Tensor s = lif_step(tape, states[idx], current, options.lif, options.spike_mode,
                        l.name + ".lif");
    auto& act = result.activity[activity_slot[idx]];
    double count = 0.0;
    for (float v : s.data()) count += v;
    act.spikes += count;
    act.neuron_steps += static_cast<double>(s.numel());
    if (observer) observer->on_spikes(l, s, step);
    return s;
  };

  for (int t = 0; t < steps; ++t) {
    Tensor h = fire(0, stem, t);
    if (spec_.pool_after_conv1) h = pool(h, "conv1.pool");
    for (const auto& b : blocks_) {
      Tensor s = fire(b.squeeze, conv(layers_[b.squeeze], h, true, t), t);
      Tensor a = fire(b.expand1, conv(layers_[b.expand1], s, true, t), t);
      Tensor c = fire(b.expand3, conv(layers_[b.expand3], s, true, t), t);
      const std::string base = "fire" + std::to_string(b.fire);
      h = concat_channels(tape, a, c, base + ".concat");
      if (b.pool_after) h = pool(h, base + ".pool");
    }
    const auto& cls = layers_[classifier_];
    result.logits.push_back(global_avgpool(tape, conv(cls, h, true, t), "classifier.gap"));
  }
  return result;
}

std::vector<int> predict(const ForwardResult& result) {
  if (result.logits.empty()) throw std::invalid_argument("predict: no logits");
  const std::size_t n = result.logits[0].dim(0), c = result.logits[0].dim(1);
  std::vector<int> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    int best = 0;
    float best_v = 0.0f;
    for (std::size_t k = 0; k < c; ++k) {
      float s = 0.0f;
      for (const auto& l : result.logits) s += l[i * c + k];
      if (k == 0 || s > best_v) {
        best_v = s;
        best = static_cast<int>(k);
      }
    }
    out[i] = best;
  }
  return out;
}

}  // namespace snn
