#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snn/arch.hpp"
#include "snn/lif.hpp"
#include "snn/tape.hpp"
#include "snn/tensor.hpp"

namespace snn {

// 4 for spiking nets, sqrt(6) (Kaiming uniform) for ReLU nets. Spiking layers
// need the wider init to reach threshold.
float default_init_gain(NetMode mode);

enum class LayerRole { stem, squeeze, expand1, expand3, classifier };

std::string_view to_string(LayerRole role);

struct ConvLayer {
  std::string name;
  LayerRole role = LayerRole::stem;
  Tensor weight;  // [Cout, Cin, K, K]
  Tensor bias;    // [Cout]
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t kernel() const { return weight.dim(2); }
  std::uint64_t param_count() const { return weight.numel() + bias.numel(); }
};

struct ForwardOptions {
  LifParams lif;
  SpikeMode spike_mode = SpikeMode::heaviside;
  // Overrides spec().time_steps when set.
  std::optional<int> time_steps;
};

// Hooks called during Network::forward. `step` is the time step, or -1 for the
// stem convolution, which sees a time-invariant input and runs once.
class ForwardObserver {
 public:
  virtual ~ForwardObserver() = default;
  virtual void on_conv(const ConvLayer& layer, const Tensor& input, bool spiking_input,
                       int step) {
    (void)layer, (void)input, (void)spiking_input, (void)step;
  }
  virtual void on_spikes(const ConvLayer& layer, const Tensor& spikes, int step) {
    (void)layer, (void)spikes, (void)step;
  }
};

struct LayerActivity {
  std::string layer;
  double spikes = 0.0;
  double neuron_steps = 0.0;
};

struct ForwardResult {
  // One [N, classes] tensor per time step (SNN) or a single one (CNN).
  std::vector<Tensor> logits;
  std::vector<LayerActivity> activity;

  // Total spikes / (neurons * steps) over all LIF layers; 0 for CNN mode.
  double firing_rate() const;
};

class Network {
 public:
  // Uniform(+-gain/sqrt(fan_in)) weights and biases, seeded.
  static Network build(const ArchSpec& spec, std::uint64_t seed = 42,
                       std::optional<float> init_gain = std::nullopt);

  const ArchSpec& spec() const { return spec_; }
  std::vector<ConvLayer>& layers() { return layers_; }
  const std::vector<ConvLayer>& layers() const { return layers_; }

  // weight, bias per layer in build order.
  std::vector<Tensor> parameters() const;
  std::uint64_t parameter_count() const;
  void zero_grad();

  // Deep copy with independent storage.
  Network clone() const;

  ForwardResult forward(Tape& tape, const Tensor& images,
                        const ForwardOptions& options = {},
                        ForwardObserver* observer = nullptr) const;

 private:
  struct FireBlock {
    int fire = 0;
    std::size_t squeeze = 0, expand1 = 0, expand3 = 0;  // indices into layers_
    bool pool_after = false;
  };

  ArchSpec spec_;
  std::vector<ConvLayer> layers_;
  std::vector<FireBlock> blocks_;
  std::size_t classifier_ = 0;
};

// Argmax of the time-averaged logits per sample.
std::vector<int> predict(const ForwardResult& result);

}  // namespace snn
