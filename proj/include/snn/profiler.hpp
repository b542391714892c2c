#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "snn/kernels.hpp"
#include "snn/network.hpp"
#include "snn/tensor.hpp"

namespace snn {

// Per-operation energy under the 45nm figures used for SNN accounting.
inline constexpr double kAcEnergyPj = 0.9;
inline constexpr double kMacEnergyPj = 4.6;

struct OpCounts {
  std::uint64_t ac = 0;
  std::uint64_t mac = 0;
  std::uint64_t params = 0;

  OpCounts& operator+=(const OpCounts& o) {
    ac += o.ac;
    mac += o.mac;
    params += o.params;
    return *this;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts& b) { return a += b; }
  bool operator==(const OpCounts&) const = default;
};

struct EnergyReport {
  double energy_pj = 0.0;
  double energy_mj = 0.0;
  std::optional<double> eta;
  double firing_rate = 0.0;
};

// Hout * Wout * Cout * Cin * Kh * Kw for one image; bias excluded.
std::uint64_t count_mac_conv(const kernels::ConvGeom& geom);

// Number of (spike, synapse) accumulate events: for every output position and
// output channel, the count of 1-valued inputs in its receptive field. Summed
// over the batch. Throws if `spikes` holds anything but 0 and 1.
std::uint64_t count_ac_conv(const Tensor& spikes, const kernels::ConvGeom& geom);

// E = N_AC * 0.9 pJ + N_MAC * 4.6 pJ
EnergyReport energy(const OpCounts& counts);
double energy_mj(std::uint64_t ac, std::uint64_t mac);

// E_CNN / E_SNN
double eta_energy(double e_cnn_mj, double e_snn_mj);

// Total ones / total elements over a record of binary spike tensors.
double firing_rate(std::span<const Tensor> spikes);

struct ProfileOptions {
  // Count the stem convolution once per time step instead of once per image.
  bool first_layer_per_step = false;
  // One MAC per LIF neuron per time step for the membrane update.
  bool neuron_update_macs = true;
  std::optional<int> time_steps;
  LifParams lif;
};

struct LayerProfile {
  std::string name;
  std::string type;
  std::uint64_t ac = 0;
  std::uint64_t mac = 0;
  std::uint64_t params = 0;
  double firing_rate = 0.0;  // of the LIF stage after this conv
};

struct ProfileResult {
  OpCounts counts;  // per image (batch-averaged, rounded)
  EnergyReport report;
  std::vector<LayerProfile> layers;  // per image
  // MACs the same architecture costs as a CNN on this input (one dense pass).
  std::uint64_t cnn_equivalent_mac = 0;
  double cnn_equivalent_energy_mj = 0.0;
  std::vector<int> predictions;
};

ProfileResult profile_forward(const Network& net, const Tensor& batch,
                              const ProfileOptions& options = {});

// layer_name,type,ac,mac,params,firing_rate
void write_layer_csv(std::ostream& os, std::span<const LayerProfile> layers);

}  // namespace snn
