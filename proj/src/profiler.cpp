#include "snn/profiler.hpp"

#include <map>
#include <stdexcept>

#include "text_util.hpp"

namespace snn {

std::uint64_t count_mac_conv(const kernels::ConvGeom& g) {
  return std::uint64_t(g.out_h()) * g.out_w() * g.out_channels * g.in_channels *
         g.kernel_h * g.kernel_w;
}

std::uint64_t count_ac_conv(const Tensor& spikes, const kernels::ConvGeom& g) {
  if (spikes.rank() != 4 || spikes.dim(1) != g.in_channels || spikes.dim(2) != g.in_h ||
      spikes.dim(3) != g.in_w) {
    throw std::invalid_argument("count_ac_conv: spike tensor " + to_string(spikes.shape()) +
                                " does not match layer geometry");
  }
  const std::size_t n_img = spikes.dim(0);
  const std::size_t H = g.in_h, W = g.in_w;
  const std::size_t oh = g.out_h(), ow = g.out_w();
  auto x = spikes.data();
  std::uint64_t total = 0;
  // Integral image of per-pixel spike counts (summed over input channels).
  std::vector<std::uint64_t> integral((H + 1) * (W + 1));
  for (std::size_t n = 0; n < n_img; ++n) {
    std::fill(integral.begin(), integral.end(), 0);
    for (std::size_t r = 0; r < H; ++r) {
      std::uint64_t row = 0;
      for (std::size_t c = 0; c < W; ++c) {
        std::uint64_t count = 0;
        for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
          const float v = x[((n * g.in_channels + ci) * H + r) * W + c];
          if (v == 1.0f) {
            ++count;
          } else if (v != 0.0f) {
            throw std::invalid_argument("count_ac_conv: non-binary input value " +
                                        std::to_string(v));
          }
        }
        row += count;
        integral[(r + 1) * (W + 1) + c + 1] = integral[r * (W + 1) + c + 1] + row;
      }
    }
    for (std::size_t i = 0; i < oh; ++i) {
      const long r0 = std::max(0L, long(i * g.stride) - long(g.padding));
      const long r1 = std::min(long(H), long(i * g.stride + g.kernel_h) - long(g.padding));
      for (std::size_t j = 0; j < ow; ++j) {
        const long c0 = std::max(0L, long(j * g.stride) - long(g.padding));
        const long c1 = std::min(long(W), long(j * g.stride + g.kernel_w) - long(g.padding));
        if (r1 <= r0 || c1 <= c0) continue;
        total += integral[r1 * (W + 1) + c1] - integral[r0 * (W + 1) + c1] -
                 integral[r1 * (W + 1) + c0] + integral[r0 * (W + 1) + c0];
      }
    }
  }
  return total * g.out_channels;
}

double energy_mj(std::uint64_t ac, std::uint64_t mac) {
  return (static_cast<double>(ac) * kAcEnergyPj + static_cast<double>(mac) * kMacEnergyPj) *
         1e-9;
}

EnergyReport energy(const OpCounts& counts) {
  EnergyReport r;
  r.energy_pj = static_cast<double>(counts.ac) * kAcEnergyPj +
                static_cast<double>(counts.mac) * kMacEnergyPj;
  r.energy_mj = r.energy_pj * 1e-9;
  return r;
}

double eta_energy(double e_cnn_mj, double e_snn_mj) {
  if (!(e_snn_mj > 0.0)) {
    throw std::invalid_argument("eta_energy: SNN energy must be > 0");
  }
  return e_cnn_mj / e_snn_mj;
}

double firing_rate(std::span<const Tensor> spikes) {
  double ones = 0.0, total = 0.0;
  for (const auto& t : spikes) {
    for (float v : t.data()) ones += v;
    total += static_cast<double>(t.numel());
  }
  return total > 0.0 ? ones / total : 0.0;
}

namespace {

kernels::ConvGeom geom_for(const ConvLayer& l, const Tensor& input) {
  kernels::ConvGeom g;
  g.batch = input.dim(0);
  g.in_channels = input.dim(1);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.out_channels = l.out_channels();
  g.kernel_h = g.kernel_w = l.kernel();
  g.stride = l.stride;
  g.padding = l.padding;
  return g;
}

class CountingObserver : public ForwardObserver {
 public:
  struct Totals {
    std::uint64_t ac = 0, mac = 0, neuron_mac = 0, dense_mac = 0;
    double spikes = 0.0, slots = 0.0;
    bool seen = false;
  };

  CountingObserver(const ProfileOptions& opts, bool snn, int steps)
      : opts_(opts), snn_(snn), steps_(steps) {}

  void on_conv(const ConvLayer& layer, const Tensor& input, bool spiking,
               int step) override {
    auto& t = totals_[layer.name];
    const auto g = geom_for(layer, input);
    if (!t.seen) {
      t.dense_mac = count_mac_conv(g) * g.batch;
      t.seen = true;
    }
    if (spiking) {
      t.ac += count_ac_conv(input, g);
    } else {
      std::uint64_t mac = count_mac_conv(g) * g.batch;
      if (snn_ && step < 0 && opts_.first_layer_per_step) mac *= steps_;
      t.mac += mac;
    }
  }

  void on_spikes(const ConvLayer& layer, const Tensor& spikes, int) override {
    auto& t = totals_[layer.name];
    double ones = 0.0;
    for (float v : spikes.data()) ones += v;
    t.spikes += ones;
    t.slots += static_cast<double>(spikes.numel());
    if (opts_.neuron_update_macs) t.neuron_mac += spikes.numel();
  }

  const Totals& at(const std::string& name) { return totals_[name]; }

 private:
  ProfileOptions opts_;
  bool snn_;
  int steps_;
  std::map<std::string, Totals> totals_;
};

std::uint64_t per_image(std::uint64_t total, std::uint64_t n) {
  return (total + n / 2) / n;
}

}  // namespace

ProfileResult profile_forward(const Network& net, const Tensor& batch,
                              const ProfileOptions& options) {
  const bool snn = net.spec().mode == NetMode::snn;
  const int steps = options.time_steps.value_or(net.spec().time_steps);
  CountingObserver obs(options, snn, steps);
  Tape tape(false);
  ForwardOptions fo;
  fo.lif = options.lif;
  fo.time_steps = steps;
  const auto fwd = net.forward(tape, batch, fo, &obs);

  const std::uint64_t n = batch.dim(0);
  ProfileResult out;
  out.predictions = predict(fwd);
  for (const auto& l : net.layers()) {
    const auto& t = obs.at(l.name);
    LayerProfile lp;
    lp.name = l.name;
    lp.type = std::string(to_string(l.role));
    lp.ac = per_image(t.ac, n);
    lp.mac = per_image(t.mac + t.neuron_mac, n);
    lp.params = l.param_count();
    lp.firing_rate = t.slots > 0.0 ? t.spikes / t.slots : 0.0;
    out.counts.ac += lp.ac;
    out.counts.mac += lp.mac;
    out.counts.params += lp.params;
    out.cnn_equivalent_mac += per_image(t.dense_mac, n);
    out.layers.push_back(std::move(lp));
  }
  out.report = energy(out.counts);
  out.report.firing_rate = fwd.firing_rate();
  out.cnn_equivalent_energy_mj = energy_mj(0, out.cnn_equivalent_mac);
  if (snn && out.report.energy_mj > 0.0) {
    out.report.eta = eta_energy(out.cnn_equivalent_energy_mj, out.report.energy_mj);
  }
  return out;
}

void write_layer_csv(std::ostream& os, std::span<const LayerProfile> layers) {
  os << "layer_name,type,ac,mac,params,firing_rate\n";
  for (const auto& l : layers) {
    os << l.name << "," << l.type << "," << l.ac << "," << l.mac << "," << l.params << ","
       << detail::format_double(l.firing_rate) << "\n";
  }
}

}  // namespace snn
