#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "snn/data.hpp"
#include "snn/network.hpp"
#include "snn/tape.hpp"

namespace snn {

// monitor: L_GA is computed and logged, parameters follow grad(L_CE) only.
// exact: grad(L_GA) is added through a Hessian-vector product.
enum class GaMode { monitor, exact };
// How per-step outputs are pooled before the cross-entropy.
enum class CeAveraging { logits, probabilities };

std::string_view to_string(GaMode mode);
GaMode parse_ga_mode(std::string_view text);
std::string_view to_string(CeAveraging mode);
CeAveraging parse_ce_averaging(std::string_view text);

struct TrainConfig {
  float lr = 1e-3f;
  float decay_factor = 0.1f;
  std::vector<int> decay_epochs{50, 100};
  int batch_size = 12;
  int max_epochs = 120;
  int patience = 10;
  std::uint64_t seed = 42;
  float lambda = 0.1f;
  float epsilon = 1e-8f;
  int time_steps = 4;
  GaMode ga_mode = GaMode::monitor;
  CeAveraging ce_averaging = CeAveraging::logits;
  double val_fraction = 0.1;
  // Stop as soon as an epoch's running train accuracy reaches this; 0 = off.
  double target_train_acc = 0.0;

  void validate() const;
};

struct GradNorm {
  std::string layer;
  float norm = 0.0f;
};

struct LossBreakdown {
  float ce = 0.0f;
  float ga = 0.0f;
  float total = 0.0f;
  std::vector<GradNorm> per_layer_grad_norms;
};

// Softmax cross-entropy over T steps of [N, C] logits, averaged over the
// batch. With CeAveraging::logits the logits are averaged over time before the
// softmax; with probabilities the per-step softmax outputs are averaged.
Tensor ce_loss_over_time(Tape& tape, std::span<const Tensor> logits,
                         std::span<const int> labels,
                         CeAveraging averaging = CeAveraging::logits);

// lambda * sum_l (1 - g_l / (g_l + epsilon))
float ga_loss(std::span<const float> grad_norms, float lambda, float epsilon);
float total_loss(float ce, float ga);

struct AdamState {
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
  int step = 0;
  std::vector<std::vector<float>> m, v;
};

// One bias-corrected Adam update of every tensor in `params` from its grad.
// Throws naming the tensor if a gradient is NaN.
void adam_step(std::span<Tensor> params, AdamState& state, float lr);

float lr_at_epoch(int epoch, const TrainConfig& config);

// True once the best value in `history` is followed by `patience` entries
// that do not exceed it.
bool early_stop_check(std::span<const double> history, int patience);

// L2 norm of each layer's weight gradient, in layer order.
std::vector<GradNorm> log_grad_norms(const Network& net);

// Populates the .grad of every parameter with d(L_CE + L_GA)/d(theta) as
// configured, where L_CE comes from `ce_fn` and the gradient-aware term runs
// over `weights` (one tensor per layer). `names` labels the weights.
LossBreakdown compute_gradients(const std::function<Tensor(Tape&)>& ce_fn,
                                std::span<Tensor> params, std::span<Tensor> weights,
                                std::span<const std::string> names,
                                const TrainConfig& config);

struct EpochLog {
  int epoch = 0;
  float lr = 0.0f;
  double train_loss = 0.0;
  double ce = 0.0;
  double ga = 0.0;
  double val_acc = 0.0;
  double firing_rate = 0.0;
  double train_acc = 0.0;
  std::vector<GradNorm> grad_norms;  // batch-averaged
};

struct TrainResult {
  std::vector<EpochLog> history;
  std::string stop_reason;  // max-epochs | early-stop | target-reached
  int best_epoch = 0;
  double best_val_acc = 0.0;
};

class Trainer {
 public:
  Trainer(Network& net, TrainConfig config, ForwardOptions forward = {});

  TrainResult fit(const Dataset& train, const Dataset& val,
                  const std::function<void(const EpochLog&)>& on_epoch = {});

  // One optimisation step on a batch; returns the loss decomposition.
  LossBreakdown train_step(const Tensor& images, std::span<const int> labels, float lr,
                           std::vector<int>* predictions = nullptr,
                           double* firing_rate = nullptr);

  const AdamState& optimizer() const { return adam_; }

 private:
  Network& net_;
  TrainConfig config_;
  ForwardOptions forward_;
  AdamState adam_;
};

// Accuracy of `net` on `data`, in batches.
double accuracy(const Network& net, const Dataset& data, const ForwardOptions& forward,
                int batch_size = 64, std::vector<int>* predictions = nullptr);

// Checkpoints -----------------------------------------------------------------

// "SNNW", u32 version, u32 length + text, then per tensor: u32 rank, u32 dims,
// f32 data; all little-endian.
struct TensorArchive {
  std::string text;
  std::vector<Tensor> tensors;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void write_archive(const std::string& path, const TensorArchive& archive);
TensorArchive read_archive(const std::string& path);

void save_checkpoint(const Network& net, const std::string& path);
Network load_checkpoint(const std::string& path);

}  // namespace snn
