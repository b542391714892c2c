#pragma once

#include <span>
#include <string>

#include "snn/tape.hpp"
#include "snn/tensor.hpp"

namespace snn {

enum class KernelBackend { reference, parallel };

// Process-wide choice of convolution/pooling kernels; parallel by default.
void set_kernel_backend(KernelBackend backend);
KernelBackend kernel_backend();

// Cross-correlation over NCHW input; weight is [Cout, Cin, Kh, Kw], bias [Cout]
// (or undefined for no bias).
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight,
              const Tensor& bias, std::size_t stride, std::size_t padding,
              const std::string& label = "conv2d");

Tensor maxpool2d(Tape& tape, const Tensor& input, std::size_t kernel,
                 std::size_t stride, const std::string& label = "maxpool2d");

// [N, C, H, W] -> [N, C]
Tensor global_avgpool(Tape& tape, const Tensor& input,
                      const std::string& label = "global_avgpool");

// Channels of a followed by channels of b.
Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b,
                       const std::string& label = "concat");

Tensor relu(Tape& tape, const Tensor& input, const std::string& label = "relu");
Tensor add(Tape& tape, const Tensor& a, const Tensor& b,
           const std::string& label = "add");
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b,
           const std::string& label = "mul");
Tensor scale(Tape& tape, const Tensor& input, float factor,
             const std::string& label = "scale");
Tensor sum(Tape& tape, const Tensor& input, const std::string& label = "sum");

// Elementwise mean of equally shaped tensors (time averaging).
Tensor mean_of(Tape& tape, std::span<const Tensor> inputs,
               const std::string& label = "mean_of");

}  // namespace snn
