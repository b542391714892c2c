#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace snn::kernels {

struct ConvGeom {
  std::size_t batch = 1;
  std::size_t in_channels = 0, in_h = 0, in_w = 0;
  std::size_t out_channels = 0, kernel_h = 0, kernel_w = 0;
  std::size_t stride = 1, padding = 0;

  std::size_t out_h() const { return (in_h + 2 * padding - kernel_h) / stride + 1; }
  std::size_t out_w() const { return (in_w + 2 * padding - kernel_w) / stride + 1; }
  std::size_t patch() const { return in_channels * kernel_h * kernel_w; }
  std::size_t in_plane() const { return in_channels * in_h * in_w; }
  std::size_t out_plane() const { return out_channels * out_h() * out_w(); }
};

struct PoolGeom {
  std::size_t batch = 1, channels = 0, in_h = 0, in_w = 0;
  std::size_t kernel = 2, stride = 2;

  std::size_t out_h() const { return (in_h - kernel) / stride + 1; }
  std::size_t out_w() const { return (in_w - kernel) / stride + 1; }
};

// Straightforward nested loops, single-threaded. These define the semantics
// the parallel kernels are tested against.
namespace reference {

void conv2d_forward(const ConvGeom& g, std::span<const float> x,
                    std::span<const float> w, std::span<const float> b,
                    std::span<float> y);
// dx/dw/db accumulate (+=); any of them may be empty to skip.
void conv2d_backward(const ConvGeom& g, std::span<const float> x,
                     std::span<const float> w, std::span<const float> dy,
                     std::span<float> dx, std::span<float> dw,
                     std::span<float> db);

// argmax holds the flat input index per output element (first max in scan
// order).
void maxpool2d_forward(const PoolGeom& g, std::span<const float> x,
                       std::span<float> y, std::span<std::uint32_t> argmax);
void maxpool2d_backward(const PoolGeom& g, std::span<const float> dy,
                        std::span<const std::uint32_t> argmax,
                        std::span<float> dx);

}  // namespace reference

// Batch-wide im2col + GEMM. OpenMP splits output channels (forward, dW) and
// patch rows (dX); each element is still accumulated in one fixed order, so
// results do not depend on the thread count.
namespace parallel {

void conv2d_forward(const ConvGeom& g, std::span<const float> x,
                    std::span<const float> w, std::span<const float> b,
                    std::span<float> y);
void conv2d_backward(const ConvGeom& g, std::span<const float> x,
                     std::span<const float> w, std::span<const float> dy,
                     std::span<float> dx, std::span<float> dw,
                     std::span<float> db);

void maxpool2d_forward(const PoolGeom& g, std::span<const float> x,
                       std::span<float> y, std::span<std::uint32_t> argmax);
void maxpool2d_backward(const PoolGeom& g, std::span<const float> dy,
                        std::span<const std::uint32_t> argmax,
                        std::span<float> dx);

}  // namespace parallel

}  // namespace snn::kernels
