#include "snn/kernels.hpp"

namespace snn::kernels::reference {

void conv2d_forward(const ConvGeom& g, std::span<const float> x,
                    std::span<const float> w, std::span<const float> b,
                    std::span<float> y) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          float acc = b.empty() ? 0.0f : b[co];
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ki = 0; ki < g.kernel_h; ++ki)
              for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
                const long r = long(i * g.stride + ki) - long(g.padding);
                const long c = long(j * g.stride + kj) - long(g.padding);
                if (r < 0 || c < 0 || r >= long(g.in_h) || c >= long(g.in_w))
                  continue;
                acc += w[((co * g.in_channels + ci) * g.kernel_h + ki) * g.kernel_w + kj] *
                       x[((n * g.in_channels + ci) * g.in_h + r) * g.in_w + c];
              }
          y[((n * g.out_channels + co) * oh + i) * ow + j] = acc;
        }
}

void conv2d_backward(const ConvGeom& g, std::span<const float> x,
                     std::span<const float> w, std::span<const float> dy,
                     std::span<float> dx, std::span<float> dw,
                     std::span<float> db) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t n = 0; n < g.batch; ++n)
    for (std::size_t co = 0; co < g.out_channels; ++co)
      for (std::size_t i = 0; i < oh; ++i)
        for (std::size_t j = 0; j < ow; ++j) {
          const float grad = dy[((n * g.out_channels + co) * oh + i) * ow + j];
          if (!db.empty()) db[co] += grad;
          for (std::size_t ci = 0; ci < g.in_channels; ++ci)
            for (std::size_t ki = 0; ki < g.kernel_h; ++ki)
              for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
                const long r = long(i * g.stride + ki) - long(g.padding);
                const long c = long(j * g.stride + kj) - long(g.padding);
                if (r < 0 || c < 0 || r >= long(g.in_h) || c >= long(g.in_w))
                  continue;
                const std::size_t wi =
                    ((co * g.in_channels + ci) * g.kernel_h + ki) * g.kernel_w + kj;
                const std::size_t xi =
                    ((n * g.in_channels + ci) * g.in_h + r) * g.in_w + c;
                if (!dw.empty()) dw[wi] += grad * x[xi];
                if (!dx.empty()) dx[xi] += grad * w[wi];
              }
        }
}

void maxpool2d_forward(const PoolGeom& g, std::span<const float> x,
                       std::span<float> y, std::span<std::uint32_t> argmax) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t nc = 0; nc < g.batch * g.channels; ++nc)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = nc * g.in_h * g.in_w + (i * g.stride) * g.in_w + j * g.stride;
        for (std::size_t ki = 0; ki < g.kernel; ++ki)
          for (std::size_t kj = 0; kj < g.kernel; ++kj) {
            const std::size_t idx =
                nc * g.in_h * g.in_w + (i * g.stride + ki) * g.in_w + j * g.stride + kj;
            if (x[idx] > x[best]) best = idx;
          }
        const std::size_t o = (nc * oh + i) * ow + j;
        y[o] = x[best];
        if (!argmax.empty()) argmax[o] = static_cast<std::uint32_t>(best);
      }
}

void maxpool2d_backward(const PoolGeom& g, std::span<const float> dy,
                        std::span<const std::uint32_t> argmax,
                        std::span<float> dx) {
  const std::size_t total = g.batch * g.channels * g.out_h() * g.out_w();
  for (std::size_t o = 0; o < total; ++o) dx[argmax[o]] += dy[o];
}

}  // namespace snn::kernels::reference
