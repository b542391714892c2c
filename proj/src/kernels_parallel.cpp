#include <algorithm>
#include <vector>

#include "snn/kernels.hpp"

namespace snn::kernels::parallel {

namespace {

// col[k, n*P + p] for k = (ci, ki, kj), p = (i, j). Zero outside the image.
void im2col(const ConvGeom& g, std::span<const float> x, std::vector<float>& col) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), P = oh * ow;
  const std::size_t Q = g.batch * P;
  col.assign(g.patch() * Q, 0.0f);
  const long pad = long(g.padding);
#pragma omp parallel for schedule(static)
  for (std::size_t k = 0; k < g.patch(); ++k) {
    const std::size_t ci = k / (g.kernel_h * g.kernel_w);
    const std::size_t ki = (k / g.kernel_w) % g.kernel_h;
    const std::size_t kj = k % g.kernel_w;
    float* row = col.data() + k * Q;
    for (std::size_t n = 0; n < g.batch; ++n) {
      const float* plane = x.data() + (n * g.in_channels + ci) * g.in_h * g.in_w;
      float* dst = row + n * P;
      for (std::size_t i = 0; i < oh; ++i) {
        const long r = long(i * g.stride + ki) - pad;
        if (r < 0 || r >= long(g.in_h)) continue;
        for (std::size_t j = 0; j < ow; ++j) {
          const long c = long(j * g.stride + kj) - pad;
          if (c < 0 || c >= long(g.in_w)) continue;
          dst[i * ow + j] = plane[r * long(g.in_w) + c];
        }
      }
    }
  }
}

// Inverse scatter of im2col, accumulating into dx. Parallel over input
// channels; each dx element receives its contributions in k-then-q order.
void col2im(const ConvGeom& g, const std::vector<float>& dcol, std::span<float> dx) {
  const std::size_t oh = g.out_h(), ow = g.out_w(), P = oh * ow;
  const std::size_t Q = g.batch * P;
  const std::size_t kk = g.kernel_h * g.kernel_w;
  const long pad = long(g.padding);
#pragma omp parallel for schedule(static)
  for (std::size_t ci = 0; ci < g.in_channels; ++ci) {
    for (std::size_t kr = 0; kr < kk; ++kr) {
      const std::size_t k = ci * kk + kr;
      const std::size_t ki = kr / g.kernel_w, kj = kr % g.kernel_w;
      const float* row = dcol.data() + k * Q;
      for (std::size_t n = 0; n < g.batch; ++n) {
        float* plane = dx.data() + (n * g.in_channels + ci) * g.in_h * g.in_w;
        const float* src = row + n * P;
        for (std::size_t i = 0; i < oh; ++i) {
          const long r = long(i * g.stride + ki) - pad;
          if (r < 0 || r >= long(g.in_h)) continue;
          for (std::size_t j = 0; j < ow; ++j) {
            const long c = long(j * g.stride + kj) - pad;
            if (c < 0 || c >= long(g.in_w)) continue;
            plane[r * long(g.in_w) + c] += src[i * ow + j];
          }
        }
      }
    }
  }
}

}  // namespace

void conv2d_forward(const ConvGeom& g, std::span<const float> x,
                    std::span<const float> w, std::span<const float> b,
                    std::span<float> y) {
  const std::size_t P = g.out_h() * g.out_w();
  const std::size_t Q = g.batch * P;
  const std::size_t K = g.patch();
  std::vector<float> col;
  im2col(g, x, col);

#pragma omp parallel
  {
    std::vector<float> acc(Q);
#pragma omp for schedule(static)
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      std::fill(acc.begin(), acc.end(), b.empty() ? 0.0f : b[co]);
      const float* wrow = w.data() + co * K;
      float* __restrict a = acc.data();
      for (std::size_t k = 0; k < K; ++k) {
        const float wv = wrow[k];
        const float* __restrict c = col.data() + k * Q;
        for (std::size_t q = 0; q < Q; ++q) a[q] += wv * c[q];
      }
      for (std::size_t n = 0; n < g.batch; ++n) {
        std::copy_n(acc.data() + n * P, P,
                    y.data() + (n * g.out_channels + co) * P);
      }
    }
  }
}

void conv2d_backward(const ConvGeom& g, std::span<const float> x,
                     std::span<const float> w, std::span<const float> dy,
                     std::span<float> dx, std::span<float> dw,
                     std::span<float> db) {
  const std::size_t P = g.out_h() * g.out_w();
  const std::size_t Q = g.batch * P;
  const std::size_t K = g.patch();

  // dy as [Cout, Q]
  std::vector<float> dy2(g.out_channels * Q);
#pragma omp parallel for schedule(static)
  for (std::size_t co = 0; co < g.out_channels; ++co)
    for (std::size_t n = 0; n < g.batch; ++n)
      std::copy_n(dy.data() + (n * g.out_channels + co) * P, P,
                  dy2.data() + co * Q + n * P);

  if (!db.empty()) {
#pragma omp parallel for schedule(static)
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      float s = 0.0f;
      for (std::size_t q = 0; q < Q; ++q) s += dy2[co * Q + q];
      db[co] += s;
    }
  }

  if (!dw.empty()) {
    std::vector<float> col;
    im2col(g, x, col);
    std::vector<float> colT(Q * K);
#pragma omp parallel for schedule(static)
    for (std::size_t q = 0; q < Q; ++q)
      for (std::size_t k = 0; k < K; ++k) colT[q * K + k] = col[k * Q + q];

#pragma omp parallel for schedule(static)
    for (std::size_t co = 0; co < g.out_channels; ++co) {
      float* __restrict d = dw.data() + co * K;
      const float* grow = dy2.data() + co * Q;
      for (std::size_t q = 0; q < Q; ++q) {
        const float gv = grow[q];
        if (gv == 0.0f) continue;
        const float* __restrict c = colT.data() + q * K;
        for (std::size_t k = 0; k < K; ++k) d[k] += gv * c[k];
      }
    }
  }

  if (!dx.empty()) {
    std::vector<float> dcol(K * Q, 0.0f);
#pragma omp parallel for schedule(static)
    for (std::size_t k = 0; k < K; ++k) {
      float* __restrict d = dcol.data() + k * Q;
      for (std::size_t co = 0; co < g.out_channels; ++co) {
        const float wv = w[co * K + k];
        if (wv == 0.0f) continue;
        const float* __restrict grow = dy2.data() + co * Q;
        for (std::size_t q = 0; q < Q; ++q) d[q] += wv * grow[q];
      }
    }
    col2im(g, dcol, dx);
  }
}

void maxpool2d_forward(const PoolGeom& g, std::span<const float> x,
                       std::span<float> y, std::span<std::uint32_t> argmax) {
  const std::size_t oh = g.out_h(), ow = g.out_w();
  const std::size_t planes = g.batch * g.channels;
#pragma omp parallel for schedule(static)
  for (std::size_t nc = 0; nc < planes; ++nc) {
    const std::size_t base = nc * g.in_h * g.in_w;
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        std::size_t best = base + (i * g.stride) * g.in_w + j * g.stride;
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
          const std::size_t row = base + (i * g.stride + ki) * g.in_w + j * g.stride;
          for (std::size_t kj = 0; kj < g.kernel; ++kj)
            if (x[row + kj] > x[best]) best = row + kj;
        }
        const std::size_t o = (nc * oh + i) * ow + j;
        y[o] = x[best];
        if (!argmax.empty()) argmax[o] = static_cast<std::uint32_t>(best);
      }
  }
}

void maxpool2d_backward(const PoolGeom& g, std::span<const float> dy,
                        std::span<const std::uint32_t> argmax,
                        std::span<float> dx) {
  const std::size_t per_plane = g.out_h() * g.out_w();
  const std::size_t planes = g.batch * g.channels;
  // Windows never cross planes, so planes are independent.
#pragma omp parallel for schedule(static)
  for (std::size_t nc = 0; nc < planes; ++nc)
    for (std::size_t o = nc * per_plane; o < (nc + 1) * per_plane; ++o)
      dx[argmax[o]] += dy[o];
}

}  // namespace snn::kernels::parallel
