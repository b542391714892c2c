#include "snn/ops.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <vector>

#include "snn/kernels.hpp"

namespace snn {

namespace {

std::atomic<KernelBackend> backend{KernelBackend::parallel};

void require_rank(const Tensor& t, std::size_t rank, const std::string& what) {
  if (!t.defined() || t.rank() != rank) {
    throw std::invalid_argument(what + ": expected rank-" + std::to_string(rank) +
                                " tensor, got " +
                                (t.defined() ? to_string(t.shape()) : "undefined"));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& what) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(what + ": shape mismatch " + to_string(a.shape()) +
                                " vs " + to_string(b.shape()));
  }
}

}  // namespace

void set_kernel_backend(KernelBackend b) { backend = b; }
KernelBackend kernel_backend() { return backend; }

Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& weight,
              const Tensor& bias, std::size_t stride, std::size_t padding,
              const std::string& label) {
  require_rank(input, 4, label + " input");
  require_rank(weight, 4, label + " weight");
  if (input.dim(1) != weight.dim(1)) {
    throw std::invalid_argument(label + ": input " + to_string(input.shape()) +
                                " has " + std::to_string(input.dim(1)) +
                                " channels but weight " + to_string(weight.shape()) +
                                " expects " + std::to_string(weight.dim(1)));
  }
  if (stride < 1) throw std::invalid_argument(label + ": stride must be >= 1");
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != weight.dim(0))) {
    throw std::invalid_argument(label + ": bias " + to_string(bias.shape()) +
                                " does not match weight " + to_string(weight.shape()));
  }
  if (input.dim(2) + 2 * padding < weight.dim(2) ||
      input.dim(3) + 2 * padding < weight.dim(3)) {
    throw std::invalid_argument(label + ": kernel " + to_string(weight.shape()) +
                                " larger than padded input " + to_string(input.shape()));
  }

  kernels::ConvGeom g;
  g.batch = input.dim(0);
  g.in_channels = input.dim(1);
  g.in_h = input.dim(2);
  g.in_w = input.dim(3);
  g.out_channels = weight.dim(0);
  g.kernel_h = weight.dim(2);
  g.kernel_w = weight.dim(3);
  g.stride = stride;
  g.padding = padding;

  Tensor out(Shape{g.batch, g.out_channels, g.out_h(), g.out_w()});
  std::span<const float> b = bias.defined() ? bias.data() : std::span<const float>{};
  if (backend == KernelBackend::parallel) {
    kernels::parallel::conv2d_forward(g, input.data(), weight.data(), b, out.data());
  } else {
    kernels::reference::conv2d_forward(g, input.data(), weight.data(), b, out.data());
  }

  if (tape.wants({&input, &weight, &bias})) {
    std::vector<Tensor> inputs{input, weight};
    if (bias.defined()) inputs.push_back(bias);
    tape.record(label, std::move(inputs), out, [=]() mutable {
      std::span<float> dx, dw, db;
      if (input.requires_grad()) dx = input.grad();
      if (weight.requires_grad()) dw = weight.grad();
      if (bias.defined() && bias.requires_grad()) db = bias.grad();
      std::span<const float> dy = out.grad();
      if (kernel_backend() == KernelBackend::parallel) {
        kernels::parallel::conv2d_backward(g, input.data(), weight.data(), dy, dx, dw, db);
      } else {
        kernels::reference::conv2d_backward(g, input.data(), weight.data(), dy, dx, dw, db);
      }
    });
  }
  return out;
}

Tensor maxpool2d(Tape& tape, const Tensor& input, std::size_t kernel,
                 std::size_t stride, const std::string& label) {
  require_rank(input, 4, label);
  if (kernel < 1 || stride < 1) {
    throw std::invalid_argument(label + ": kernel and stride must be >= 1");
  }
  if (kernel > input.dim(2) || kernel > input.dim(3)) {
    throw std::invalid_argument(label + ": kernel " + std::to_string(kernel) +
                                " larger than input " + to_string(input.shape()));
  }
  kernels::PoolGeom g{input.dim(0), input.dim(1), input.dim(2), input.dim(3),
                      kernel, stride};
  Tensor out(Shape{g.batch, g.channels, g.out_h(), g.out_w()});
  auto argmax = std::make_shared<std::vector<std::uint32_t>>(out.numel());
  if (backend == KernelBackend::parallel) {
    kernels::parallel::maxpool2d_forward(g, input.data(), out.data(), *argmax);
  } else {
    kernels::reference::maxpool2d_forward(g, input.data(), out.data(), *argmax);
  }
  if (tape.wants({&input})) {
    tape.record(label, {input}, out, [=]() mutable {
      if (kernel_backend() == KernelBackend::parallel) {
        kernels::parallel::maxpool2d_backward(g, out.grad(), *argmax, input.grad());
      } else {
        kernels::reference::maxpool2d_backward(g, out.grad(), *argmax, input.grad());
      }
    });
  }
  return out;
}

Tensor global_avgpool(Tape& tape, const Tensor& input, const std::string& label) {
  require_rank(input, 4, label);
  const std::size_t n = input.dim(0), c = input.dim(1);
  const std::size_t area = input.dim(2) * input.dim(3);
  if (area == 0) throw std::invalid_argument(label + ": empty spatial extent");
  Tensor out(Shape{n, c});
  auto x = input.data();
  auto y = out.data();
  const float inv = 1.0f / static_cast<float>(area);
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n * c; ++i) {
    float s = 0.0f;
    for (std::size_t k = 0; k < area; ++k) s += x[i * area + k];
    y[i] = s * inv;
  }
  if (tape.wants({&input})) {
    tape.record(label, {input}, out, [=]() mutable {
      auto dy = out.grad();
      auto dx = input.grad();
      for (std::size_t i = 0; i < n * c; ++i) {
        const float g = dy[i] * inv;
        for (std::size_t k = 0; k < area; ++k) dx[i * area + k] += g;
      }
    });
  }
  return out;
}

Tensor concat_channels(Tape& tape, const Tensor& a, const Tensor& b,
                       const std::string& label) {
  require_rank(a, 4, label);
  require_rank(b, 4, label);
  if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
    throw std::invalid_argument(label + ": cannot concatenate " + to_string(a.shape()) +
                                " with " + to_string(b.shape()));
  }
  const std::size_t n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
  const std::size_t area = a.dim(2) * a.dim(3);
  Tensor out(Shape{n, ca + cb, a.dim(2), a.dim(3)});
  auto y = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    std::copy_n(a.data().data() + i * ca * area, ca * area,
                y.data() + i * (ca + cb) * area);
    std::copy_n(b.data().data() + i * cb * area, cb * area,
                y.data() + (i * (ca + cb) + ca) * area);
  }
  if (tape.wants({&a, &b})) {
    tape.record(label, {a, b}, out, [=]() mutable {
      auto dy = out.grad();
      for (std::size_t i = 0; i < n; ++i) {
        const float* src = dy.data() + i * (ca + cb) * area;
        if (a.requires_grad()) {
          float* da = a.grad().data() + i * ca * area;
          for (std::size_t k = 0; k < ca * area; ++k) da[k] += src[k];
        }
        if (b.requires_grad()) {
          float* dbp = b.grad().data() + i * cb * area;
          for (std::size_t k = 0; k < cb * area; ++k) dbp[k] += src[ca * area + k];
        }
      }
    });
  }
  return out;
}

Tensor relu(Tape& tape, const Tensor& input, const std::string& label) {
  Tensor out(input.shape());
  auto x = input.data();
  auto y = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
  if (tape.wants({&input})) {
    tape.record(label, {input}, out, [=]() mutable {
      auto dy = out.grad();
      auto dx = input.grad();
      auto xv = input.data();
      for (std::size_t i = 0; i < dx.size(); ++i)
        if (xv[i] > 0.0f) dx[i] += dy[i];
    });
  }
  return out;
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b, const std::string& label) {
  require_same_shape(a, b, label);
  Tensor out(a.shape());
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] + b[i];
  if (tape.wants({&a, &b})) {
    tape.record(label, {a, b}, out, [=]() mutable {
      auto dy = out.grad();
      if (a.requires_grad()) {
        auto da = a.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
      }
      if (b.requires_grad()) {
        auto dbv = b.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) dbv[i] += dy[i];
      }
    });
  }
  return out;
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b, const std::string& label) {
  require_same_shape(a, b, label);
  Tensor out(a.shape());
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = a[i] * b[i];
  if (tape.wants({&a, &b})) {
    tape.record(label, {a, b}, out, [=]() mutable {
      auto dy = out.grad();
      if (a.requires_grad()) {
        auto da = a.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * b[i];
      }
      if (b.requires_grad()) {
        auto dbv = b.grad();
        for (std::size_t i = 0; i < dy.size(); ++i) dbv[i] += dy[i] * a[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape& tape, const Tensor& input, float factor, const std::string& label) {
  Tensor out(input.shape());
  auto y = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = input[i] * factor;
  if (tape.wants({&input})) {
    tape.record(label, {input}, out, [=]() mutable {
      auto dy = out.grad();
      auto dx = input.grad();
      for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * factor;
    });
  }
  return out;
}

Tensor sum(Tape& tape, const Tensor& input, const std::string& label) {
  float s = 0.0f;
  for (float v : input.data()) s += v;
  Tensor out = Tensor::scalar(s);
  if (tape.wants({&input})) {
    tape.record(label, {input}, out, [=]() mutable {
      const float g = out.grad()[0];
      for (float& d : input.grad()) d += g;
    });
  }
  return out;
}

Tensor mean_of(Tape& tape, std::span<const Tensor> inputs, const std::string& label) {
  if (inputs.empty()) throw std::invalid_argument(label + ": no inputs");
  for (const auto& t : inputs) require_same_shape(inputs[0], t, label);
  Tensor out(inputs[0].shape());
  auto y = out.data();
  const float inv = 1.0f / static_cast<float>(inputs.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    float s = 0.0f;
    for (const auto& t : inputs) s += t[i];
    y[i] = s * inv;
  }
  bool any = false;
  for (const auto& t : inputs) any = any || tape.wants({&t});
  if (any) {
    std::vector<Tensor> ins(inputs.begin(), inputs.end());
    tape.record(label, ins, out, [=]() mutable {
      auto dy = out.grad();
      for (auto& t : ins) {
        if (!t.requires_grad()) continue;
        auto dx = t.grad();
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * inv;
      }
    });
  }
  return out;
}

}  // namespace snn
