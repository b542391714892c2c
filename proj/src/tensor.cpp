#include "snn/tensor.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace snn {

namespace {
std::atomic<std::uint64_t> next_tensor_id{1};
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, float fill, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  impl_->data.assign(snn::numel(shape), fill);
  impl_->shape = std::move(shape);
  impl_->requires_grad = requires_grad;
  impl_->id = next_tensor_id++;
}

Tensor::Tensor(Shape shape, std::vector<float> values, bool requires_grad)
    : impl_(std::make_shared<Impl>()) {
  if (snn::numel(shape) != values.size()) {
    throw std::invalid_argument("tensor shape " + to_string(shape) + " holds " +
                                std::to_string(snn::numel(shape)) +
                                " values, got " + std::to_string(values.size()));
  }
  impl_->shape = std::move(shape);
  impl_->data = std::move(values);
  impl_->requires_grad = requires_grad;
  impl_->id = next_tensor_id++;
}

Tensor Tensor::scalar(float value, bool requires_grad) {
  return Tensor(Shape{1}, std::vector<float>{value}, requires_grad);
}

Tensor::Impl& Tensor::impl() {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return *impl_;
}

const Tensor::Impl& Tensor::impl() const {
  if (!impl_) throw std::logic_error("use of undefined tensor");
  return *impl_;
}

std::uint64_t Tensor::id() const { return impl_ ? impl_->id : 0; }
const Shape& Tensor::shape() const { return impl().shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) {
    throw std::out_of_range("axis " + std::to_string(axis) +
                            " out of range for shape " + to_string(s));
  }
  return s[axis];
}

std::size_t Tensor::numel() const { return impl().data.size(); }
std::span<float> Tensor::data() { return impl().data; }
std::span<const float> Tensor::data() const { return impl().data; }

float Tensor::item() const {
  if (numel() != 1) {
    throw std::invalid_argument("item() on tensor of shape " +
                                to_string(shape()));
  }
  return impl().data[0];
}

bool Tensor::requires_grad() const { return impl_ && impl_->requires_grad; }
void Tensor::set_requires_grad(bool value) { impl().requires_grad = value; }

bool Tensor::has_grad() const { return impl_ && !impl_->grad.empty(); }

std::span<float> Tensor::grad() const {
  auto& d = const_cast<Impl&>(impl());
  if (d.grad.size() != d.data.size()) d.grad.assign(d.data.size(), 0.0f);
  return d.grad;
}

void Tensor::zero_grad() {
  auto& d = impl();
  d.grad.assign(d.data.size(), 0.0f);
}

void Tensor::drop_grad() {
  auto& d = impl();
  d.grad.clear();
  d.grad.shrink_to_fit();
}

const std::string& Tensor::name() const { return impl().name; }
void Tensor::set_name(std::string name) { impl().name = std::move(name); }

Tensor Tensor::clone() const {
  Tensor out(shape(), std::vector<float>(data().begin(), data().end()),
             requires_grad());
  out.set_name(name());
  return out;
}

Tensor Tensor::detach() const {
  Tensor out(shape(), std::vector<float>(data().begin(), data().end()), false);
  out.set_name(name());
  return out;
}

bool all_finite(std::span<const float> values) {
  for (float v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace snn
