#pragma once

#include <functional>
#include <string>
#include <vector>

#include "snn/tensor.hpp"

namespace snn {

// Ordered record of executed differentiable ops. Every op appends exactly one
// node after its inputs exist, so the node list is already topologically
// sorted and backward() just walks it in reverse.
class Tape {
 public:
  struct Node {
    std::string label;
    std::vector<Tensor> inputs;
    Tensor output;
    // Reads output.grad() and accumulates into inputs that require grad.
    std::function<void()> backward;
  };

  Tape() = default;
  explicit Tape(bool recording) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  bool recording() const { return recording_; }
  void set_recording(bool value) { recording_ = value; }

  // True when an op over `inputs` must be recorded.
  bool wants(std::initializer_list<const Tensor*> inputs) const;

  // Appends a node; marks `output` as requiring grad.
  void record(std::string label, std::vector<Tensor> inputs, Tensor output,
              std::function<void()> backward);

  const std::vector<Node>& nodes() const { return nodes_; }
  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  bool recording_ = true;
  std::vector<Node> nodes_;
};

// Reverse-mode sweep from a scalar loss. Gradients accumulate into every
// tensor that requires grad; leaves keep them until zero_grad(). Throws if the
// loss was not produced on this tape or a NaN gradient appears (the message
// names the offending node).
void backward(Tape& tape, Tensor& loss);

}  // namespace snn
