#include "snn/tape.hpp"

#include <cmath>
#include <stdexcept>

namespace snn {

bool Tape::wants(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  for (const Tensor* t : inputs) {
    if (t && t->defined() && t->requires_grad()) return true;
  }
  return false;
}

void Tape::record(std::string label, std::vector<Tensor> inputs, Tensor output,
                  std::function<void()> backward) {
  output.set_requires_grad(true);
  nodes_.push_back(Node{std::move(label), std::move(inputs), std::move(output),
                        std::move(backward)});
}

void backward(Tape& tape, Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward() needs a scalar loss");
  }
  const auto& nodes = tape.nodes();
  std::size_t end = nodes.size();
  while (end > 0 && nodes[end - 1].output.id() != loss.id()) --end;
  if (end == 0) {
    throw std::logic_error(
        "backward() called before a forward pass recorded the loss");
  }

  loss.grad()[0] += 1.0f;
  for (std::size_t i = end; i-- > 0;) {
    const auto& node = nodes[i];
    if (!node.output.has_grad()) continue;  // not on a path to the loss
    node.backward();
    for (const auto& in : node.inputs) {
      if (!in.requires_grad() || !in.has_grad()) continue;
      for (float g : in.grad()) {
        if (std::isnan(g)) {
          throw std::runtime_error("NaN gradient produced by layer '" +
                                   node.label + "'");
        }
      }
    }
  }
}

}  // namespace snn
