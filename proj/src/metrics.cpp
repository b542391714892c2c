#include "snn/metrics.hpp"

#include <stdexcept>
#include <string>

namespace snn {

MetricsReport evaluate(std::span<const int> predictions, std::span<const int> labels,
                       int class_count) {
  if (predictions.size() != labels.size()) {
    throw std::invalid_argument("evaluate: " + std::to_string(predictions.size()) +
                                " predictions for " + std::to_string(labels.size()) +
                                " labels");
  }
  if (class_count < 1) throw std::invalid_argument("evaluate: class_count must be >= 1");
  const auto c = static_cast<std::size_t>(class_count);
  MetricsReport r;
  r.class_count = class_count;
  r.confusion.assign(c * c, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || t >= class_count || p < 0 || p >= class_count) {
      throw std::invalid_argument("evaluate: class index out of range at sample " +
                                  std::to_string(i));
    }
    ++r.confusion[std::size_t(t) * c + std::size_t(p)];
  }

  std::uint64_t correct = 0;
  r.per_class.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    const std::uint64_t tp = r.confusion[k * c + k];
    std::uint64_t predicted = 0, actual = 0;
    for (std::size_t j = 0; j < c; ++j) {
      predicted += r.confusion[j * c + k];
      actual += r.confusion[k * c + j];
    }
    correct += tp;
    auto& s = r.per_class[k];
    s.support = actual;
    s.precision = predicted ? double(tp) / double(predicted) : 0.0;
    s.recall = actual ? double(tp) / double(actual) : 0.0;
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    r.macro_f1 += s.f1;
  }
  r.macro_f1 /= double(c);
  r.accuracy = labels.empty() ? 0.0 : double(correct) / double(labels.size());
  return r;
}

}  // namespace snn
