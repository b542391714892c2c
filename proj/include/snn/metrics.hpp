#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace snn {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct MetricsReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
  // confusion[truth * classes + predicted]
  std::vector<std::uint64_t> confusion;
  int class_count = 0;
};

// Top-1 accuracy and unweighted macro F1; a class with P + R = 0 scores F1 = 0.
MetricsReport evaluate(std::span<const int> predictions, std::span<const int> labels,
                       int class_count);

}  // namespace snn
