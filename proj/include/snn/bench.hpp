#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace snn {

struct BenchRow {
  std::string model;
  std::string schedule;
  std::string dataset;
  double acc = 0.0;
  double f1 = 0.0;
  std::uint64_t ac = 0;
  std::uint64_t mac = 0;
  std::uint64_t params = 0;
  double energy_mj = 0.0;
  std::optional<double> eta;
  std::optional<double> delta_acc;
};

inline constexpr const char* kBenchHeader =
    "model,schedule,dataset,acc,f1,ac,mac,params,energy_mj,eta,delta_acc";

// energy_mj is recomputed from ac/mac on write.
void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows);
// Rejects a wrong header, malformed rows, or an energy column that does not
// match its counts.
std::vector<BenchRow> read_bench_csv(std::istream& is);

// Rows not dominated by another row (acc >= and energy <=, one strictly).
std::vector<bool> pareto_front(std::span<const BenchRow> rows);

// Scatter of accuracy against log10 energy, frontier rows highlighted.
void write_report_svg(std::ostream& os, std::span<const BenchRow> rows,
                      const std::vector<bool>& pareto);
// model,schedule,dataset,acc,energy_mj,pareto
void write_summary_csv(std::ostream& os, std::span<const BenchRow> rows,
                       const std::vector<bool>& pareto);

}  // namespace snn
