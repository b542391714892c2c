#include "snn/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "snn/profiler.hpp"
#include "text_util.hpp"

namespace snn {

using detail::format_double;

namespace {

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\"") != std::string::npos) {
    throw std::invalid_argument("bench field '" + s + "' contains a comma, quote or newline");
  }
}

std::string opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_bench_csv(std::ostream& os, std::span<const BenchRow> rows) {
  os << kBenchHeader << "\n";
  for (const auto& r : rows) {
    check_field(r.model);
    check_field(r.schedule);
    check_field(r.dataset);
    os << r.model << "," << r.schedule << "," << r.dataset << "," << format_double(r.acc)
       << "," << format_double(r.f1) << "," << r.ac << "," << r.mac << "," << r.params << ","
       << format_double(energy_mj(r.ac, r.mac)) << "," << opt(r.eta) << ","
       << opt(r.delta_acc) << "\n";
  }
}

std::vector<BenchRow> read_bench_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("bench csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kBenchHeader) {
    throw std::invalid_argument("bench csv: header must be '" + std::string(kBenchHeader) +
                                "'");
  }
  std::vector<BenchRow> rows;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    const std::string where = "bench csv line " + std::to_string(lineno);
    if (f.size() != 11) throw std::invalid_argument(where + ": expected 11 fields");
    auto count = [&](const std::string& s) {
      const auto v = detail::parse_int(s, where);
      if (v < 0) throw std::invalid_argument(where + ": negative count");
      return static_cast<std::uint64_t>(v);
    };
    BenchRow r;
    r.model = f[0];
    r.schedule = f[1];
    r.dataset = f[2];
    r.acc = detail::parse_double(f[3], where);
    r.f1 = detail::parse_double(f[4], where);
    r.ac = count(f[5]);
    r.mac = count(f[6]);
    r.params = count(f[7]);
    r.energy_mj = detail::parse_double(f[8], where);
    if (!f[9].empty()) r.eta = detail::parse_double(f[9], where);
    if (!f[10].empty()) r.delta_acc = detail::parse_double(f[10], where);
    if (r.energy_mj != energy_mj(r.ac, r.mac)) {
      throw std::invalid_argument(where + ": energy_mj " + f[8] + " does not match ac/mac (" +
                                  format_double(energy_mj(r.ac, r.mac)) + ")");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw std::invalid_argument("bench csv: no rows");
  return rows;
}

std::vector<bool> pareto_front(std::span<const BenchRow> rows) {
  const std::size_t n = rows.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a].energy_mj != rows[b].energy_mj) return rows[a].energy_mj < rows[b].energy_mj;
    return rows[a].acc > rows[b].acc;
  });
  std::vector<bool> front(n, false);
  double best_cheaper = -INFINITY;  // best accuracy among strictly cheaper rows
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && rows[order[j]].energy_mj == rows[order[i]].energy_mj) ++j;
    const double top = rows[order[i]].acc;
    if (top > best_cheaper) {
      for (std::size_t k = i; k < j && rows[order[k]].acc == top; ++k) front[order[k]] = true;
    }
    best_cheaper = std::max(best_cheaper, top);
    i = j;
  }
  return front;
}

void write_report_svg(std::ostream& os, std::span<const BenchRow> rows,
                      const std::vector<bool>& pareto) {
  if (rows.empty()) throw std::invalid_argument("report: no rows");
  constexpr double W = 720, H = 460, left = 80, right = 170, top = 40, bottom = 60;
  const double pw = W - left - right, ph = H - top - bottom;

  double emin = INFINITY, emax = 0;
  for (const auto& r : rows)
    if (r.energy_mj > 0) emin = std::min(emin, r.energy_mj), emax = std::max(emax, r.energy_mj);
  if (!std::isfinite(emin)) emin = emax = 1e-3;
  double lo = std::floor(std::log10(emin)), hi = std::ceil(std::log10(emax));
  if (hi <= lo) hi = lo + 1;
  double amin = 0, amax = 1;
  for (const auto& r : rows) amin = std::min(amin, r.acc), amax = std::max(amax, r.acc);

  auto px = [&](double e) {
    const double le = e > 0 ? std::log10(e) : lo;
    return left + (le - lo) / (hi - lo) * pw;
  };
  auto py = [&](double a) { return top + (amax - a) / (amax - amin) * ph; };

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << "Accuracy vs energy</text>\n";
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";

  for (int d = int(lo); d <= int(hi); ++d) {
    const double x = px(std::pow(10.0, d));
    os << "<line x1=\"" << x << "\" y1=\"" << top << "\" x2=\"" << x << "\" y2=\"" << top + ph
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << x << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">1e"
       << d << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const double a = amin + (amax - amin) * k / 5.0;
    const double y = py(a);
    os << "<line x1=\"" << left << "\" y1=\"" << y << "\" x2=\"" << left + pw << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
       << format_double(std::round(a * 1000) / 1000) << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 18
     << "\" text-anchor=\"middle\">energy per image (mJ, log scale)</text>\n";
  os << "<text transform=\"translate(22," << top + ph / 2
     << ") rotate(-90)\" text-anchor=\"middle\">accuracy</text>\n";

  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const bool on = i < pareto.size() && pareto[i];
    const double x = px(r.energy_mj), y = py(r.acc);
    os << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"5\" fill=\""
       << (on ? "#d62728" : "#1f77b4") << "\" stroke=\"black\" stroke-width=\"0.5\"><title>"
       << xml_escape(r.model + " " + r.schedule) << " acc=" << format_double(r.acc)
       << " E=" << format_double(r.energy_mj) << " mJ</title></circle>\n";
    os << "<text x=\"" << x + 7 << "\" y=\"" << y - 6 << "\">" << xml_escape(r.schedule)
       << "</text>\n";
  }
  const double lx = left + pw + 16;
  os << "<circle cx=\"" << lx << "\" cy=\"" << top + 10 << "\" r=\"5\" fill=\"#d62728\"/>\n";
  os << "<text x=\"" << lx + 10 << "\" y=\"" << top + 14 << "\">Pareto frontier</text>\n";
  os << "<circle cx=\"" << lx << "\" cy=\"" << top + 30 << "\" r=\"5\" fill=\"#1f77b4\"/>\n";
  os << "<text x=\"" << lx + 10 << "\" y=\"" << top + 34 << "\">dominated</text>\n";
  os << "</svg>\n";
}

void write_summary_csv(std::ostream& os, std::span<const BenchRow> rows,
                       const std::vector<bool>& pareto) {
  os << "model,schedule,dataset,acc,energy_mj,pareto\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << r.model << "," << r.schedule << "," << r.dataset << "," << format_double(r.acc) << ","
       << format_double(r.energy_mj) << "," << (pareto[i] ? 1 : 0) << "\n";
  }
}

}  // namespace snn
