#include "snn/arch.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

#include "text_util.hpp"

namespace snn {

using detail::parse_int;
using detail::split;
using detail::trim;

std::string_view to_string(NetMode mode) {
  return mode == NetMode::snn ? "snn" : "cnn";
}

NetMode parse_net_mode(std::string_view text) {
  text = trim(text);
  if (text == "snn" || text == "SNN") return NetMode::snn;
  if (text == "cnn" || text == "CNN") return NetMode::cnn;
  throw std::invalid_argument("unknown network mode '" + std::string(text) +
                              "' (expected snn or cnn)");
}

std::vector<int> ArchSpec::retained_fires() const {
  std::vector<int> out;
  for (int i = 0; i < kFireCount; ++i)
    if (retained[i]) out.push_back(kFirstFire + i);
  return out;
}

void ArchSpec::validate() const {
  if (in_channels < 1) throw std::invalid_argument("arch: in_channels must be >= 1");
  if (conv1.filters < 1 || conv1.kernel < 1 || conv1.stride < 1 || conv1.padding < 0) {
    throw std::invalid_argument("arch: invalid conv1 geometry");
  }
  for (int i = 0; i < kFireCount; ++i) {
    const auto& f = fires[i];
    if (f.squeeze < 1 || f.expand1 < 1 || f.expand3 < 1) {
      throw std::invalid_argument("arch: fire" + std::to_string(kFirstFire + i) +
                                  " needs all filter counts >= 1");
    }
  }
  if (std::none_of(retained.begin(), retained.end(), [](bool b) { return b; })) {
    throw std::invalid_argument("arch: retained mask is empty");
  }
  for (int k : pool_after_fires) {
    if (k < 1) throw std::invalid_argument("arch: pool positions are 1-based");
  }
  if (num_classes < 1) throw std::invalid_argument("arch: num_classes must be >= 1");
  if (time_steps < 1) throw std::invalid_argument("arch: time_steps must be >= 1");
}

ArchSpec scale_width(ArchSpec spec, double mult) {
  if (!(mult > 0.0)) throw std::invalid_argument("arch: width multiplier must be > 0");
  auto sc = [mult](int c) { return std::max(1, static_cast<int>(std::lround(c * mult))); };
  spec.conv1.filters = sc(spec.conv1.filters);
  for (auto& f : spec.fires) {
    f.squeeze = sc(f.squeeze);
    f.expand1 = sc(f.expand1);
    f.expand3 = sc(f.expand3);
  }
  return spec;
}

// Text form -----------------------------------------------------------------

std::string to_text(const ArchSpec& spec) {
  std::ostringstream os;
  os << "mode=" << to_string(spec.mode) << "\n";
  os << "in_channels=" << spec.in_channels << "\n";
  os << "num_classes=" << spec.num_classes << "\n";
  os << "time_steps=" << spec.time_steps << "\n";
  os << "conv1=" << spec.conv1.filters << "," << spec.conv1.kernel << ","
     << spec.conv1.stride << "," << spec.conv1.padding << "\n";
  for (int i = 0; i < kFireCount; ++i) {
    const auto& f = spec.fires[i];
    os << "fire" << kFirstFire + i << "=" << f.squeeze << "," << f.expand1 << ","
       << f.expand3 << "\n";
  }
  os << "retained=" << mask_list(spec.retained) << "\n";
  os << "pool_after=";
  bool first = true;
  if (spec.pool_after_conv1) {
    os << "conv1";
    first = false;
  }
  for (int k : spec.pool_after_fires) {
    os << (first ? "" : ",") << k;
    first = false;
  }
  os << "\n";
  return os.str();
}

ArchSpec parse_arch_text(std::string_view text) {
  ArchSpec spec;
  std::map<std::string, std::string> kv;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = trim(text.substr(start, end - start));
    start = end + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("arch text: expected key=value, got '" +
                                  std::string(line) + "'");
    }
    kv[std::string(trim(line.substr(0, eq)))] = std::string(trim(line.substr(eq + 1)));
  }

  auto ints = [](const std::string& v, std::size_t n, const std::string& key) {
    auto parts = split(v, ',');
    if (parts.size() != n) {
      throw std::invalid_argument("arch text: " + key + " expects " +
                                  std::to_string(n) + " comma-separated integers");
    }
    std::vector<int> out;
    for (auto& p : parts) out.push_back(static_cast<int>(parse_int(p, key)));
    return out;
  };

  for (const auto& [key, value] : kv) {
    if (key == "mode") {
      spec.mode = parse_net_mode(value);
    } else if (key == "in_channels") {
      spec.in_channels = static_cast<int>(parse_int(value, key));
    } else if (key == "num_classes") {
      spec.num_classes = static_cast<int>(parse_int(value, key));
    } else if (key == "time_steps") {
      spec.time_steps = static_cast<int>(parse_int(value, key));
    } else if (key == "conv1") {
      auto v = ints(value, 4, key);
      spec.conv1 = {v[0], v[1], v[2], v[3]};
    } else if (key.starts_with("fire") && key.size() == 5 && key[4] >= '2' &&
               key[4] <= '9') {
      auto v = ints(value, 3, key);
      spec.fires[key[4] - '2'] = {v[0], v[1], v[2]};
    } else if (key == "retained") {
      spec.retained = parse_mask_list(value);
    } else if (key == "pool_after") {
      spec.pool_after_conv1 = false;
      spec.pool_after_fires.clear();
      if (!value.empty()) {
        for (auto& p : split(value, ',')) {
          if (p == "conv1") {
            spec.pool_after_conv1 = true;
          } else {
            spec.pool_after_fires.push_back(static_cast<int>(parse_int(p, key)));
          }
        }
      }
    } else {
      throw std::invalid_argument("arch text: unknown key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

// Schedules -------------------------------------------------------------------

namespace {

FireMask mask_of(std::initializer_list<int> fires) {
  FireMask m{};
  for (int f : fires) m[f - kFirstFire] = true;
  return m;
}

}  // namespace

const std::vector<PruneSchedule>& prune_schedules() {
  static const std::vector<PruneSchedule> table{
      {"Full", mask_of({2, 3, 4, 5, 6, 7, 8, 9})},
      {"Head-1", mask_of({2, 3, 4, 5, 9})},
      {"Head-2", mask_of({2, 3, 4, 5, 8})},
      {"Tail-1", mask_of({2, 5, 6, 7, 8, 9})},
      {"Tail-2", mask_of({2, 4, 6, 7, 8, 9})},
      {"Alt-1", mask_of({2, 4, 6, 8})},
      {"Alt-2", mask_of({3, 5, 7, 9})},
      {"Ref-1", mask_of({4, 6, 8, 9})},
      {"Ref-2", mask_of({2, 4, 5, 6, 8, 9})},
  };
  return table;
}

FireMask schedule_mask(std::string_view name) {
  for (const auto& s : prune_schedules())
    if (s.name == name) return s.mask;
  std::string valid;
  for (const auto& s : prune_schedules()) valid += (valid.empty() ? "" : ", ") + s.name;
  throw std::invalid_argument("unknown pruning schedule '" + std::string(name) +
                              "'; valid: " + valid);
}

std::string mask_label(const FireMask& mask) {
  std::string out;
  for (int i = 0; i < kFireCount; ++i)
    if (mask[i]) out += (out.empty() ? "F" : " F") + std::to_string(kFirstFire + i);
  return out;
}

std::string mask_list(const FireMask& mask) {
  std::string out;
  for (int i = 0; i < kFireCount; ++i)
    if (mask[i]) out += (out.empty() ? "fire" : ",fire") + std::to_string(kFirstFire + i);
  return out;
}

FireMask parse_mask_list(std::string_view text) {
  FireMask m{};
  for (auto& item : split(text, ',')) {
    std::string_view s = item;
    if (s.starts_with("fire")) {
      s.remove_prefix(4);
    } else if (s.starts_with("F") || s.starts_with("f")) {
      s.remove_prefix(1);
    }
    if (s.size() != 1 || s[0] < '2' || s[0] > '9') {
      throw std::invalid_argument("unknown fire module '" + item +
                                  "' (expected fire2..fire9)");
    }
    m[s[0] - '2'] = true;
  }
  return m;
}

ArchSpec with_schedule(ArchSpec spec, std::string_view schedule) {
  spec.retained = schedule_mask(schedule);
  return spec;
}

// Channels and parameters ------------------------------------------------------

ChannelPlan rewire(const ArchSpec& spec) {
  ChannelPlan plan;
  plan.conv1_out = spec.conv1.filters;
  int producer = plan.conv1_out;
  for (int fire : spec.retained_fires()) {
    const auto& f = spec.fires[fire - kFirstFire];
    plan.fires.push_back({fire, producer, f.out_channels()});
    producer = f.out_channels();
  }
  plan.classifier_in = producer;
  return plan;
}

std::uint64_t conv_params(std::uint64_t in, std::uint64_t out, std::uint64_t kh,
                          std::uint64_t kw) {
  return out * in * kh * kw + out;
}

std::uint64_t fire_params(std::uint64_t in, const FireSpec& f) {
  const std::uint64_t s = f.squeeze, e1 = f.expand1, e3 = f.expand3;
  return in * s + s + s * e1 + e1 + 9 * s * e3 + e3;
}

std::uint64_t count_params(const ArchSpec& spec) {
  spec.validate();
  const auto plan = rewire(spec);
  std::uint64_t total = conv_params(spec.in_channels, spec.conv1.filters,
                                    spec.conv1.kernel, spec.conv1.kernel);
  for (const auto& fc : plan.fires)
    total += fire_params(fc.in_channels, spec.fires[fc.fire - kFirstFire]);
  total += conv_params(plan.classifier_in, spec.num_classes, 1, 1);
  return total;
}

}  // namespace snn
