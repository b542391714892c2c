#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace snn {

enum class NetMode { snn, cnn };

std::string_view to_string(NetMode mode);
NetMode parse_net_mode(std::string_view text);

struct StemSpec {
  int filters = 96;
  int kernel = 3;
  int stride = 1;
  int padding = 1;

  bool operator==(const StemSpec&) const = default;
};

// 1x1 squeeze followed by parallel 1x1 / 3x3 expands whose outputs are
// concatenated.
struct FireSpec {
  int squeeze = 0;
  int expand1 = 0;
  int expand3 = 0;

  int out_channels() const { return expand1 + expand3; }
  bool operator==(const FireSpec&) const = default;
};

inline constexpr int kFirstFire = 2;
inline constexpr int kFireCount = 8;  // fire2 .. fire9

using FireMask = std::array<bool, kFireCount>;

struct ArchSpec {
  int in_channels = 3;
  StemSpec conv1;
  std::array<FireSpec, kFireCount> fires{{{16, 64, 64},
                                          {16, 64, 64},
                                          {32, 128, 128},
                                          {32, 128, 128},
                                          {48, 192, 192},
                                          {48, 192, 192},
                                          {64, 256, 256},
                                          {64, 256, 256}}};
  FireMask retained{true, true, true, true, true, true, true, true};
  // 3x3/2 max-pool after the stem and after the k-th retained fire (1-based).
  bool pool_after_conv1 = true;
  std::vector<int> pool_after_fires{2, 4};
  int num_classes = 10;
  NetMode mode = NetMode::snn;
  int time_steps = 4;

  void validate() const;
  bool operator==(const ArchSpec&) const = default;

  // Fire numbers (2..9) of the retained modules, in order.
  std::vector<int> retained_fires() const;
};

// All channel widths scaled by `mult` (rounded, at least 1).
ArchSpec scale_width(ArchSpec spec, double mult);

// key=value lines, one per field.
std::string to_text(const ArchSpec& spec);
ArchSpec parse_arch_text(std::string_view text);

// Pruning schedules ----------------------------------------------------------

struct PruneSchedule {
  std::string name;
  FireMask mask;
};

const std::vector<PruneSchedule>& prune_schedules();
FireMask schedule_mask(std::string_view name);
// "F4 F6 F8 F9"
std::string mask_label(const FireMask& mask);
// "fire4,fire6,fire8,fire9"
std::string mask_list(const FireMask& mask);
FireMask parse_mask_list(std::string_view text);

ArchSpec with_schedule(ArchSpec spec, std::string_view schedule);

// Channel plan ---------------------------------------------------------------

struct FireChannels {
  int fire = 0;  // 2..9
  int in_channels = 0;
  int out_channels = 0;
};

struct ChannelPlan {
  int conv1_out = 0;
  std::vector<FireChannels> fires;
  int classifier_in = 0;
};

ChannelPlan rewire(const ArchSpec& spec);

std::uint64_t conv_params(std::uint64_t in, std::uint64_t out, std::uint64_t kh,
                          std::uint64_t kw);
std::uint64_t fire_params(std::uint64_t in, const FireSpec& fire);
std::uint64_t count_params(const ArchSpec& spec);

}  // namespace snn
