#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "snn/arch.hpp"
#include "snn/lif.hpp"
#include "snn/profiler.hpp"
#include "snn/train.hpp"

namespace snn {

// Flat dotted-key configuration (train.lr=0.001). Every known key carries a
// default; unknown keys are rejected.
class Config {
 public:
  Config();

  static Config from_text(std::string_view text, std::string_view origin = "config");
  static Config from_file(const std::filesystem::path& path);

  // "key=value", as passed to --set.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key) const { return get(key); }
  long long get_int(const std::string& key) const;
  double get_double(const std::string& key) const;
  bool get_bool(const std::string& key) const;

  // Every key in canonical order, one key=value per line.
  std::string to_text() const;

  bool operator==(const Config& other) const { return values_ == other.values_; }

  static const std::vector<std::string>& keys();

 private:
  std::map<std::string, std::string> values_;
};

// Typed views. `num_classes` fills arch.num_classes=0 (take from the data).
ArchSpec arch_from_config(const Config& cfg, int num_classes);
TrainConfig train_from_config(const Config& cfg);
LifParams lif_from_config(const Config& cfg);
ProfileOptions profile_from_config(const Config& cfg);

}  // namespace snn
