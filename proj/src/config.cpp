#include "snn/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "text_util.hpp"

namespace snn {

using detail::trim;

namespace {

const std::vector<std::pair<std::string, std::string>>& defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      // synth | cifar10 | cifar100 | tinyimagenet
      {"data.source", "synth"},
      {"data.path", ""},
      // auto: val for tinyimagenet, test otherwise
      {"data.eval_split", "auto"},
      // 0 keeps every sample
      {"data.limit", "0"},
      {"data.normalize", "true"},
      {"data.synth.classes", "4"},
      {"data.synth.per_class", "200"},
      {"data.synth.size", "16"},
      {"data.synth.seed", "42"},

      {"arch.mode", "snn"},
      {"arch.schedule", "Full"},
      // overrides the schedule when non-empty, e.g. fire4,fire6
      {"arch.retained", ""},
      {"arch.num_classes", "0"},
      {"arch.width_mult", "1"},
      {"arch.time_steps", "4"},
      {"arch.conv1", "96,3,1,1"},
      {"arch.fire2", "16,64,64"},
      {"arch.fire3", "16,64,64"},
      {"arch.fire4", "32,128,128"},
      {"arch.fire5", "32,128,128"},
      {"arch.fire6", "48,192,192"},
      {"arch.fire7", "48,192,192"},
      {"arch.fire8", "64,256,256"},
      {"arch.fire9", "64,256,256"},
      {"arch.pool_after", "conv1,2,4"},
      // auto: 4 for snn, sqrt(6) for cnn
      {"arch.init_gain", "auto"},

      {"lif.tau", "2"},
      {"lif.v_th", "1"},
      {"lif.v_rest", "0"},
      {"lif.v_reset", "0"},
      {"lif.resistance", "1"},
      {"lif.leak_enabled", "false"},
      {"lif.leak_factor", "0.1"},
      {"lif.alpha", "2"},

      {"train.lr", "0.001"},
      {"train.decay_factor", "0.1"},
      {"train.decay_epochs", "50,100"},
      {"train.batch_size", "12"},
      {"train.max_epochs", "120"},
      {"train.patience", "10"},
      {"train.seed", "42"},
      {"train.lambda", "0.1"},
      {"train.epsilon", "1e-08"},
      {"train.ga_mode", "monitor"},
      {"train.ce_averaging", "logits"},
      {"train.val_fraction", "0.1"},
      {"train.target_train_acc", "0"},

      {"profile.batch", "16"},
      {"profile.first_layer_per_step", "false"},
      {"profile.neuron_update_macs", "true"},
      {"profile.model", "SNN-SqueezeNet"},
      // checkpoint of the ReLU twin; fills delta_acc when set
      {"profile.cnn_checkpoint", ""},

      {"checkpoint.path", ""},

      {"ablate.train", "false"},
      {"ablate.smoke_epochs", "20"},

      // bench rows for `report`; empty reads <out>/bench.csv
      {"report.input", ""},
  };
  return d;
}

std::string unknown_key_message(const std::vector<std::string>& bad,
                                std::string_view origin) {
  std::string msg = std::string(origin) + ": unknown key";
  msg += bad.size() > 1 ? "s " : " ";
  for (std::size_t i = 0; i < bad.size(); ++i) msg += (i ? ", " : "") + bad[i];
  return msg;
}

}  // namespace

Config::Config() {
  for (const auto& [k, v] : defaults()) values_[k] = v;
}

const std::vector<std::string>& Config::keys() {
  static const std::vector<std::string> k = [] {
    std::vector<std::string> out;
    for (const auto& kv : defaults()) out.push_back(kv.first);
    return out;
  }();
  return k;
}

Config Config::from_text(std::string_view text, std::string_view origin) {
  Config cfg;
  std::vector<std::string> unknown;
  std::string section;
  std::istringstream in{std::string(text)};
  int lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    auto line = trim(raw);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = trim(line.substr(0, hash));
    }
    if (line.empty()) continue;
    // [section] headers prefix the keys that follow.
    if (line.front() == '[' && line.back() == ']') {
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument(std::string(origin) + ":" + std::to_string(lineno) +
                                  ": expected key=value");
    }
    std::string key(trim(line.substr(0, eq)));
    if (!section.empty()) key = section + "." + key;
    const std::string value(trim(line.substr(eq + 1)));
    if (!cfg.has(key)) {
      unknown.push_back(key);
      continue;
    }
    cfg.values_[key] = value;
  }
  if (!unknown.empty()) throw std::invalid_argument(unknown_key_message(unknown, origin));
  return cfg;
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str(), path.string());
}

void Config::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw std::invalid_argument("--set expects key=value, got '" + std::string(assignment) +
                                "'");
  }
  set(std::string(trim(assignment.substr(0, eq))),
      std::string(trim(assignment.substr(eq + 1))));
}

void Config::set(const std::string& key, const std::string& value) {
  if (!has(key)) throw std::invalid_argument(unknown_key_message({key}, "--set"));
  values_[key] = value;
}

const std::string& Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw std::invalid_argument("config: no key " + key);
  return it->second;
}

long long Config::get_int(const std::string& key) const {
  return detail::parse_int(get(key), key);
}

double Config::get_double(const std::string& key) const {
  return detail::parse_double(get(key), key);
}

bool Config::get_bool(const std::string& key) const {
  return detail::parse_bool(get(key), key);
}

std::string Config::to_text() const {
  std::ostringstream os;
  for (const auto& key : keys()) os << key << "=" << values_.at(key) << "\n";
  return os.str();
}

ArchSpec arch_from_config(const Config& cfg, int num_classes) {
  std::ostringstream text;
  text << "mode=" << cfg.get("arch.mode") << "\n";
  text << "time_steps=" << cfg.get("arch.time_steps") << "\n";
  text << "conv1=" << cfg.get("arch.conv1") << "\n";
  for (int f = kFirstFire; f < kFirstFire + kFireCount; ++f) {
    const std::string key = "fire" + std::to_string(f);
    text << key << "=" << cfg.get("arch." + key) << "\n";
  }
  text << "pool_after=" << cfg.get("arch.pool_after") << "\n";
  ArchSpec spec = parse_arch_text(text.str());

  const auto classes = cfg.get_int("arch.num_classes");
  spec.num_classes = classes > 0 ? static_cast<int>(classes) : num_classes;
  spec = with_schedule(spec, cfg.get("arch.schedule"));
  if (!cfg.get("arch.retained").empty()) spec.retained = parse_mask_list(cfg.get("arch.retained"));
  const double mult = cfg.get_double("arch.width_mult");
  if (mult != 1.0) spec = scale_width(spec, mult);
  spec.validate();
  return spec;
}

TrainConfig train_from_config(const Config& cfg) {
  TrainConfig t;
  t.lr = static_cast<float>(cfg.get_double("train.lr"));
  t.decay_factor = static_cast<float>(cfg.get_double("train.decay_factor"));
  t.decay_epochs.clear();
  if (!cfg.get("train.decay_epochs").empty()) {
    for (const auto& part : detail::split(cfg.get("train.decay_epochs"), ',')) {
      t.decay_epochs.push_back(static_cast<int>(detail::parse_int(part, "train.decay_epochs")));
    }
  }
  t.batch_size = static_cast<int>(cfg.get_int("train.batch_size"));
  t.max_epochs = static_cast<int>(cfg.get_int("train.max_epochs"));
  t.patience = static_cast<int>(cfg.get_int("train.patience"));
  const auto seed = cfg.get_int("train.seed");
  if (seed < 0) throw std::invalid_argument("train.seed must be >= 0");
  t.seed = static_cast<std::uint64_t>(seed);
  t.lambda = static_cast<float>(cfg.get_double("train.lambda"));
  t.epsilon = static_cast<float>(cfg.get_double("train.epsilon"));
  t.time_steps = static_cast<int>(cfg.get_int("arch.time_steps"));
  t.ga_mode = parse_ga_mode(cfg.get("train.ga_mode"));
  t.ce_averaging = parse_ce_averaging(cfg.get("train.ce_averaging"));
  t.val_fraction = cfg.get_double("train.val_fraction");
  t.target_train_acc = cfg.get_double("train.target_train_acc");
  t.validate();
  return t;
}

LifParams lif_from_config(const Config& cfg) {
  LifParams p;
  p.tau = static_cast<float>(cfg.get_double("lif.tau"));
  p.v_th = static_cast<float>(cfg.get_double("lif.v_th"));
  p.v_rest = static_cast<float>(cfg.get_double("lif.v_rest"));
  p.v_reset = static_cast<float>(cfg.get_double("lif.v_reset"));
  p.resistance = static_cast<float>(cfg.get_double("lif.resistance"));
  p.leak_enabled = cfg.get_bool("lif.leak_enabled");
  p.leak_factor = static_cast<float>(cfg.get_double("lif.leak_factor"));
  p.alpha = static_cast<float>(cfg.get_double("lif.alpha"));
  p.validate();
  return p;
}

ProfileOptions profile_from_config(const Config& cfg) {
  ProfileOptions o;
  o.first_layer_per_step = cfg.get_bool("profile.first_layer_per_step");
  o.neuron_update_macs = cfg.get_bool("profile.neuron_update_macs");
  o.time_steps = static_cast<int>(cfg.get_int("arch.time_steps"));
  o.lif = lif_from_config(cfg);
  return o;
}

}  // namespace snn
