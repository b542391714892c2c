#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include "snn/config.hpp"
#include "snn/data.hpp"

namespace snn {

struct RunOptions {
  std::string command;  // train | eval | profile | ablate | report
  std::filesystem::path config_path;
  std::vector<std::string> overrides;
  std::filesystem::path out_dir;
  bool full_scale = false;
};

// Config file (if any) with --set overrides applied on top.
Config effective_config(const RunOptions& options);

// Dataset named by data.* keys, normalized when data.normalize is set.
Dataset load_dataset(const Config& cfg, Split split);
std::string dataset_name(const Config& cfg);

// Runs one command; progress goes to `log`. Throws on any failure.
void run_command(const RunOptions& options, std::ostream& log);

void cmd_train(const Config& cfg, const std::filesystem::path& out, std::ostream& log);
void cmd_eval(const Config& cfg, const std::filesystem::path& out, std::ostream& log);
void cmd_profile(const Config& cfg, const std::filesystem::path& out, std::ostream& log);
void cmd_ablate(const Config& cfg, const std::filesystem::path& out, bool full_scale,
                std::ostream& log);
void cmd_report(const Config& cfg, const std::filesystem::path& out, std::ostream& log);

}  // namespace snn
