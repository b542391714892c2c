#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "snn/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"SNN SqueezeNet training and profiling"};
  app.set_help_all_flag("--help-all");
  snn::RunOptions opts;
  std::string config, out;
  app.add_option("command", opts.command, "train | eval | profile | ablate | report")
      ->required()
      ->check(CLI::IsMember({"train", "eval", "profile", "ablate", "report"}));
  app.add_option("--config", config, "key=value config file");
  app.add_option("--set", opts.overrides, "override, key=value (repeatable)")
      ->allow_extra_args(false);
  app.add_option("--out", out, "output directory")->required();
  app.add_flag("--full-scale", opts.full_scale, "ablate: train every schedule at full scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "snnbench: " << e.what() << "\n";
    return 2;
  }
  opts.config_path = config;
  opts.out_dir = out;
  try {
    snn::run_command(opts, std::cout);
  } catch (const std::exception& e) {
    std::cerr << "snnbench: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
