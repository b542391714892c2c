#include "snn/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "snn/bench.hpp"
#include "snn/metrics.hpp"
#include "snn/network.hpp"
#include "snn/profiler.hpp"
#include "snn/train.hpp"
#include "text_util.hpp"

namespace fs = std::filesystem;

namespace snn {

using detail::format_double;

namespace {

// Writes each line to the console stream and to <out>/run.log.
class RunLog {
 public:
  RunLog(std::ostream& console, const fs::path& out)
      : console_(console), file_(out / "run.log", std::ios::app) {}

  void line(const std::string& text) {
    console_ << text << "\n";
    file_ << text << "\n";
    file_.flush();
  }

 private:
  std::ostream& console_;
  std::ofstream file_;
};

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

ForwardOptions forward_from_config(const Config& cfg) {
  ForwardOptions f;
  f.lif = lif_from_config(cfg);
  f.time_steps = static_cast<int>(cfg.get_int("arch.time_steps"));
  return f;
}

Network build_network(const Config& cfg, int num_classes) {
  const auto seed = train_from_config(cfg).seed;
  std::optional<float> gain;
  if (cfg.get("arch.init_gain") != "auto") {
    gain = static_cast<float>(cfg.get_double("arch.init_gain"));
  }
  return Network::build(arch_from_config(cfg, num_classes), seed, gain);
}

std::string schedule_name(const ArchSpec& spec) {
  for (const auto& s : prune_schedules())
    if (s.mask == spec.retained) return s.name;
  return "custom";
}

Network load_or_build(const Config& cfg, int num_classes, RunLog& log) {
  const auto& path = cfg.get("checkpoint.path");
  if (path.empty()) {
    log.line("no checkpoint.path; profiling freshly initialised weights");
    return build_network(cfg, num_classes);
  }
  if (!fs::exists(path)) throw std::runtime_error("missing checkpoint " + path);
  Network net = load_checkpoint(path);
  log.line("loaded " + path);
  return net;
}

Split eval_split(const Config& cfg) {
  const auto& s = cfg.get("data.eval_split");
  if (s == "auto") return cfg.get("data.source") == "tinyimagenet" ? Split::val : Split::test;
  return parse_split(s);
}

Tensor first_images(const Dataset& data, std::size_t n) {
  n = std::min(n, data.size());
  if (n == 0) throw std::invalid_argument("profile: dataset is empty");
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  return data.gather(idx);
}

struct Profiled {
  BenchRow row;
  std::vector<LayerProfile> layers;
  double firing_rate = 0.0;
};

Profiled profile_network(const Network& net, const Dataset& eval, const Config& cfg,
                         const std::string& schedule) {
  const auto fwd = forward_from_config(cfg);
  auto opts = profile_from_config(cfg);
  const auto batch = first_images(eval, static_cast<std::size_t>(cfg.get_int("profile.batch")));
  const auto prof = profile_forward(net, batch, opts);

  std::vector<int> preds;
  accuracy(net, eval, fwd, 64, &preds);
  const auto metrics = evaluate(preds, eval.labels, eval.class_count);

  Profiled p;
  p.layers = prof.layers;
  p.firing_rate = prof.report.firing_rate;
  auto& r = p.row;
  r.model = cfg.get("profile.model");
  r.schedule = schedule;
  r.dataset = dataset_name(cfg);
  r.acc = metrics.accuracy;
  r.f1 = metrics.macro_f1;
  r.ac = prof.counts.ac;
  r.mac = prof.counts.mac;
  r.params = prof.counts.params;
  r.energy_mj = energy_mj(r.ac, r.mac);
  if (net.spec().mode == NetMode::snn && r.energy_mj > 0.0) {
    r.eta = eta_energy(prof.cnn_equivalent_energy_mj, r.energy_mj);
  }
  const auto& cnn_path = cfg.get("profile.cnn_checkpoint");
  if (!cnn_path.empty()) {
    if (!fs::exists(cnn_path)) throw std::runtime_error("missing checkpoint " + cnn_path);
    const Network cnn = load_checkpoint(cnn_path);
    r.delta_acc = r.acc - accuracy(cnn, eval, fwd);
  }
  return p;
}

void write_bench(const fs::path& path, std::span<const BenchRow> rows) {
  auto os = open_out(path);
  write_bench_csv(os, rows);
}

}  // namespace

std::string dataset_name(const Config& cfg) {
  const auto& s = cfg.get("data.source");
  if (s == "synth") {
    return "synth" + cfg.get("data.synth.classes") + "x" + cfg.get("data.synth.size");
  }
  return s;
}

Dataset load_dataset(const Config& cfg, Split split) {
  const auto& source = cfg.get("data.source");
  const fs::path path = cfg.get("data.path");
  Dataset ds;
  if (source == "synth") {
    const auto classes = static_cast<int>(cfg.get_int("data.synth.classes"));
    const auto per_class = static_cast<int>(cfg.get_int("data.synth.per_class"));
    const auto size = static_cast<int>(cfg.get_int("data.synth.size"));
    const auto seed = static_cast<std::uint64_t>(cfg.get_int("data.synth.seed"));
    // Held-out synthetic data comes from the next seed.
    ds = split == Split::train ? synth_blobs(seed, classes, per_class, size)
                               : synth_blobs(seed + 1, classes, std::max(1, per_class / 4), size);
  } else if (source == "cifar10" || source == "cifar100") {
    if (path.empty()) throw std::invalid_argument("data.path is required for " + source);
    if (split == Split::val) {
      throw std::invalid_argument("CIFAR has no val split; the validation set is carved from train");
    }
    ds = load_cifar_dir(path, source == "cifar10" ? 10 : 100, split);
  } else if (source == "tinyimagenet") {
    if (path.empty()) throw std::invalid_argument("data.path is required for tinyimagenet");
    ds = load_tinyimagenet(path, split);
  } else {
    throw std::invalid_argument("data.source '" + source +
                                "' (expected synth, cifar10, cifar100 or tinyimagenet)");
  }
  ds.split = split;
  const auto limit = cfg.get_int("data.limit");
  if (limit > 0 && std::size_t(limit) < ds.size()) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(limit));
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    ds = ds.subset(idx);
  }
  if (cfg.get_bool("data.normalize")) normalize(ds.images);
  return ds;
}

Config effective_config(const RunOptions& options) {
  Config cfg = options.config_path.empty() ? Config() : Config::from_file(options.config_path);
  for (const auto& s : options.overrides) cfg.set(s);
  return cfg;
}

void cmd_train(const Config& cfg, const fs::path& out, std::ostream& console) {
  RunLog log(console, out);
  const auto tcfg = train_from_config(cfg);
  const Dataset all = load_dataset(cfg, Split::train);
  auto [train, val] = train_val_split(all, tcfg.val_fraction, tcfg.seed);
  Network net = build_network(cfg, all.class_count);
  log.line("train: " + std::to_string(train.size()) + " samples, val " +
           std::to_string(val.size()) + ", params " + std::to_string(net.parameter_count()) +
           ", schedule " + schedule_name(net.spec()));

  auto train_csv = open_out(out / "train_log.csv");
  train_csv << "epoch,lr,train_loss,ce,ga,val_acc,firing_rate,train_acc\n";
  auto grad_csv = open_out(out / "grad_norms.csv");
  grad_csv << "epoch,layer,grad_norm\n";

  const auto fwd = forward_from_config(cfg);
  Trainer trainer(net, tcfg, fwd);
  const auto result = trainer.fit(train, val, [&](const EpochLog& e) {
    train_csv << e.epoch << "," << format_double(e.lr) << "," << format_double(e.train_loss)
              << "," << format_double(e.ce) << "," << format_double(e.ga) << ","
              << format_double(e.val_acc) << "," << format_double(e.firing_rate) << ","
              << format_double(e.train_acc) << "\n";
    train_csv.flush();
    for (const auto& g : e.grad_norms)
      grad_csv << e.epoch << "," << g.layer << "," << format_double(g.norm) << "\n";
    grad_csv.flush();
    std::ostringstream line;
    line << "epoch " << e.epoch << " lr " << e.lr << " loss " << e.train_loss << " ce " << e.ce
         << " ga " << e.ga << " train_acc " << e.train_acc << " val_acc " << e.val_acc
         << " firing_rate " << e.firing_rate;
    log.line(line.str());
  });

  const auto ckpt = out / "model.snnw";
  save_checkpoint(net, ckpt.string());
  const double train_acc = accuracy(net, train, fwd);
  const double rate = result.history.empty() ? 0.0 : result.history.back().firing_rate;
  std::ostringstream done;
  done << "stopped: " << result.stop_reason << " after " << result.history.size()
       << " epochs; best val_acc " << result.best_val_acc << " at epoch " << result.best_epoch
       << "; final train_acc " << train_acc << "; firing_rate " << rate
       << (rate < 0.3 ? " (below 0.3 target)" : " (above 0.3 target)");
  log.line(done.str());
  log.line("checkpoint " + ckpt.string());
}

void cmd_eval(const Config& cfg, const fs::path& out, std::ostream& console) {
  RunLog log(console, out);
  const auto& path = cfg.get("checkpoint.path");
  if (path.empty()) throw std::invalid_argument("eval needs checkpoint.path");
  if (!fs::exists(path)) throw std::runtime_error("missing checkpoint " + path);
  const Network net = load_checkpoint(path);
  const Dataset data = load_dataset(cfg, eval_split(cfg));
  if (net.spec().num_classes != data.class_count) {
    throw std::invalid_argument("checkpoint has " + std::to_string(net.spec().num_classes) +
                                " classes, dataset " + std::to_string(data.class_count));
  }
  std::vector<int> preds;
  accuracy(net, data, forward_from_config(cfg), 64, &preds);
  const auto m = evaluate(preds, data.labels, data.class_count);

  auto os = open_out(out / "metrics.csv");
  os << "class,precision,recall,f1,support\n";
  for (std::size_t k = 0; k < m.per_class.size(); ++k) {
    const auto& s = m.per_class[k];
    os << k << "," << format_double(s.precision) << "," << format_double(s.recall) << ","
       << format_double(s.f1) << "," << s.support << "\n";
  }
  auto cm = open_out(out / "confusion.csv");
  const auto c = static_cast<std::size_t>(m.class_count);
  for (std::size_t t = 0; t < c; ++t) {
    for (std::size_t p = 0; p < c; ++p) cm << (p ? "," : "") << m.confusion[t * c + p];
    cm << "\n";
  }
  log.line("eval " + std::string(to_string(data.split)) + ": " + std::to_string(data.size()) +
           " samples, acc " + format_double(m.accuracy) + ", macro_f1 " +
           format_double(m.macro_f1));
}

void cmd_profile(const Config& cfg, const fs::path& out, std::ostream& console) {
  RunLog log(console, out);
  const Dataset data = load_dataset(cfg, eval_split(cfg));
  const Network net = load_or_build(cfg, data.class_count, log);
  const auto p = profile_network(net, data, cfg, schedule_name(net.spec()));
  write_bench(out / "bench.csv", std::span(&p.row, 1));
  auto layers = open_out(out / "layers.csv");
  write_layer_csv(layers, p.layers);
  std::ostringstream line;
  line << "profile " << p.row.schedule << ": params " << p.row.params << " ac " << p.row.ac
       << " mac " << p.row.mac << " energy_mj " << format_double(p.row.energy_mj)
       << " acc " << p.row.acc << " firing_rate " << p.firing_rate;
  log.line(line.str());
}

void cmd_ablate(const Config& cfg, const fs::path& out, bool full_scale,
                std::ostream& console) {
  RunLog log(console, out);
  const bool train = cfg.get_bool("ablate.train");
  const Dataset eval = load_dataset(cfg, eval_split(cfg));
  Dataset train_set, val_set;
  TrainConfig tcfg = train_from_config(cfg);
  if (train) {
    if (full_scale) {
      std::cerr << "warning: --full-scale trains all nine schedules for up to "
                << tcfg.max_epochs << " epochs each; this can take days on a CPU\n";
    } else {
      tcfg.max_epochs = std::min<int>(tcfg.max_epochs,
                                      static_cast<int>(cfg.get_int("ablate.smoke_epochs")));
    }
    std::tie(train_set, val_set) =
        train_val_split(load_dataset(cfg, Split::train), tcfg.val_fraction, tcfg.seed);
  }

  std::vector<BenchRow> rows;
  auto table = open_out(out / "ablation.csv");
  table << "schedule";
  for (int f = kFirstFire; f < kFirstFire + kFireCount; ++f) table << ",F" << f;
  table << ",retained,params,ac,mac,energy_mj,acc,f1,firing_rate\n";

  for (const auto& s : prune_schedules()) {
    Config c = cfg;
    c.set("arch.schedule", s.name);
    c.set("arch.retained", "");
    Network net = build_network(c, eval.class_count);
    if (train) {
      Trainer trainer(net, tcfg, forward_from_config(c));
      const auto r = trainer.fit(train_set, val_set);
      log.line(s.name + ": trained " + std::to_string(r.history.size()) + " epochs (" +
               r.stop_reason + ")");
    }
    const auto p = profile_network(net, eval, c, s.name);
    rows.push_back(p.row);
    table << s.name;
    for (bool kept : s.mask) table << "," << (kept ? 1 : 0);
    table << "," << mask_label(s.mask) << "," << p.row.params << "," << p.row.ac << ","
          << p.row.mac << "," << format_double(p.row.energy_mj) << ","
          << format_double(p.row.acc) << "," << format_double(p.row.f1) << ","
          << format_double(p.firing_rate) << "\n";
    log.line(s.name + ": params " + std::to_string(p.row.params) + " energy_mj " +
             format_double(p.row.energy_mj) + " acc " + format_double(p.row.acc));
  }
  write_bench(out / "bench.csv", rows);
}

void cmd_report(const Config& cfg, const fs::path& out, std::ostream& console) {
  RunLog log(console, out);
  fs::path input = cfg.get("report.input");
  if (input.empty()) input = out / "bench.csv";
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot read bench rows " + input.string());
  const auto rows = read_bench_csv(in);
  const auto front = pareto_front(rows);
  auto svg = open_out(out / "report.svg");
  write_report_svg(svg, rows, front);
  auto summary = open_out(out / "summary.csv");
  write_summary_csv(summary, rows, front);
  std::size_t n = 0;
  for (bool b : front) n += b;
  log.line("report: " + std::to_string(rows.size()) + " rows, " + std::to_string(n) +
           " on the Pareto frontier");
}

void run_command(const RunOptions& options, std::ostream& log) {
  static const std::vector<std::string> commands{"train", "eval", "profile", "ablate",
                                                 "report"};
  if (std::find(commands.begin(), commands.end(), options.command) == commands.end()) {
    throw std::invalid_argument("unknown command '" + options.command +
                                "' (expected train, eval, profile, ablate or report)");
  }
  const Config cfg = effective_config(options);
  if (options.out_dir.empty()) throw std::invalid_argument("--out is required");
  fs::create_directories(options.out_dir);
  fs::remove(options.out_dir / "run.log");
  {
    auto os = open_out(options.out_dir / "effective-config.txt");
    os << cfg.to_text();
  }
  if (options.full_scale && options.command != "ablate") {
    std::cerr << "warning: --full-scale only affects ablate\n";
  }
  if (options.command == "train") cmd_train(cfg, options.out_dir, log);
  else if (options.command == "eval") cmd_eval(cfg, options.out_dir, log);
  else if (options.command == "profile") cmd_profile(cfg, options.out_dir, log);
  else if (options.command == "ablate") cmd_ablate(cfg, options.out_dir, options.full_scale, log);
  else cmd_report(cfg, options.out_dir, log);
}

}  // namespace snn
