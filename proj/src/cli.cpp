// Copyright 2026 The MVZigAL Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mvzigal/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "mvzigal/checkpoint.hpp"
#include "mvzigal/config.hpp"
#include "mvzigal/errors.hpp"
#include "mvzigal/metrics.hpp"
#include "mvzigal/svg_plot.hpp"
#include "mvzigal/trainer.hpp"

namespace mvz {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string method;
  std::string checkpoint;
  std::vector<std::string> metrics;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
};

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

TrainConfig load_config(const Options& opt) {
  TrainConfig config = opt.config_path.empty() ? TrainConfig{} : parse_config_file(opt.config_path);
  if (opt.seed) config.seed = *opt.seed;
  if (!opt.method.empty()) config.method = parse_method(opt.method);
  config.validate();
  return config;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

void prepare_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw FormatError("cannot create output directory '" + dir.string() + "'");
  }
}

/// Run manifest: config snapshot, seeds, produced files and timestamps.
struct Manifest {
  std::string command;
  TrainConfig config;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> checkpoints;
  std::string metrics;
  std::vector<std::string> outputs;
  std::string started_at;
};

void write_manifest(const fs::path& dir, const Manifest& m) {
  auto check = [](const std::string& p) {
    if (!fs::exists(p)) throw FormatError("manifest references missing file '" + p + "'");
  };
  for (const auto& p : m.checkpoints) check(p);
  for (const auto& p : m.outputs) check(p);
  if (!m.metrics.empty()) check(m.metrics);
  nlohmann::json j;
  j["format_version"] = kManifestFormatVersion;
  j["command"] = m.command;
  j["config"] = config_to_text(m.config);
  j["config_hash"] = config_hash(m.config);
  j["seeds"] = m.seeds;
  j["checkpoints"] = m.checkpoints;
  j["metrics"] = m.metrics;
  j["outputs"] = m.outputs;
  j["started_at"] = m.started_at;
  j["finished_at"] = utc_now();
  write_text(dir / "manifest.json", j.dump(1) + "\n");
}

std::string epoch_name(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch_%04d.ckpt.json", epoch);
  return buf;
}

int cmd_pretrain(const Options& opt, std::ostream& out) {
  const std::string started = utc_now();
  const TrainConfig config = load_config(opt);
  const fs::path dir(opt.out_dir);
  prepare_dir(dir);
  std::vector<double> losses;
  const DenoiserParams params = pretrain_from_config(config, &losses);
  const TrainingSetup setup = make_training_setup(config);
  const fs::path ckpt = dir / "pretrained.ckpt.json";
  save_checkpoint(ckpt.string(), {params, setup.schedule, std::nullopt, setup.config_hash});
  if (!losses.empty()) {
    out << "pretrain: " << losses.size() << " steps, final loss " << format_real(losses.back())
        << "\n";
  }
  out << "wrote " << ckpt.string() << "\n";
  write_manifest(dir, {"pretrain", config, {config.seed}, {ckpt.string()}, "", {}, started});
  return kExitOk;
}

int cmd_finetune(const Options& opt, std::ostream& out) {
  const std::string started = utc_now();
  const TrainConfig config = load_config(opt);
  if (opt.checkpoint.empty()) throw ConfigError("finetune needs --checkpoint");
  const Checkpoint start = load_checkpoint(opt.checkpoint);
  const TrainingSetup setup = make_training_setup(config);
  if (start.schedule != setup.schedule) {
    throw ConfigError("checkpoint schedule does not match the config's schedule section");
  }
  if (start.trainer && start.config_hash != setup.config_hash) {
    throw ConfigError("cannot resume: checkpoint was written under config hash " +
                      start.config_hash + ", current config hash is " + setup.config_hash);
  }
  const fs::path dir(opt.out_dir);
  const fs::path ckpt_dir = dir / "checkpoints";
  prepare_dir(ckpt_dir);
  const fs::path metrics_path = dir / "metrics.csv";

  std::vector<EpochMetrics> rows;
  if (start.trainer && fs::exists(metrics_path)) {
    for (EpochMetrics& m : read_metrics_file(metrics_path.string())) {
      if (m.epoch <= start.trainer->epoch) rows.push_back(std::move(m));
    }
  }
  std::vector<std::string> written;
  const CheckpointHook hook = [&](const DenoiserParams& p, const TrainerState& st) {
    const fs::path path = ckpt_dir / epoch_name(st.epoch);
    save_checkpoint(path.string(), {p, setup.schedule, st, setup.config_hash});
    written.push_back(path.string());
  };
  FinetuneResult res = finetune(config, start.params, start.trainer, hook);
  for (const EpochMetrics& m : res.metrics) {
    out << "epoch " << m.epoch << " R_single " << format_real(m.mean_single_raw) << " R_mv "
        << format_real(m.mean_joint_raw);
    if (m.lambda) out << " lambda " << format_real(*m.lambda);
    out << "\n";
  }
  rows.insert(rows.end(), res.metrics.begin(), res.metrics.end());
  write_metrics_file(metrics_path.string(), rows);
  const fs::path final_path = dir / "final.ckpt.json";
  save_checkpoint(final_path.string(), {res.params, setup.schedule, res.state, setup.config_hash});
  written.push_back(final_path.string());
  out << "wrote " << metrics_path.string() << " and " << final_path.string() << "\n";
  write_manifest(dir, {"finetune", config, {config.seed}, written, metrics_path.string(), {},
                       started});
  return kExitOk;
}

int cmd_evaluate(const Options& opt, std::ostream& out) {
  const std::string started = utc_now();
  const TrainConfig config = load_config(opt);
  if (opt.checkpoint.empty()) throw ConfigError("evaluate needs --checkpoint");
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  const TrainingSetup setup = make_training_setup(config);
  if (!(ckpt.params.spec == config.model)) {
    throw ConfigError("checkpoint model shape does not match the config's model section");
  }
  const EvalReport rep = evaluate(ckpt.params, config, setup);
  const std::string text = format_eval_report(rep);
  const fs::path dir(opt.out_dir);
  prepare_dir(dir);
  const fs::path path = dir / "report.txt";
  write_text(path, text);
  out << text;
  write_manifest(dir, {"evaluate", config, {config.seed}, {opt.checkpoint}, "", {path.string()},
                       started});
  return kExitOk;
}

std::vector<std::string> render_plots(const std::vector<NamedMetrics>& runs, const fs::path& dir,
                                      bool with_tradeoff) {
  std::vector<std::string> files;
  for (const std::string& column : plotted_columns()) {
    const PlotSpec plot = metrics_plot(runs, column);
    if (plot.series.empty()) continue;
    const fs::path path = dir / (column + ".svg");
    write_text(path, render_svg(plot));
    files.push_back(path.string());
  }
  if (with_tradeoff) {
    const fs::path path = dir / "tradeoff.svg";
    write_text(path, render_svg(tradeoff_plot(runs)));
    files.push_back(path.string());
  }
  return files;
}

std::vector<NamedMetrics> read_runs(const std::vector<std::string>& paths) {
  std::vector<NamedMetrics> runs;
  for (const std::string& p : paths) runs.emplace_back(p, read_metrics_file(p));
  return runs;
}

int cmd_plot(const Options& opt, std::ostream& out) {
  if (opt.metrics.empty()) throw ConfigError("plot needs at least one --metrics file");
  const fs::path dir(opt.out_dir);
  prepare_dir(dir);
  for (const std::string& f : render_plots(read_runs(opt.metrics), dir, false)) {
    out << "wrote " << f << "\n";
  }
  return kExitOk;
}

int cmd_compare(const Options& opt, std::ostream& out) {
  const std::string started = utc_now();
  const fs::path dir(opt.out_dir);
  prepare_dir(dir);
  if (!opt.metrics.empty()) {
    for (const std::string& f : render_plots(read_runs(opt.metrics), dir, true)) {
      out << "wrote " << f << "\n";
    }
    return kExitOk;
  }
  const TrainConfig base = load_config(opt);
  const std::vector<std::string> methods =
      opt.methods.empty() ? std::vector<std::string>{"zigal", "ws-zigal", "mvc-zigal"} : opt.methods;
  const std::vector<std::uint64_t> seeds =
      opt.seeds.empty() ? std::vector<std::uint64_t>{base.seed, base.seed + 1} : opt.seeds;
  std::optional<Checkpoint> shared;
  if (!opt.checkpoint.empty()) shared = load_checkpoint(opt.checkpoint);

  std::vector<NamedMetrics> runs;
  std::vector<std::string> metrics_files;
  std::vector<std::string> checkpoints;
  for (const std::string& method : methods) {
    for (std::uint64_t seed : seeds) {
      TrainConfig config = base;
      config.method = parse_method(method);
      config.seed = seed;
      const TrainingSetup setup = make_training_setup(config);
      const DenoiserParams start = shared ? shared->params : pretrain_from_config(config);
      const FinetuneResult res = finetune(config, start);
      const std::string name = method + "_seed" + std::to_string(seed);
      const fs::path cell = dir / name;
      prepare_dir(cell);
      const fs::path metrics_path = cell / "metrics.csv";
      write_metrics_file(metrics_path.string(), res.metrics);
      const fs::path ckpt = cell / "final.ckpt.json";
      save_checkpoint(ckpt.string(), {res.params, setup.schedule, res.state, setup.config_hash});
      metrics_files.push_back(metrics_path.string());
      checkpoints.push_back(ckpt.string());
      runs.emplace_back(name, res.metrics);
      out << "finished " << name << "\n";
    }
  }
  std::vector<std::string> plots = render_plots(runs, dir, true);
  for (const std::string& f : plots) out << "wrote " << f << "\n";
  plots.insert(plots.end(), metrics_files.begin(), metrics_files.end());
  write_manifest(dir, {"compare", base, seeds, checkpoints, "", plots, started});
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiview-constrained zigzag advantage learning on a toy scene"};
  app.require_subcommand(1);
  Options opt;
  const char* env_dir = std::getenv("MVZIGAL_OUT_DIR");
  opt.out_dir = env_dir && *env_dir ? env_dir : "out";

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "config file (section.key = value)");
    sub->add_option("--seed", opt.seed, "override the run seed");
    sub->add_option("--out-dir", opt.out_dir, "output directory (default: $MVZIGAL_OUT_DIR or ./out)");
    sub->add_option("--method", opt.method, "override the training method");
  };
  CLI::App* pretrain_cmd = app.add_subcommand("pretrain", "train the baseline denoiser");
  common(pretrain_cmd);
  CLI::App* finetune_cmd = app.add_subcommand("finetune", "RL finetuning from a checkpoint");
  common(finetune_cmd);
  finetune_cmd->add_option("--checkpoint", opt.checkpoint,
                           "pretrained checkpoint, or a mid-run checkpoint to resume")
      ->required();
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "standard vs zigzag evaluation report");
  common(evaluate_cmd);
  evaluate_cmd->add_option("--checkpoint", opt.checkpoint, "checkpoint to evaluate")->required();
  CLI::App* plot_cmd = app.add_subcommand("plot", "render SVG curves from metrics CSVs");
  plot_cmd->add_option("--metrics", opt.metrics, "metrics CSV (repeatable)")->required();
  plot_cmd->add_option("--out-dir", opt.out_dir, "output directory");
  CLI::App* compare_cmd = app.add_subcommand("compare", "method x seed grid with overlay plots");
  common(compare_cmd);
  compare_cmd->add_option("--checkpoint", opt.checkpoint, "shared starting checkpoint");
  compare_cmd->add_option("--metrics", opt.metrics, "overlay existing metrics CSVs (repeatable)");
  compare_cmd->add_option("--methods", opt.methods, "methods of the grid")->delimiter(',');
  compare_cmd->add_option("--seeds", opt.seeds, "seeds of the grid")->delimiter(',');

  std::vector<std::string> argv_store{"mvzigal"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_store) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kExitUsage;
  }

  try {
    if (pretrain_cmd->parsed()) return cmd_pretrain(opt, out);
    if (finetune_cmd->parsed()) return cmd_finetune(opt, out);
    if (evaluate_cmd->parsed()) return cmd_evaluate(opt, out);
    if (plot_cmd->parsed()) return cmd_plot(opt, out);
    if (compare_cmd->parsed()) return cmd_compare(opt, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace mvz
