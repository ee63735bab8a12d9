/*
 * Copyright (c) 2026, the srvnn authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
// srvnn command-line tool: synth, preprocess, train, eval, sweep, flops.
//
// Log verbosity comes from SRVNN_LOG (quiet, info, debug; default info).
// Diagnostics go to stderr, results to stdout and the output files.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "srvnn/srvnn.hpp"

namespace {

using namespace srvnn;
namespace fs = std::filesystem;

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity() {
  const char* env = std::getenv("SRVNN_LOG");
  const std::string v = env ? env : "info";
  if (v == "quiet") return Verbosity::Quiet;
  if (v == "debug") return Verbosity::Debug;
  return Verbosity::Info;
}

void log_info(const std::string& msg) {
  if (verbosity() != Verbosity::Quiet) std::cerr << msg << '\n';
}

void log_debug(const std::string& msg) {
  if (verbosity() == Verbosity::Debug) std::cerr << msg << '\n';
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string rates;
  std::string format;
  std::string dataset;
  std::string checkpoint;
  std::string log;
  std::string lengths;
  std::string split = "test";
};

RunConfig load(const Options& o) {
  RunConfig cfg = o.config.empty() ? default_run_config() : load_run_config(o.config);
  if (o.seed) cfg.apply_seed(*o.seed);
  if (!o.dataset.empty()) cfg.paths.dataset = o.dataset;
  if (!o.checkpoint.empty()) cfg.paths.checkpoint = o.checkpoint;
  if (!o.log.empty()) cfg.paths.log = o.log;
  if (!o.format.empty()) {
    require(o.format == "csv" || o.format == "jsonl", ErrorKind::ConfigError, "cli.args", "--format must be csv or jsonl");
    cfg.eval.format = o.format == "jsonl" ? ReportFormat::JSONLines : ReportFormat::CSV;
  }
  cfg.check_paths();
  return cfg;
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    require(!ec, ErrorKind::IoError, "cli.output", "cannot create " + p.parent_path().string() + ": " + ec.message());
  }
}

std::string rate_text(const std::vector<double>& rates) {
  std::string s;
  for (double r : rates) s += (s.empty() ? "" : ",") + format_number(r);
  return s;
}

DatasetSplit split_for(const RunConfig& cfg, const Dataset& ds) {
  return split_dataset(ds, cfg.val_fraction, cfg.test_fraction, cfg.split_seed());
}

int cmd_synth(const Options& o) {
  const RunConfig cfg = load(o);
  const fs::path out = o.out.empty() ? fs::path(cfg.paths.dataset) : fs::path(o.out);
  const Dataset ds = synth_dataset(cfg.synth);
  ensure_parent(out);
  write_dataset(ds, out);
  std::cout << "instances=" << ds.size() << " rows=" << ds.instances.front().rows() << " subcarriers=" << ds.subcarriers()
            << " classes=" << ds.num_classes << " rate_hz=" << format_number(compute_rate(ds.instances.front())) << '\n';
  return 0;
}

int cmd_preprocess(const Options& o) {
  const RunConfig cfg = load(o);
  require(!o.out.empty(), ErrorKind::ConfigError, "cli.preprocess", "--out is required");
  const fs::path in = cfg.paths.dataset;
  require(fs::path(o.out).lexically_normal() != in.lexically_normal(), ErrorKind::ConfigError, "cli.preprocess",
          "--out must differ from the input dataset");
  const Dataset ds = read_dataset(in);
  Dataset out;
  out.num_classes = ds.num_classes;
  out.class_names = ds.class_names;
  std::size_t repaired = 0, dropped = 0, failed = 0;
  for (std::size_t k = 0; k < ds.size(); ++k) {
    try {
      PreprocessResult r = preprocess(ds.instances[k], cfg.preprocess);
      repaired += r.repaired_entries;
      dropped += r.dropped_rows;
      log_debug("instance " + std::to_string(k) + ": repaired=" + std::to_string(r.repaired_entries) +
                " dropped_rows=" + std::to_string(r.dropped_rows));
      out.instances.push_back(std::move(r.instance));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyAfterPreprocess && e.kind() != ErrorKind::DegenerateInstance) throw;
      ++failed;
      log_info("instance " + std::to_string(k) + " skipped: " + e.what());
    }
  }
  ensure_parent(o.out);
  write_dataset(out, o.out);
  std::cout << "instances=" << out.size() << " repaired=" << repaired << " dropped_rows=" << dropped
            << " skipped_instances=" << failed << '\n';
  return 0;
}

int cmd_train(const Options& o) {
  const RunConfig cfg = load(o);
  const Dataset ds = read_dataset(cfg.paths.dataset);
  const DatasetSplit parts = split_for(cfg, ds);
  const ModelConfig mcfg = cfg.model_for(ds.subcarriers(), static_cast<Index>(ds.num_classes));
  log_info("train: " + std::to_string(parts.train.size()) + " train / " + std::to_string(parts.val.size()) + " val, " +
           std::to_string(SrvModel(mcfg).num_parameters()) + " parameters");
  ensure_parent(cfg.paths.log);
  std::ofstream log(cfg.paths.log, std::ios::trunc);
  require(static_cast<bool>(log), ErrorKind::IoError, "cli.train", "cannot open " + cfg.paths.log);
  const TrainResult result = train(SrvModel(mcfg), parts.train, parts.val, cfg.train, cfg.augment, [&](const EpochRecord& r) {
    log << to_json(r).dump() << '\n';
    log.flush();
    log_info("epoch " + std::to_string(r.epoch) + " lr=" + format_number(r.lr) + " train_loss=" +
             format_number(r.train_loss) + " val_loss=" + format_number(r.val_loss) + (r.improved ? " *" : ""));
  });
  require(static_cast<bool>(log), ErrorKind::IoError, "cli.train", "write failed for " + cfg.paths.log);
  ensure_parent(cfg.paths.checkpoint);
  write_checkpoint(result.model, cfg.paths.checkpoint);
  std::cout << "epochs=" << result.log.size() << " best_epoch=" << result.best_epoch
            << " best_val_loss=" << format_number(result.log[result.best_epoch - 1].val_loss) << '\n';
  return 0;
}

Dataset eval_set(const RunConfig& cfg, const Options& o) {
  Dataset ds = read_dataset(cfg.paths.dataset);
  if (o.split == "all") return ds;
  require(o.split == "test" || o.split == "val", ErrorKind::ConfigError, "cli.args", "--split must be test, val or all");
  DatasetSplit parts = split_for(cfg, ds);
  return o.split == "val" ? parts.val : parts.test;
}

int cmd_eval(const Options& o) {
  RunConfig cfg = load(o);
  if (!o.rates.empty()) cfg.eval.rates = parse_rate_list(o.rates);
  require(!cfg.eval.rates.empty(), ErrorKind::ConfigError, "eval_harness.evaluate", "rate list is empty");
  const SrvModel model = read_checkpoint(cfg.paths.checkpoint);
  const Dataset test = eval_set(cfg, o);
  const EvalReport report =
      evaluate(model, test, cfg.eval.rates, cfg.eval_seed(), {.repetitions = cfg.eval.repetitions, .mode = cfg.eval.mode});
  const fs::path out = o.out.empty() ? fs::path(cfg.paths.report) : fs::path(o.out);
  ensure_parent(out);
  emit_report(report, out, cfg.eval.format);
  for (std::size_t i = 0; i < report.rates.size(); ++i) {
    log_debug("rate " + format_number(report.rates[i]) + " Hz: accuracy " + format_number(report.accuracies[i]));
  }
  std::cout << "avg_accuracy=" << format_number(report.avg_accuracy) << " variance=" << format_number(report.variance)
            << '\n';
  return 0;
}

int cmd_sweep(const Options& o) {
  RunConfig cfg = load(o);
  if (!o.rates.empty()) cfg.sweep.train_rates = cfg.sweep.test_rates = parse_rate_list(o.rates);
  require(!cfg.sweep.train_rates.empty() && !cfg.sweep.test_rates.empty(), ErrorKind::ConfigError,
          "eval_harness.cross_rate_grid", "rate lists must be nonempty");
  const Dataset ds = read_dataset(cfg.paths.dataset);
  const DatasetSplit parts = split_for(cfg, ds);
  const ModelConfig mcfg = cfg.model_for(ds.subcarriers(), static_cast<Index>(ds.num_classes));
  log_info("sweep: train rates " + rate_text(cfg.sweep.train_rates) + ", test rates " + rate_text(cfg.sweep.test_rates));
  const RateGrid grid = cross_rate_grid(parts.train, parts.val, parts.test, cfg.sweep.train_rates, cfg.sweep.test_rates,
                                        mcfg, cfg.train, cfg.eval_seed(),
                                        {.repetitions = cfg.eval.repetitions, .mode = cfg.eval.mode},
                                        [](const EpochRecord& r) {
                                          log_debug("epoch " + std::to_string(r.epoch) + " val_loss=" + format_number(r.val_loss));
                                        });
  const fs::path out = o.out.empty() ? fs::path(cfg.paths.grid) : fs::path(o.out);
  ensure_parent(out);
  write_file_bytes(out, encode_grid(grid), "eval_harness.emit_grid");
  const auto [diag, off] = grid.diagonal_split();
  std::cout << "diagonal_mean=" << format_number(diag) << " off_diagonal_mean=" << format_number(off) << '\n';
  return 0;
}

int cmd_flops(const Options& o) {
  RunConfig cfg = load(o);
  if (!o.lengths.empty()) {
    cfg.flops.lengths.clear();
    for (double v : parse_rate_list(o.lengths)) {
      require(v >= 1 && v == std::floor(v), ErrorKind::ConfigError, "cli.flops", "lengths must be positive integers");
      cfg.flops.lengths.push_back(static_cast<std::uint64_t>(v));
    }
  }
  require(!cfg.flops.lengths.empty(), ErrorKind::ConfigError, "cli.flops", "no lengths given");
  const ModelConfig mcfg = cfg.flops.reference_profile ? reference_flops_config(cfg.flops.subcarriers, cfg.flops.classes)
                                                       : cfg.model_for(cfg.flops.subcarriers, cfg.flops.classes);
  std::string table = "length,flops\n";
  for (auto n : cfg.flops.lengths) table += std::to_string(n) + "," + std::to_string(estimate_flops(mcfg, n)) + "\n";
  std::cout << table;
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_file_bytes(o.out, table, "cli.flops");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"srvnn: sampling-rate-versatile Wi-Fi CSI motion recognition"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "INI run configuration");
    sub->add_option("--seed", o.seed, "global seed, overrides [run] seed");
  };
  auto* synth = app.add_subcommand("synth", "write a synthetic dataset");
  common(synth);
  synth->add_option("--out", o.out, "dataset path (default [paths] dataset)");

  auto* pre = app.add_subcommand("preprocess", "repair outliers in a dataset");
  common(pre);
  pre->add_option("--dataset", o.dataset, "input dataset");
  pre->add_option("--out", o.out, "output dataset")->required();

  auto* tr = app.add_subcommand("train", "train a model with rate augmentation");
  common(tr);
  tr->add_option("--dataset", o.dataset, "dataset path");
  tr->add_option("--checkpoint", o.checkpoint, "checkpoint output path");
  tr->add_option("--log", o.log, "training log (JSON lines)");

  auto* ev = app.add_subcommand("eval", "per-rate accuracy of a checkpoint");
  common(ev);
  ev->add_option("--dataset", o.dataset, "dataset path");
  ev->add_option("--checkpoint", o.checkpoint, "checkpoint path");
  ev->add_option("--rates", o.rates, "comma-separated test rates in Hz");
  ev->add_option("--format", o.format, "csv or jsonl");
  ev->add_option("--split", o.split, "test, val or all");
  ev->add_option("--out", o.out, "report path (default [paths] report)");

  auto* sw = app.add_subcommand("sweep", "fixed-rate train/test accuracy grid");
  common(sw);
  sw->add_option("--dataset", o.dataset, "dataset path");
  sw->add_option("--rates", o.rates, "comma-separated rates for both axes");
  sw->add_option("--out", o.out, "grid CSV path (default [paths] grid)");

  auto* fl = app.add_subcommand("flops", "FLOP estimates per sequence length");
  common(fl);
  fl->add_option("--lengths", o.lengths, "comma-separated sequence lengths");
  fl->add_option("--out", o.out, "optional CSV output");

  CLI11_PARSE(app, argc, argv);
  try {
    if (synth->parsed()) return cmd_synth(o);
    if (pre->parsed()) return cmd_preprocess(o);
    if (tr->parsed()) return cmd_train(o);
    if (ev->parsed()) return cmd_eval(o);
    if (sw->parsed()) return cmd_sweep(o);
    if (fl->parsed()) return cmd_flops(o);
  } catch (const srvnn::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: cli.main: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
