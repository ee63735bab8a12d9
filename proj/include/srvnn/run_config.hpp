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
#pragma once

// Run configuration, read from an INI file. Every key is optional; missing
// keys keep the defaults below. Unknown sections or keys are errors.
//
//   [run]         seed
//   [paths]       dataset, checkpoint, log, report, grid
//   [synth]       num_classes, instances_per_class, subcarriers, base_rate,
//                 duration, noise_sigma
//   [preprocess]  outlier_threshold (empty = median rule), median_multiplier,
//                 validity_fraction
//   [model]       heads, layers, ffn_hidden, pos_encoding (index|time),
//                 time_reference_length, output_norm, layer_norm_eps,
//                 init_scale
//   [augment]     alpha, rate_support, stochastic, adapt
//   [train]       batch_size, lr, plateau_patience, plateau_factor,
//                 early_stop_patience, max_epochs, val_fraction,
//                 test_fraction
//   [eval]        rates, repetitions, mode (stochastic|uniform),
//                 format (csv|jsonl)
//   [sweep]       train_rates, test_rates
//   [flops]       subcarriers, classes, lengths, profile (reference|model)
//
// Lists are comma separated. Module seeds come from the single [run] seed:
//   derive_seed(seed, "<module>", "<purpose>").

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "srvnn/augment.hpp"
#include "srvnn/csi.hpp"
#include "srvnn/error.hpp"
#include "srvnn/eval.hpp"
#include "srvnn/model.hpp"
#include "srvnn/random.hpp"
#include "srvnn/report_io.hpp"
#include "srvnn/train.hpp"
#include "srvnn/traffic.hpp"

namespace srvnn {

struct PathsConfig {
  std::string dataset = "data/synth.srvcsi";
  std::string checkpoint = "out/model.srvnn";
  std::string log = "out/train_log.jsonl";
  std::string report = "out/report.csv";
  std::string grid = "out/grid.csv";
};

struct EvalSection {
  std::vector<double> rates = {5, 10, 25, 50, 100};
  std::size_t repetitions = 3;
  SamplingMode mode = SamplingMode::StochasticIntervals;
  ReportFormat format = ReportFormat::CSV;
};

struct SweepSection {
  std::vector<double> train_rates = {10, 100, 600};
  std::vector<double> test_rates = {10, 100, 600};
};

struct FlopsSection {
  Index subcarriers = 90;
  Index classes = 6;
  std::vector<std::uint64_t> lengths = {10, 100, 500, 1000, 2000};
  bool reference_profile = true;
};

struct RunConfig {
  std::uint64_t seed = 0;
  PathsConfig paths;
  SynthConfig synth;
  PreprocessConfig preprocess;
  ModelConfig model;  // subcarriers and classes are taken from the data
  AugmentConfig augment;
  TrainConfig train;
  double val_fraction = 0.15;
  double test_fraction = 0.15;
  EvalSection eval;
  SweepSection sweep;
  FlopsSection flops;

  std::uint64_t module_seed(std::string_view module, std::string_view purpose) const {
    return derive_seed(seed, module, purpose);
  }

  /// Seeds every module stream from the global seed.
  void apply_seed(std::uint64_t global) {
    seed = global;
    synth.seed = module_seed("traffic_sim", "synth");
    model.init_seed = module_seed("srv_model", "init");
    train.seed = module_seed("augment_train", "train");
  }
  std::uint64_t split_seed() const { return module_seed("csi_core", "split"); }
  std::uint64_t eval_seed() const { return module_seed("eval_harness", "evaluate"); }

  /// Model shape for data with C subcarriers and M classes.
  ModelConfig model_for(Index subcarriers, Index classes) const {
    ModelConfig m = model;
    m.subcarriers = subcarriers;
    m.classes = classes;
    return m;
  }

  void validate() const {
    constexpr std::string_view where = "cli.config";
    auto wrap = [&](auto&& check) {
      try {
        check();
      } catch (const Error& e) {
        fail(ErrorKind::ConfigError, where, e.what());
      }
    };
    wrap([&] { synth.rows(); });
    require(synth.num_classes >= 2 && synth.instances_per_class >= 1 && synth.subcarriers >= 2 && synth.noise_sigma >= 0,
            ErrorKind::ConfigError, where, "synth: need num_classes >= 2, subcarriers >= 2, noise_sigma >= 0");
    require(preprocess.validity_fraction > 0 && preprocess.validity_fraction <= 1, ErrorKind::ConfigError, where,
            "preprocess.validity_fraction must be in (0, 1]");
    require(preprocess.median_multiplier > 0, ErrorKind::ConfigError, where, "preprocess.median_multiplier must be > 0");
    require(!preprocess.outlier_threshold || *preprocess.outlier_threshold > 0, ErrorKind::ConfigError, where,
            "preprocess.outlier_threshold must be > 0");
    wrap([&] { model_for(2, 2).validate(); });
    wrap([&] { init_distribution(augment); });
    wrap([&] { train.validate(); });
    require(val_fraction > 0 && test_fraction > 0 && val_fraction + test_fraction < 1, ErrorKind::ConfigError, where,
            "train.val_fraction and train.test_fraction must be positive with sum below 1");
    require(!eval.rates.empty(), ErrorKind::ConfigError, where, "eval.rates is empty");
    require(eval.repetitions >= 1, ErrorKind::ConfigError, where, "eval.repetitions must be >= 1");
    require(!sweep.train_rates.empty() && !sweep.test_rates.empty(), ErrorKind::ConfigError, where,
            "sweep rate lists must be nonempty");
    for (const auto* list : {&eval.rates, &sweep.train_rates, &sweep.test_rates}) {
      for (double r : *list) require(r > 0, ErrorKind::ConfigError, where, "rates must be positive");
    }
    require(flops.subcarriers >= 1 && flops.classes >= 1 && !flops.lengths.empty(), ErrorKind::ConfigError, where,
            "flops: need subcarriers, classes >= 1 and at least one length");
    check_paths();
  }

  /// Output files must differ from each other and from the dataset and its
  /// class manifest.
  void check_paths() const {
    std::map<std::string, std::string> seen;
    auto claim = [&](const std::string& key, const std::string& p) {
      if (p.empty()) return;
      const std::string norm = std::filesystem::path(p).lexically_normal().string();
      const auto [it, fresh] = seen.emplace(norm, key);
      require(fresh, ErrorKind::ConfigError, "cli.config", "paths." + key + " conflicts with " + it->second + " (" + p + ")");
    };
    claim("dataset", paths.dataset);
    if (!paths.dataset.empty()) claim("dataset manifest", manifest_path(paths.dataset).string());
    claim("checkpoint", paths.checkpoint);
    claim("log", paths.log);
    claim("report", paths.report);
    claim("grid", paths.grid);
  }
};

namespace config_detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  T v{};
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  require(ec == std::errc{} && end == s.data() + s.size() && !s.empty(), ErrorKind::ConfigError, "cli.config",
          key + ": cannot parse '" + raw + "'");
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string s = trim(raw);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorKind::ConfigError, "cli.config", key + ": expected a boolean, got '" + raw + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& raw) {
  std::vector<T> out;
  std::stringstream ss(raw);
  for (std::string cell; std::getline(ss, cell, ',');) {
    if (trim(cell).empty()) continue;
    out.push_back(parse_scalar<T>(key, cell));
  }
  return out;
}

}  // namespace config_detail

/// Comma-separated rates in Hz, e.g. "5,10,25".
inline std::vector<double> parse_rate_list(const std::string& text) {
  return config_detail::parse_list<double>("rates", text);
}

inline void apply_config_tree(RunConfig& cfg, const boost::property_tree::ptree& tree) {
  using namespace config_detail;
  constexpr std::string_view where = "cli.config";
  using Setter = std::function<void(const std::string&, const std::string&)>;
  std::map<std::string, std::map<std::string, Setter>> keys;
  auto num = [](auto& field) {
    return Setter([&field](const std::string& k, const std::string& v) {
      field = parse_scalar<std::remove_reference_t<decltype(field)>>(k, v);
    });
  };
  auto flag = [](bool& field) { return Setter([&field](const std::string& k, const std::string& v) { field = parse_bool(k, v); }); };
  auto text = [](std::string& field) { return Setter([&field](const std::string&, const std::string& v) { field = trim(v); }); };
  auto rates = [](std::vector<double>& field) {
    return Setter([&field](const std::string& k, const std::string& v) { field = parse_list<double>(k, v); });
  };

  std::uint64_t seed = cfg.seed;
  keys["run"]["seed"] = num(seed);

  keys["paths"] = {{"dataset", text(cfg.paths.dataset)}, {"checkpoint", text(cfg.paths.checkpoint)},
                   {"log", text(cfg.paths.log)},         {"report", text(cfg.paths.report)},
                   {"grid", text(cfg.paths.grid)}};

  keys["synth"] = {{"num_classes", num(cfg.synth.num_classes)},
                   {"instances_per_class", num(cfg.synth.instances_per_class)},
                   {"subcarriers", num(cfg.synth.subcarriers)},
                   {"base_rate", num(cfg.synth.base_rate)},
                   {"duration", num(cfg.synth.duration)},
                   {"noise_sigma", num(cfg.synth.noise_sigma)}};

  keys["preprocess"] = {
      {"outlier_threshold",
       [&](const std::string& k, const std::string& v) {
         if (trim(v).empty() || trim(v) == "auto") {
           cfg.preprocess.outlier_threshold.reset();
         } else {
           cfg.preprocess.outlier_threshold = parse_scalar<double>(k, v);
         }
       }},
      {"median_multiplier", num(cfg.preprocess.median_multiplier)},
      {"validity_fraction", num(cfg.preprocess.validity_fraction)}};

  keys["model"] = {{"heads", num(cfg.model.heads)},
                   {"layers", num(cfg.model.layers)},
                   {"ffn_hidden", num(cfg.model.ffn_hidden)},
                   {"pos_encoding",
                    [&](const std::string& k, const std::string& v) {
                      const auto s = trim(v);
                      require(s == "index" || s == "time", ErrorKind::ConfigError, where, k + ": expected index or time");
                      cfg.model.pos_encoding = s == "time" ? PositionalEncoding::SinusoidalTime : PositionalEncoding::SinusoidalIndex;
                    }},
                   {"time_reference_length", num(cfg.model.time_reference_length)},
                   {"output_norm", flag(cfg.model.output_norm)},
                   {"layer_norm_eps", num(cfg.model.layer_norm_eps)},
                   {"init_scale", num(cfg.model.init_scale)}};

  keys["augment"] = {{"alpha", num(cfg.augment.alpha)},
                     {"rate_support", rates(cfg.augment.rate_support)},
                     {"stochastic", flag(cfg.augment.stochastic)},
                     {"adapt", flag(cfg.augment.adapt)}};

  keys["train"] = {{"batch_size", num(cfg.train.batch_size)},
                   {"lr", num(cfg.train.lr)},
                   {"plateau_patience", num(cfg.train.plateau_patience)},
                   {"plateau_factor", num(cfg.train.plateau_factor)},
                   {"early_stop_patience", num(cfg.train.early_stop_patience)},
                   {"max_epochs", num(cfg.train.max_epochs)},
                   {"val_fraction", num(cfg.val_fraction)},
                   {"test_fraction", num(cfg.test_fraction)}};

  keys["eval"] = {{"rates", rates(cfg.eval.rates)},
                  {"repetitions", num(cfg.eval.repetitions)},
                  {"mode",
                   [&](const std::string& k, const std::string& v) {
                     const auto s = trim(v);
                     require(s == "stochastic" || s == "uniform", ErrorKind::ConfigError, where,
                             k + ": expected stochastic or uniform");
                     cfg.eval.mode = s == "uniform" ? SamplingMode::UniformIntervals : SamplingMode::StochasticIntervals;
                   }},
                  {"format", [&](const std::string& k, const std::string& v) {
                     const auto s = trim(v);
                     require(s == "csv" || s == "jsonl", ErrorKind::ConfigError, where, k + ": expected csv or jsonl");
                     cfg.eval.format = s == "jsonl" ? ReportFormat::JSONLines : ReportFormat::CSV;
                   }}};

  keys["sweep"] = {{"train_rates", rates(cfg.sweep.train_rates)}, {"test_rates", rates(cfg.sweep.test_rates)}};

  keys["flops"] = {{"subcarriers", num(cfg.flops.subcarriers)},
                   {"classes", num(cfg.flops.classes)},
                   {"lengths",
                    [&](const std::string& k, const std::string& v) { cfg.flops.lengths = parse_list<std::uint64_t>(k, v); }},
                   {"profile", [&](const std::string& k, const std::string& v) {
                      const auto s = trim(v);
                      require(s == "reference" || s == "model", ErrorKind::ConfigError, where,
                              k + ": expected reference or model");
                      cfg.flops.reference_profile = s == "reference";
                    }}};

  for (const auto& [section, body] : tree) {
    const auto sec = keys.find(section);
    require(sec != keys.end(), ErrorKind::ConfigError, where, "unknown section [" + section + "]");
    for (const auto& [key, node] : body) {
      const auto setter = sec->second.find(key);
      require(setter != sec->second.end(), ErrorKind::ConfigError, where, "unknown key " + section + "." + key);
      setter->second(section + "." + key, node.get_value<std::string>());
    }
  }
  cfg.apply_seed(seed);
}

inline RunConfig parse_run_config(const std::string& ini_text) {
  RunConfig cfg;
  boost::property_tree::ptree tree;
  std::istringstream in(ini_text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorKind::ConfigError, "cli.config", e.what());
  }
  cfg.apply_seed(0);
  apply_config_tree(cfg, tree);
  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_file_bytes(path, "cli.config"));
}

inline RunConfig default_run_config() {
  RunConfig cfg;
  cfg.apply_seed(0);
  return cfg;
}

}  // namespace srvnn
