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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srvnn/augment.hpp"
#include "srvnn/model.hpp"
#include "srvnn/train.hpp"
#include "srvnn/traffic.hpp"

namespace srvnn {

/// Mean of the per-rate accuracies.
inline double average_accuracy(std::span<const double> acc) {
  require(!acc.empty(), ErrorKind::ConfigError, "eval_harness.average_accuracy", "no accuracies");
  double mean = 0.0;
  std::size_t k = 0;
  for (double a : acc) mean += (a - mean) / static_cast<double>(++k);
  return mean;
}

/// Population variance (divisor n) of the per-rate accuracies, Welford.
inline double accuracy_variance(std::span<const double> acc) {
  require(!acc.empty(), ErrorKind::ConfigError, "eval_harness.accuracy_variance", "no accuracies");
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double a : acc) {
    ++k;
    const double delta = a - mean;
    mean += delta / static_cast<double>(k);
    m2 += delta * (a - mean);
  }
  return m2 / static_cast<double>(k);
}

struct EvalReport {
  std::vector<double> rates;
  std::vector<double> accuracies;
  double avg_accuracy = 0.0;
  double variance = 0.0;
  double std_dev = 0.0;
  /// confusion[i](true, predicted), counts summed over repetitions.
  std::vector<Eigen::MatrixXi> confusion;
  std::uint64_t seed = 0;
  std::size_t repetitions = 1;

  void summarize() {
    avg_accuracy = average_accuracy(accuracies);
    variance = accuracy_variance(accuracies);
    std_dev = std::sqrt(variance);
  }
};

struct EvalOptions {
  std::size_t repetitions = 3;
  SamplingMode mode = SamplingMode::StochasticIntervals;
};

/// Accuracy at each rate, averaged over `repetitions` independent draws of
/// the rate reduction. Stream for rate i, repetition r:
///   derive_seed(seed, "eval_harness", "evaluate", i * 1000003 + r)
template <ProbabilisticClassifier Model>
EvalReport evaluate(const Model& model, const Dataset& test, std::span<const double> rates, std::uint64_t seed,
                    const EvalOptions& opts = {}) {
  constexpr std::string_view where = "eval_harness.evaluate";
  require(!rates.empty(), ErrorKind::ConfigError, where, "rate list is empty");
  require(!test.empty(), ErrorKind::ConfigError, where, "test set is empty");
  require(opts.repetitions >= 1, ErrorKind::ConfigError, where, "repetitions must be >= 1");
  const double ceiling = test.min_rate();
  for (double r : rates) {
    require(r > 0 && r <= ceiling * (1.0 + 1e-9), ErrorKind::RateTooHigh, where,
            std::to_string(r) + " Hz exceeds the test set rate " + std::to_string(ceiling) + " Hz");
  }
  const Index m = model.num_classes();
  EvalReport report;
  report.rates.assign(rates.begin(), rates.end());
  report.seed = seed;
  report.repetitions = opts.repetitions;
  for (std::size_t i = 0; i < rates.size(); ++i) {
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(m, m);
    std::size_t correct = 0, total = 0;
    for (std::size_t rep = 0; rep < opts.repetitions; ++rep) {
      Rng rng(derive_seed(seed, "eval_harness", "evaluate", i * 1000003u + rep));
      for (std::size_t k = 0; k < test.instances.size(); ++k) {
        const auto& x = test.instances[k];
        require(x.label.has_value(), ErrorKind::UnlabeledInstance, where, "test instance " + std::to_string(k));
        const Index predicted = predicted_class(model.predict_proba(resample(x, rates[i], opts.mode, rng)));
        const auto truth = static_cast<Index>(*x.label);
        ++confusion(truth, predicted);
        correct += predicted == truth;
        ++total;
      }
    }
    report.accuracies.push_back(static_cast<double>(correct) / static_cast<double>(total));
    report.confusion.push_back(std::move(confusion));
  }
  report.summarize();
  return report;
}

/// Accuracy matrix, rows = training rate, columns = test rate.
struct RateGrid {
  std::vector<double> train_rates;
  std::vector<double> test_rates;
  Mat accuracy;

  /// Mean over cells whose train and test rates coincide, and over the rest.
  std::pair<double, double> diagonal_split() const {
    double diag = 0.0, off = 0.0;
    std::size_t nd = 0, no = 0;
    for (Index i = 0; i < accuracy.rows(); ++i) {
      for (Index j = 0; j < accuracy.cols(); ++j) {
        if (train_rates[static_cast<std::size_t>(i)] == test_rates[static_cast<std::size_t>(j)]) {
          diag += accuracy(i, j);
          ++nd;
        } else {
          off += accuracy(i, j);
          ++no;
        }
      }
    }
    return {nd ? diag / static_cast<double>(nd) : 0.0, no ? off / static_cast<double>(no) : 0.0};
  }
};

/// Conventional fixed-rate training at each train rate (single-rate support,
/// uniform intervals, no adaptation), each model evaluated at every test rate.
inline RateGrid cross_rate_grid(const Dataset& train_set, const Dataset& val_set, const Dataset& test_set,
                                std::span<const double> train_rates, std::span<const double> test_rates,
                                const ModelConfig& mcfg, const TrainConfig& tcfg, std::uint64_t eval_seed,
                                const EvalOptions& opts = {}, const EpochCallback& on_epoch = {}) {
  constexpr std::string_view where = "eval_harness.cross_rate_grid";
  require(!train_rates.empty() && !test_rates.empty(), ErrorKind::ConfigError, where, "rate lists must be nonempty");
  RateGrid grid;
  grid.train_rates.assign(train_rates.begin(), train_rates.end());
  grid.test_rates.assign(test_rates.begin(), test_rates.end());
  grid.accuracy.resize(static_cast<Index>(train_rates.size()), static_cast<Index>(test_rates.size()));
  for (std::size_t i = 0; i < train_rates.size(); ++i) {
    AugmentConfig acfg;
    acfg.rate_support = {train_rates[i]};
    acfg.stochastic = false;
    acfg.adapt = false;
    TrainResult trained = train(SrvModel(mcfg), train_set, val_set, tcfg, acfg, on_epoch);
    const EvalReport report = evaluate(trained.model, test_set, test_rates, eval_seed, opts);
    for (std::size_t j = 0; j < test_rates.size(); ++j) {
      grid.accuracy(static_cast<Index>(i), static_cast<Index>(j)) = report.accuracies[j];
    }
  }
  return grid;
}

}  // namespace srvnn
