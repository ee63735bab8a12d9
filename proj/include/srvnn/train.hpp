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

// Training loop with dynamic sampling-rate augmentation.
//
// Each epoch: shuffle, cut batches, draw one rate per batch from the current
// distribution, reduce every batch member to that rate, take one Adam step.
// After the epoch the model is validated at every support rate; the mean of
// those losses drives the plateau schedule and early stopping, and the
// per-rate losses reweight the distribution for the next epoch.
//
// Random streams, all derived from TrainConfig::seed:
//   shuffle      derive_seed(seed, "augment_train", "shuffle")
//   rate draws   derive_seed(seed, "augment_train", "assign_rate")
//   row picks    derive_seed(seed, "augment_train", "augment")
//   validation   derive_seed(seed, "augment_train", "validate"), the same
//                every epoch so losses are comparable across epochs

#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "srvnn/augment.hpp"
#include "srvnn/model.hpp"
#include "srvnn/optimizer.hpp"

namespace srvnn {

struct TrainConfig {
  std::size_t batch_size = 16;
  double lr = 1e-5;
  std::size_t plateau_patience = 10;
  double plateau_factor = 0.1;
  std::size_t early_stop_patience = 20;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;

  void validate() const {
    constexpr std::string_view where = "augment_train.train";
    require(batch_size > 0 && lr > 0 && plateau_patience > 0 && plateau_factor > 0 && early_stop_patience > 0 &&
                max_epochs > 0,
            ErrorKind::ConfigError, where, "all training hyperparameters must be positive");
    require(plateau_patience < early_stop_patience, ErrorKind::ConfigError, where,
            "plateau_patience must be below early_stop_patience");
  }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0.0;
  double train_loss = 0.0;  // mean over batches
  double val_loss = 0.0;    // mean over support rates
  bool improved = false;
  std::vector<double> rates;
  std::vector<double> rate_losses;
  std::vector<double> rate_accuracies;
  std::vector<double> rate_probs;  // distribution used for this epoch's draws
};

/// One JSON object per line; numbers round-trip exactly.
inline nlohmann::json to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},           {"lr", r.lr},
          {"train_loss", r.train_loss}, {"val_loss", r.val_loss},
          {"improved", r.improved},     {"rates_hz", r.rates},
          {"rate_loss", r.rate_losses}, {"rate_accuracy", r.rate_accuracies},
          {"rate_prob", r.rate_probs}};
}

inline EpochRecord epoch_record_from_json(const nlohmann::json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<std::size_t>();
  r.lr = j.at("lr").get<double>();
  r.train_loss = j.at("train_loss").get<double>();
  r.val_loss = j.at("val_loss").get<double>();
  r.improved = j.at("improved").get<bool>();
  r.rates = j.at("rates_hz").get<std::vector<double>>();
  r.rate_losses = j.at("rate_loss").get<std::vector<double>>();
  r.rate_accuracies = j.at("rate_accuracy").get<std::vector<double>>();
  r.rate_probs = j.at("rate_prob").get<std::vector<double>>();
  return r;
}

inline void write_training_log(std::ostream& out, std::span<const EpochRecord> log) {
  for (const auto& r : log) out << to_json(r).dump() << '\n';
}

struct TrainResult {
  SrvModel model;  // parameters of the best validation epoch
  std::vector<EpochRecord> log;
  std::size_t best_epoch = 0;
  RateDistribution distribution;  // state after the last epoch
};

using EpochCallback = std::function<void(const EpochRecord&)>;

inline void check_training_set(const Dataset& ds, Index subcarriers, double max_rate, std::string_view what) {
  constexpr std::string_view where = "augment_train.train";
  require(!ds.empty(), ErrorKind::ConfigError, where, std::string(what) + " set is empty");
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const auto& x = ds.instances[i];
    require(x.label.has_value(), ErrorKind::UnlabeledInstance, where,
            std::string(what) + " instance " + std::to_string(i) + " has no label");
    require(x.subcarriers() == subcarriers, ErrorKind::DimensionMismatch, where,
            std::string(what) + " instance " + std::to_string(i) + " has the wrong subcarrier count");
  }
  require(max_rate <= ds.min_rate() * (1.0 + 1e-9), ErrorKind::RateTooHigh, where,
          "highest support rate exceeds the " + std::string(what) + " set's sampling rate");
}

inline TrainResult train(SrvModel model, const Dataset& train_set, const Dataset& val_set, const TrainConfig& tcfg,
                         const AugmentConfig& acfg, const EpochCallback& on_epoch = {}) {
  tcfg.validate();
  RateDistribution dist = init_distribution(acfg);
  const Index c = model.config().subcarriers;
  check_training_set(train_set, c, dist.upper(), "training");
  check_training_set(val_set, c, dist.upper(), "validation");

  Rng shuffle_rng(derive_seed(tcfg.seed, "augment_train", "shuffle"));
  Rng rate_rng(derive_seed(tcfg.seed, "augment_train", "assign_rate"));
  Rng augment_rng(derive_seed(tcfg.seed, "augment_train", "augment"));
  const std::uint64_t val_seed = derive_seed(tcfg.seed, "augment_train", "validate");

  AdamState adam(model.num_parameters());
  double lr = tcfg.lr;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<double> best_params = model.parameters();
  std::size_t best_epoch = 0, since_best = 0, plateau = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<CsiInstance> batch;
  std::vector<EpochRecord> log;

  for (std::size_t epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    rec.rates = dist.support;
    rec.rate_probs = dist.probs;

    shuffle(order, shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += tcfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + tcfg.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(train_set.instances[order[k]]);
      const double rate = assign_rate(dist, rate_rng);
      const auto augmented = augment_batch(batch, rate, acfg, augment_rng);
      auto lg = loss_and_grad(model, augmented);
      adam_step(model.parameters(), lg.grad, adam, lr);
      loss_sum += lg.loss;
      ++batches;
    }
    rec.train_loss = loss_sum / static_cast<double>(batches);

    const RateMetrics metrics = validate_per_rate(model, val_set, dist.support, val_seed);
    rec.rate_losses = metrics.losses;
    rec.rate_accuracies = metrics.accuracies;
    rec.val_loss = metrics.mean_loss();

    if (rec.val_loss < best_loss) {
      best_loss = rec.val_loss;
      best_params = model.parameters();
      best_epoch = epoch;
      since_best = 0;
      plateau = 0;
      rec.improved = true;
    } else {
      ++since_best;
      if (++plateau >= tcfg.plateau_patience) {
        lr *= tcfg.plateau_factor;
        plateau = 0;
      }
    }

    if (acfg.adapt) {
      dist = adapt_distribution(dist, metrics.losses, acfg.alpha);
    } else {
      dist.last_losses = metrics.losses;
    }
    if (on_epoch) on_epoch(rec);
    log.push_back(std::move(rec));
    if (since_best >= tcfg.early_stop_patience) break;
  }

  model.parameters() = std::move(best_params);
  return {std::move(model), std::move(log), best_epoch, std::move(dist)};
}

}  // namespace srvnn
