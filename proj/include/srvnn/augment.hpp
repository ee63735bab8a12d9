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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "srvnn/csi.hpp"
#include "srvnn/error.hpp"
#include "srvnn/model.hpp"
#include "srvnn/random.hpp"
#include "srvnn/traffic.hpp"

namespace srvnn {

/// Rate lists swept for the four reference datasets, Hz.
inline const std::vector<double> kSrvActivityRates = {5, 10, 20, 30, 40, 50, 100, 200, 300, 400, 500, 600};
inline const std::vector<double> kSrvGestureRates = kSrvActivityRates;
inline const std::vector<double> kSharpRates = {5, 10, 20, 40, 60, 80, 90, 100, 120, 140, 160, 173};
inline const std::vector<double> kWidarRates = {5, 10, 20, 30, 40, 50, 100, 200, 400, 600, 800, 1000};

/// low, low + step, ... up to and including high (within 1e-9 * step).
inline std::vector<double> rate_range(double low, double high, double step) {
  require(low > 0 && high >= low && step > 0, ErrorKind::ConfigError, "augment_train.rate_range",
          "need 0 < low <= high and step > 0");
  std::vector<double> out;
  for (std::size_t k = 0;; ++k) {
    const double r = low + static_cast<double>(k) * step;
    if (r > high + 1e-9 * step) break;
    out.push_back(r);
  }
  return out;
}

/// Discrete probability mass over candidate training rates.
struct RateDistribution {
  std::vector<double> support;  // ascending, Hz
  std::vector<double> probs;
  std::optional<std::vector<double>> last_losses;

  double low() const { return support.front(); }
  double upper() const { return support.back(); }
};

inline void check_distribution(const RateDistribution& d, std::string_view where) {
  require(!d.support.empty() && d.support.size() == d.probs.size(), ErrorKind::ConfigError, where,
          "support and probabilities must be nonempty and equally long");
  double sum = 0.0;
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    require(d.support[i] > 0 && (i == 0 || d.support[i] > d.support[i - 1]), ErrorKind::ConfigError, where,
            "support must be positive and strictly ascending");
    require(d.probs[i] >= 0.0 && std::isfinite(d.probs[i]), ErrorKind::ConfigError, where,
            "probabilities must be finite and nonnegative");
    sum += d.probs[i];
  }
  require(std::abs(sum - 1.0) <= 1e-9, ErrorKind::ConfigError, where, "probabilities sum to " + std::to_string(sum));
}

struct AugmentConfig {
  double alpha = 0.7;
  std::vector<double> rate_support = {5, 10, 25, 50, 100, 200, 400, 600};
  /// false: uniform-interval row selection instead of random intervals.
  bool stochastic = true;
  /// false: keep the initial uniform distribution for the whole run.
  bool adapt = true;
};

inline RateDistribution init_distribution(const AugmentConfig& cfg) {
  constexpr std::string_view where = "augment_train.init_distribution";
  require(!cfg.rate_support.empty(), ErrorKind::ConfigError, where, "rate support is empty");
  require(cfg.alpha > 0.0, ErrorKind::ConfigError, where, "alpha must be positive");
  RateDistribution d;
  d.support = cfg.rate_support;
  d.probs.assign(d.support.size(), 1.0 / static_cast<double>(d.support.size()));
  check_distribution(d, where);
  return d;
}

/// Draws one support rate by inverse CDF; always consumes one draw.
inline double assign_rate(const RateDistribution& dist, Rng& rng) {
  const double u = unit_uniform(rng);
  double cum = 0.0;
  for (std::size_t i = 0; i < dist.probs.size(); ++i) {
    cum += dist.probs[i];
    if (u < cum) return dist.support[i];
  }
  // u landed in the rounding gap above the final partial sum.
  for (std::size_t i = dist.probs.size(); i-- > 0;) {
    if (dist.probs[i] > 0.0) return dist.support[i];
  }
  return dist.support.back();
}

/// Loss-proportional reweighting:
///   dP_i = P_i * (L_i - L_min) / (L_max - L_min) * alpha,  P_i += dP_i,
/// then renormalise. When every loss is equal the distribution is returned
/// unchanged.
inline RateDistribution adapt_distribution(const RateDistribution& dist, std::span<const double> losses, double alpha) {
  constexpr std::string_view where = "augment_train.adapt_distribution";
  require(losses.size() == dist.support.size(), ErrorKind::LossCountMismatch, where,
          "got " + std::to_string(losses.size()) + " losses for " + std::to_string(dist.support.size()) + " rates");
  for (double l : losses) require(std::isfinite(l), ErrorKind::NonFiniteLoss, where, "loss is not finite");
  RateDistribution out = dist;
  out.last_losses = std::vector<double>(losses.begin(), losses.end());
  const auto [lo, hi] = std::minmax_element(losses.begin(), losses.end());
  const double l_min = *lo, l_max = *hi;
  if (!(l_max > l_min)) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < out.probs.size(); ++i) {
    out.probs[i] += out.probs[i] * ((losses[i] - l_min) / (l_max - l_min)) * alpha;
    sum += out.probs[i];
  }
  for (double& p : out.probs) p /= sum;
  return out;
}

/// Resamples every instance of the batch to the shared rate.
inline std::vector<CsiInstance> augment_batch(std::span<const CsiInstance> batch, double rate, const AugmentConfig& cfg,
                                              Rng& rng) {
  const SamplingMode mode = cfg.stochastic ? SamplingMode::StochasticIntervals : SamplingMode::UniformIntervals;
  std::vector<CsiInstance> out;
  out.reserve(batch.size());
  for (const auto& x : batch) out.push_back(resample(x, rate, mode, rng));
  return out;
}

struct RateMetrics {
  std::vector<double> rates;
  std::vector<double> losses;      // mean cross-entropy per rate
  std::vector<double> accuracies;  // per rate

  double mean_loss() const {
    double s = 0.0;
    for (double l : losses) s += l;
    return s / static_cast<double>(losses.size());
  }
};

/// Index of the largest probability, first on ties.
inline Index predicted_class(const Eigen::VectorXd& probs) {
  Index k = 0;
  probs.maxCoeff(&k);
  return k;
}

/// Per-rate validation: the set is reduced to each rate with random
/// intervals (a fresh stream per rate derived from `seed`), then classified.
template <ProbabilisticClassifier Model>
RateMetrics validate_per_rate(const Model& model, const Dataset& val, std::span<const double> rates,
                              std::uint64_t seed) {
  constexpr std::string_view where = "augment_train.validate_per_rate";
  require(!val.empty(), ErrorKind::ConfigError, where, "validation set is empty");
  RateMetrics out;
  out.rates.assign(rates.begin(), rates.end());
  for (std::size_t i = 0; i < rates.size(); ++i) {
    Rng rng(derive_seed(seed, "augment_train", "validate_rate", i));
    double loss = 0.0;
    std::size_t correct = 0;
    for (std::size_t k = 0; k < val.instances.size(); ++k) {
      const auto& x = val.instances[k];
      require(x.label.has_value(), ErrorKind::UnlabeledInstance, where, "validation instance " + std::to_string(k));
      const Eigen::VectorXd p = model.predict_proba(resample(x, rates[i], SamplingMode::StochasticIntervals, rng));
      loss -= std::log(std::max(p(static_cast<Index>(*x.label)), std::numeric_limits<double>::min()));
      correct += predicted_class(p) == static_cast<Index>(*x.label);
    }
    const auto n = static_cast<double>(val.instances.size());
    out.losses.push_back(loss / n);
    out.accuracies.push_back(static_cast<double>(correct) / n);
  }
  return out;
}

}  // namespace srvnn
