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
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "srvnn/csi.hpp"
#include "srvnn/error.hpp"
#include "srvnn/random.hpp"

namespace srvnn {

// ---------------------------------------------------------------------------
// Packet arrival processes
// ---------------------------------------------------------------------------

enum class IntervalKind { Uniform, RandomUniformOrderStatistics, TracePreset };
enum class TrafficPreset { Video, Web, Email, Idle };

/// Mean packet rates of the measured traffic classes, Hz.
constexpr double preset_mean_rate(TrafficPreset p) noexcept {
  switch (p) {
    case TrafficPreset::Video: return 67.10;
    case TrafficPreset::Web: return 26.8;
    case TrafficPreset::Email: return 22.8;
    case TrafficPreset::Idle: return 10.0;
  }
  return 0.0;
}

/// Packet count a preset would deliver in `duration` seconds, at least 2.
inline std::size_t preset_packet_count(TrafficPreset p, double duration) {
  return static_cast<std::size_t>(std::max<long long>(2, std::llround(preset_mean_rate(p) * duration)));
}

struct IntervalProcess {
  IntervalKind kind = IntervalKind::Uniform;
  std::optional<TrafficPreset> preset;
};

/// Interval multipliers for trace presets are lognormal with this sigma.
inline constexpr double kPresetBurstSigma = 1.0;

/// N strictly increasing, tick-quantized arrival times in [0, T].
///  - Uniform: i * T / N.
///  - RandomUniformOrderStatistics: 0, then N - 2 sorted uniform draws, then
///    T * (N - 1) / N; the trailing T / N closes the window.
///  - TracePreset: lognormal interval multipliers rescaled so the N intervals
///    (the last one being the tail after the final packet) sum to T.
inline std::vector<double> gen_intervals(const IntervalProcess& process, std::size_t n, double duration, Rng& rng) {
  constexpr std::string_view where = "traffic_sim.gen_intervals";
  require(n >= 2, ErrorKind::DegenerateInput, where, "need N >= 2, got " + std::to_string(n));
  require(duration > 0.0 && std::isfinite(duration), ErrorKind::DegenerateInput, where, "duration must be positive");
  std::vector<double> t(n);
  const double nd = static_cast<double>(n);
  switch (process.kind) {
    case IntervalKind::Uniform:
      for (std::size_t i = 0; i < n; ++i) t[i] = quantize_time(static_cast<double>(i) * duration / nd);
      break;
    case IntervalKind::RandomUniformOrderStatistics: {
      const double last = quantize_time(duration * (nd - 1.0) / nd);
      t.front() = 0.0;
      t.back() = last;
      // Interior draws are redrawn until all N values are distinct after
      // quantization; collisions are vanishingly rare at realistic N.
      for (;;) {
        for (std::size_t i = 1; i + 1 < n; ++i) t[i] = quantize_time(unit_uniform(rng) * last);
        std::sort(t.begin() + 1, t.end() - 1);
        bool strict = true;
        for (std::size_t i = 1; i < n && strict; ++i) strict = t[i] > t[i - 1];
        if (strict) break;
      }
      break;
    }
    case IntervalKind::TracePreset: {
      require(process.preset.has_value(), ErrorKind::ConfigError, where, "TracePreset requires a preset");
      std::vector<double> gaps(n);
      for (auto& g : gaps) g = std::exp(kPresetBurstSigma * standard_normal(rng));
      const double total = std::accumulate(gaps.begin(), gaps.end(), 0.0);
      double acc = 0.0;
      t.front() = 0.0;
      for (std::size_t i = 1; i < n; ++i) {
        acc += gaps[i - 1];
        t[i] = quantize_time(acc / total * duration);
        if (t[i] <= t[i - 1]) t[i] = t[i - 1] + kTimeTick;
      }
      break;
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Synthetic motion CSI
// ---------------------------------------------------------------------------

struct SynthConfig {
  std::uint32_t num_classes = 3;
  std::uint32_t instances_per_class = 300;
  std::uint32_t subcarriers = 16;
  double base_rate = 600.0;  // Hz
  double duration = 1.0;     // s
  double noise_sigma = 0.3;
  std::uint64_t seed = 0;

  /// N = base_rate * duration; throws ConfigError unless a positive integer.
  std::size_t rows() const {
    const double n = base_rate * duration;
    const double r = std::round(n);
    require(r >= 1.0 && std::abs(n - r) <= 1e-9 * std::max(1.0, n), ErrorKind::ConfigError, "traffic_sim.synth_dataset",
            "base_rate * duration must be a positive integer, got " + std::to_string(n));
    return static_cast<std::size_t>(r);
  }
};

/// Class frequency pair (2 + 3m, 5 + 4m) Hz.
constexpr std::pair<double, double> class_frequencies(std::uint32_t m) noexcept {
  return {2.0 + 3.0 * m, 5.0 + 4.0 * m};
}

/// Class m, subcarrier c, time t:
///   2 + sin(2 pi f1 t + 2 pi c / C) + sin(2 pi f2 t + 2 pi c / C) + noise
/// clamped at zero. Instances are emitted class by class.
inline Dataset synth_dataset(const SynthConfig& cfg) {
  constexpr std::string_view where = "traffic_sim.synth_dataset";
  require(cfg.num_classes >= 2, ErrorKind::ConfigError, where,
          "num_classes must be >= 2, got " + std::to_string(cfg.num_classes));
  require(cfg.instances_per_class >= 1, ErrorKind::ConfigError, where, "instances_per_class must be >= 1");
  require(cfg.subcarriers >= 2, ErrorKind::ConfigError, where, "subcarriers must be >= 2");
  require(cfg.base_rate > 0.0 && cfg.duration > 0.0, ErrorKind::ConfigError, where,
          "base_rate and duration must be positive");
  require(cfg.noise_sigma >= 0.0, ErrorKind::ConfigError, where, "noise_sigma must be >= 0");
  const std::size_t n = cfg.rows();
  require(n >= 2, ErrorKind::ConfigError, where, "need at least 2 rows per instance");

  Rng rng(cfg.seed);
  const std::vector<double> timestamps = gen_intervals({IntervalKind::Uniform, {}}, n, cfg.duration, rng);
  const double two_pi = 2.0 * std::numbers::pi;
  const double c_count = cfg.subcarriers;

  Dataset ds;
  ds.num_classes = cfg.num_classes;
  for (std::uint32_t m = 0; m < cfg.num_classes; ++m) ds.class_names.push_back("motion_" + std::to_string(m));
  ds.instances.reserve(static_cast<std::size_t>(cfg.num_classes) * cfg.instances_per_class);

  for (std::uint32_t m = 0; m < cfg.num_classes; ++m) {
    const auto [f1, f2] = class_frequencies(m);
    for (std::uint32_t k = 0; k < cfg.instances_per_class; ++k) {
      CsiInstance x;
      x.values.resize(static_cast<Index>(n), cfg.subcarriers);
      x.timestamps = timestamps;
      x.duration = cfg.duration;
      x.label = m;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = timestamps[i];
        for (std::uint32_t c = 0; c < cfg.subcarriers; ++c) {
          const double phase = two_pi * c / c_count;
          double v = 2.0 + std::sin(two_pi * f1 * t + phase) + std::sin(two_pi * f2 * t + phase);
          if (cfg.noise_sigma > 0.0) v += cfg.noise_sigma * standard_normal(rng);
          x.values(static_cast<Index>(i), c) = static_cast<float>(std::max(0.0, v));
        }
      }
      ds.instances.push_back(std::move(x));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Rate reduction
// ---------------------------------------------------------------------------

enum class SamplingMode { UniformIntervals, StochasticIntervals };

/// N_b = max(2, round(N * R_b / R)), halves rounded away from zero.
inline std::size_t resampled_count(std::size_t n, double source_rate, double target_rate) {
  const double nb = std::round(static_cast<double>(n) * target_rate / source_rate);
  return static_cast<std::size_t>(std::max(2.0, nb));
}

/// Row indices kept when reducing N rows to `nb`, sorted, first and last
/// always included. Uniform mode takes the nearest index to each point of an
/// equally spaced grid (exact integer rounding, half up); stochastic mode
/// draws the nb - 2 interior indices uniformly without replacement.
inline std::vector<std::size_t> resample_indices(std::size_t n, std::size_t nb, SamplingMode mode, Rng& rng) {
  std::vector<std::size_t> idx;
  idx.reserve(nb);
  if (mode == SamplingMode::UniformIntervals) {
    const std::size_t span = n - 1, steps = nb - 1;
    for (std::size_t i = 0; i < nb; ++i) idx.push_back((2 * i * span + steps) / (2 * steps));
    return idx;
  }
  // Partial Fisher-Yates over the interior pool {1, ..., n - 2}.
  std::vector<std::size_t> pool(n - 2);
  std::iota(pool.begin(), pool.end(), std::size_t{1});
  const std::size_t k = nb - 2;
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  idx.push_back(0);
  idx.insert(idx.end(), pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
  idx.push_back(n - 1);
  std::sort(idx.begin() + 1, idx.end() - 1);
  return idx;
}

/// Reduces `instance` to `target_rate` by row selection. Timestamps of the
/// kept rows are carried over unchanged, so the first and last arrival and
/// the capture window stay put.
inline CsiInstance resample(const CsiInstance& instance, double target_rate, SamplingMode mode, Rng& rng) {
  constexpr std::string_view where = "traffic_sim.resample";
  require(instance.rows() >= 2, ErrorKind::DegenerateInstance, where, "need N >= 2");
  require(target_rate > 0.0 && std::isfinite(target_rate), ErrorKind::ConfigError, where,
          "target rate must be positive");
  const double source_rate = compute_rate(instance);
  require(target_rate <= source_rate * (1.0 + 1e-9), ErrorKind::RateTooHigh, where,
          "target " + std::to_string(target_rate) + " Hz exceeds source " + std::to_string(source_rate) + " Hz");
  const auto n = static_cast<std::size_t>(instance.rows());
  const std::size_t nb = std::min(n, resampled_count(n, source_rate, target_rate));

  CsiInstance out;
  out.duration = instance.duration;
  out.label = instance.label;
  if (nb == n && mode == SamplingMode::UniformIntervals) {
    out.values = instance.values;
    out.timestamps = instance.timestamps;
    return out;
  }
  const auto idx = resample_indices(n, nb, mode, rng);
  out.values.resize(static_cast<Index>(nb), instance.subcarriers());
  out.timestamps.resize(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    out.values.row(static_cast<Index>(k)) = instance.values.row(static_cast<Index>(idx[k]));
    out.timestamps[k] = instance.timestamps[idx[k]];
  }
  return out;
}

}  // namespace srvnn
