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

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srvnn/error.hpp"
#include "srvnn/random.hpp"

namespace srvnn {

using Index = Eigen::Index;

/// N x C amplitude matrix, one row per received packet.
using AmplitudeMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Timestamps produced by this library sit on a 2^-24 s grid. Every
/// difference and partial sum of such values (below 2^29 s) is exact in
/// double, so interval sums telescope bit-exactly to the capture span.
inline constexpr double kTimeTick = 0x1.0p-24;

inline double quantize_time(double seconds) { return std::nearbyint(seconds / kTimeTick) * kTimeTick; }

struct CsiInstance {
  AmplitudeMatrix values;
  std::vector<double> timestamps;  // seconds, strictly increasing
  double duration = 0.0;           // capture window T, seconds
  std::optional<std::uint32_t> label;

  Index rows() const noexcept { return values.rows(); }
  Index subcarriers() const noexcept { return values.cols(); }
  /// R = N / T
  double nominal_rate() const noexcept { return static_cast<double>(values.rows()) / duration; }
};

inline double compute_rate(const CsiInstance& instance) {
  require(instance.duration > 0.0, ErrorKind::DegenerateInstance, "csi_core.compute_rate",
          "duration must be positive, got " + std::to_string(instance.duration));
  return instance.nominal_rate();
}

/// Structural invariants: shape agreement, monotone timestamps inside the
/// capture window. Value checks are left to preprocess().
inline void check_instance(const CsiInstance& x, std::string_view where) {
  require(static_cast<std::size_t>(x.rows()) == x.timestamps.size(), ErrorKind::DimensionMismatch, where,
          "row count " + std::to_string(x.rows()) + " != timestamp count " + std::to_string(x.timestamps.size()));
  require(x.duration > 0.0 && std::isfinite(x.duration), ErrorKind::DegenerateInstance, where,
          "duration must be positive and finite");
  if (x.timestamps.empty()) return;
  require(x.timestamps.front() >= 0.0, ErrorKind::DegenerateInstance, where, "first timestamp is negative");
  for (std::size_t i = 1; i < x.timestamps.size(); ++i) {
    require(x.timestamps[i] > x.timestamps[i - 1], ErrorKind::DegenerateInstance, where,
            "timestamps not strictly increasing at row " + std::to_string(i));
  }
  require(x.timestamps.back() - x.timestamps.front() <= x.duration, ErrorKind::DegenerateInstance, where,
          "timestamp span exceeds duration");
}

struct Dataset {
  std::vector<CsiInstance> instances;
  std::uint32_t num_classes = 0;
  std::vector<std::string> class_names;

  Index subcarriers() const noexcept { return instances.empty() ? 0 : instances.front().subcarriers(); }
  std::size_t size() const noexcept { return instances.size(); }
  bool empty() const noexcept { return instances.empty(); }

  /// Lowest nominal rate over all instances; the ceiling for any resampling.
  double min_rate() const {
    double r = std::numeric_limits<double>::infinity();
    for (const auto& x : instances) r = std::min(r, x.nominal_rate());
    return r;
  }
};

inline void check_dataset(const Dataset& ds, std::string_view where) {
  require(ds.num_classes >= 1, ErrorKind::FormatError, where, "num_classes must be positive");
  require(ds.class_names.size() == ds.num_classes, ErrorKind::FormatError, where,
          "expected " + std::to_string(ds.num_classes) + " class names, got " + std::to_string(ds.class_names.size()));
  const Index c = ds.subcarriers();
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    const auto& x = ds.instances[i];
    check_instance(x, where);
    require(x.subcarriers() == c, ErrorKind::FormatError, where,
            "instance " + std::to_string(i) + " has " + std::to_string(x.subcarriers()) + " subcarriers, expected " +
                std::to_string(c));
    if (x.label) {
      require(*x.label < ds.num_classes, ErrorKind::FormatError, where,
              "instance " + std::to_string(i) + " labeled " + std::to_string(*x.label) + " but num_classes is " +
                  std::to_string(ds.num_classes));
    }
  }
}

/// Three-way stratified split. Within each class the instance order is
/// shuffled with `seed`; the first round(test_fraction * n) go to test, the
/// next round(val_fraction * n) to validation, the rest to training. Each
/// split keeps the original dataset order.
struct DatasetSplit {
  Dataset train, val, test;
};

inline DatasetSplit split_dataset(const Dataset& ds, double val_fraction, double test_fraction, std::uint64_t seed) {
  require(val_fraction >= 0 && test_fraction >= 0 && val_fraction + test_fraction < 1.0, ErrorKind::ConfigError,
          "csi_core.split_dataset", "fractions must be nonnegative and sum below 1");
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    require(ds.instances[i].label.has_value(), ErrorKind::UnlabeledInstance, "csi_core.split_dataset",
            "instance " + std::to_string(i) + " has no label");
    by_class[*ds.instances[i].label].push_back(i);
  }
  Rng rng(seed);
  std::vector<int> assign(ds.instances.size(), 0);  // 0 train, 1 val, 2 test
  for (auto& members : by_class) {
    shuffle(members, rng);
    const auto n = static_cast<double>(members.size());
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * n));
    const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * n));
    for (std::size_t k = 0; k < members.size(); ++k) {
      assign[members[k]] = k < n_test ? 2 : (k < n_test + n_val ? 1 : 0);
    }
  }
  DatasetSplit out;
  for (Dataset* part : {&out.train, &out.val, &out.test}) {
    part->num_classes = ds.num_classes;
    part->class_names = ds.class_names;
  }
  for (std::size_t i = 0; i < ds.instances.size(); ++i) {
    Dataset* target = assign[i] == 0 ? &out.train : (assign[i] == 1 ? &out.val : &out.test);
    target->instances.push_back(ds.instances[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Hardware-anomaly preprocessing
// ---------------------------------------------------------------------------

struct PreprocessConfig {
  /// Absolute amplitude cap. When unset, the cap is median_multiplier times
  /// the median amplitude of the instance being processed.
  std::optional<double> outlier_threshold;
  double median_multiplier = 10.0;
  /// Minimum share of valid readings a column (pass 1) or row (pass 2) needs
  /// before it may be interpolated.
  double validity_fraction = 0.8;
};

struct PreprocessResult {
  CsiInstance instance;
  std::size_t repaired_entries = 0;  // invalid entries replaced in surviving rows
  std::size_t dropped_rows = 0;
  double threshold = 0.0;
};

namespace detail {

/// valid >= fraction * total, tolerant to the representation error of
/// decimal fractions such as 0.8.
inline bool enough_valid(std::size_t valid, std::size_t total, double fraction) {
  return static_cast<double>(valid) >= fraction * static_cast<double>(total) - 1e-9;
}

/// Fills the entries of `line` flagged in `repair` from the entries flagged in
/// `usable`, by linear interpolation over abscissa `at(i)`. Outside the span of
/// usable entries the nearest usable value is held.
template <typename Line, typename Abscissa>
void interpolate_line(Line line, const std::vector<char>& usable, const std::vector<char>& repair, Abscissa at) {
  const std::size_t n = usable.size();
  std::vector<std::size_t> anchors;
  for (std::size_t i = 0; i < n; ++i) {
    if (usable[i]) anchors.push_back(i);
  }
  if (anchors.empty()) return;
  std::size_t next = 0;  // first anchor with index > i
  for (std::size_t i = 0; i < n; ++i) {
    while (next < anchors.size() && anchors[next] <= i) ++next;
    if (!repair[i]) continue;
    if (next == 0) {
      line(i) = line(anchors.front());
    } else if (next == anchors.size()) {
      line(i) = line(anchors.back());
    } else {
      const std::size_t lo = anchors[next - 1], hi = anchors[next];
      const double w = (at(i) - at(lo)) / (at(hi) - at(lo));
      const double v = (1.0 - w) * static_cast<double>(line(lo)) + w * static_cast<double>(line(hi));
      line(i) = static_cast<float>(v);
    }
  }
}

inline double median_amplitude(const AmplitudeMatrix& m) {
  std::vector<float> v(m.data(), m.data() + m.size());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  double med = *mid;
  if (v.size() % 2 == 0) {
    const float lower = *std::max_element(v.begin(), mid);
    med = 0.5 * (static_cast<double>(lower) + med);
  }
  return med;
}

}  // namespace detail

/// Two-pass outlier repair. Entries that are non-finite, negative, or above
/// the threshold are invalid.
///   Pass 1, per subcarrier column: if the column has enough valid readings,
///           invalid entries are interpolated along time; otherwise they stay
///           unresolved.
///   Pass 2, per timestamp row: unresolved entries are interpolated across
///           subcarriers when enough of the row is resolved; otherwise the
///           row is deleted.
/// Interpolation in a pass only reads entries that were valid when the pass
/// started. Duration is kept; the nominal rate follows the surviving N.
inline PreprocessResult preprocess(const CsiInstance& input, const PreprocessConfig& cfg) {
  constexpr std::string_view where = "csi_core.preprocess";
  require(input.rows() >= 2 && input.subcarriers() >= 2, ErrorKind::DegenerateInstance, where,
          "need N >= 2 and C >= 2, got " + std::to_string(input.rows()) + "x" + std::to_string(input.subcarriers()));
  check_instance(input, where);
  require(cfg.validity_fraction > 0.0 && cfg.validity_fraction <= 1.0, ErrorKind::ConfigError, where,
          "validity_fraction must lie in (0, 1]");

  const double threshold = cfg.outlier_threshold ? *cfg.outlier_threshold
                                                 : cfg.median_multiplier * detail::median_amplitude(input.values);
  require(threshold > 0.0 && std::isfinite(threshold), ErrorKind::ConfigError, where,
          "outlier threshold must be positive, got " + std::to_string(threshold));

  const auto n = static_cast<std::size_t>(input.rows());
  const auto c = static_cast<std::size_t>(input.subcarriers());
  AmplitudeMatrix values = input.values;

  // resolved(i, j): entry holds a trustworthy value.
  std::vector<char> resolved(n * c);
  std::vector<char> was_invalid(n * c);
  std::size_t invalid_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      const float v = values(static_cast<Index>(i), static_cast<Index>(j));
      const bool ok = std::isfinite(v) && v >= 0.0f && static_cast<double>(v) <= threshold;
      resolved[i * c + j] = ok;
      was_invalid[i * c + j] = !ok;
      invalid_total += !ok;
    }
  }

  PreprocessResult result;
  result.threshold = threshold;
  if (invalid_total == 0) {
    result.instance = input;
    return result;
  }

  // Pass 1: temporal interpolation per subcarrier.
  {
    std::vector<char> usable(n), repair(n);
    std::vector<std::size_t> fixed_cols;
    std::vector<std::vector<char>> col_repairs;
    for (std::size_t j = 0; j < c; ++j) {
      std::size_t valid = 0;
      for (std::size_t i = 0; i < n; ++i) {
        usable[i] = resolved[i * c + j];
        repair[i] = !usable[i];
        valid += usable[i];
      }
      if (valid == n || !detail::enough_valid(valid, n, cfg.validity_fraction)) continue;
      auto column = [&](std::size_t i) -> float& { return values(static_cast<Index>(i), static_cast<Index>(j)); };
      detail::interpolate_line(column, usable, repair, [&](std::size_t i) { return input.timestamps[i]; });
      fixed_cols.push_back(j);
    }
    for (std::size_t j : fixed_cols) {
      for (std::size_t i = 0; i < n; ++i) resolved[i * c + j] = 1;
    }
  }

  // Pass 2: interpolation across subcarriers per timestamp, or row deletion.
  std::vector<char> keep(n, 1);
  {
    std::vector<char> usable(c), repair(c);
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t valid = 0;
      for (std::size_t j = 0; j < c; ++j) {
        usable[j] = resolved[i * c + j];
        repair[j] = !usable[j];
        valid += usable[j];
      }
      if (valid == c) continue;
      if (!detail::enough_valid(valid, c, cfg.validity_fraction)) {
        keep[i] = 0;
        continue;
      }
      auto row = [&](std::size_t j) -> float& { return values(static_cast<Index>(i), static_cast<Index>(j)); };
      detail::interpolate_line(row, usable, repair, [](std::size_t j) { return static_cast<double>(j); });
    }
  }

  const auto survivors = static_cast<std::size_t>(std::count(keep.begin(), keep.end(), char{1}));
  require(survivors > 0, ErrorKind::EmptyAfterPreprocess, where, "every row was dropped");

  CsiInstance& out = result.instance;
  out.values.resize(static_cast<Index>(survivors), static_cast<Index>(c));
  out.timestamps.reserve(survivors);
  out.duration = input.duration;
  out.label = input.label;
  Index r = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!keep[i]) {
      ++result.dropped_rows;
      continue;
    }
    out.values.row(r++) = values.row(static_cast<Index>(i));
    out.timestamps.push_back(input.timestamps[i]);
    for (std::size_t j = 0; j < c; ++j) result.repaired_entries += was_invalid[i * c + j];
  }
  return result;
}

}  // namespace srvnn
