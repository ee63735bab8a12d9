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

// Shared fixtures and independent oracles for the unit and acceptance suites.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <span>
#include <numbers>
#include <vector>

#include "srvnn/csi.hpp"
#include "srvnn/model.hpp"
#include "srvnn/random.hpp"

namespace srvnn::testing {

/// Instance with uniform timestamps i * T / N and values f(row, col).
inline CsiInstance make_instance(Index n, Index c, double duration, const std::function<double(Index, Index)>& f,
                                 std::optional<std::uint32_t> label = std::nullopt) {
  CsiInstance x;
  x.values.resize(n, c);
  x.duration = duration;
  x.label = label;
  for (Index i = 0; i < n; ++i) {
    x.timestamps.push_back(quantize_time(static_cast<double>(i) * duration / static_cast<double>(n)));
    for (Index j = 0; j < c; ++j) x.values(i, j) = static_cast<float>(f(i, j));
  }
  return x;
}

/// Clean amplitudes in [1, 2) with known spike positions.
struct CorruptedInstance {
  CsiInstance instance;
  std::vector<std::vector<char>> spiked;  // [row][col]
  std::size_t spikes = 0;
};

/// Random corruption mixing isolated spikes, heavily corrupted subcarrier
/// columns, and rows hit across many subcarriers. Spikes are 50 (or NaN),
/// far above a threshold of 5.
inline CorruptedInstance make_corrupted(std::uint64_t seed) {
  Rng rng(seed);
  const Index n = 20 + static_cast<Index>(uniform_index(rng, 60));
  const Index c = 5 + static_cast<Index>(uniform_index(rng, 20));
  CorruptedInstance out;
  out.instance = make_instance(n, c, 1.0, [&](Index, Index) { return 1.0 + unit_uniform(rng); }, 0u);
  out.spiked.assign(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(c), 0));
  auto spike = [&](Index i, Index j) { out.spiked[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = 1; };
  // isolated spikes
  const auto isolated = uniform_index(rng, static_cast<std::uint64_t>(n * c / 10 + 1));
  for (std::uint64_t k = 0; k < isolated; ++k) {
    spike(static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n))),
          static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(c))));
  }
  // a few heavily corrupted columns
  const auto bad_cols = uniform_index(rng, 4);
  for (std::uint64_t k = 0; k < bad_cols; ++k) {
    const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(c)));
    const double share = 0.1 + 0.5 * unit_uniform(rng);
    for (Index i = 0; i < n; ++i) {
      if (unit_uniform(rng) < share) spike(i, j);
    }
  }
  // a few rows hit across many subcarriers
  const auto bad_rows = uniform_index(rng, 4);
  for (std::uint64_t k = 0; k < bad_rows; ++k) {
    const auto i = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(n)));
    const double share = 0.5 * unit_uniform(rng);
    for (Index j = 0; j < c; ++j) {
      if (unit_uniform(rng) < share) spike(i, j);
    }
  }
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < c; ++j) {
      if (!out.spiked[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]) continue;
      ++out.spikes;
      out.instance.values(i, j) = unit_uniform(rng) < 0.1 ? std::numeric_limits<float>::quiet_NaN() : 50.0f;
    }
  }
  return out;
}

/// Count-only replay of the repair rules with an 80% validity requirement,
/// in integer arithmetic: a column is repairable when 10 * valid >= 8 * N;
/// a row survives when 10 * resolved >= 8 * C.
struct ReplayCounts {
  std::size_t repaired = 0;
  std::size_t dropped_rows = 0;
};

inline ReplayCounts replay_repair_rules(const std::vector<std::vector<char>>& spiked) {
  const std::size_t n = spiked.size(), c = spiked.front().size();
  std::vector<char> column_ok(c);
  for (std::size_t j = 0; j < c; ++j) {
    std::size_t valid = 0;
    for (std::size_t i = 0; i < n; ++i) valid += !spiked[i][j];
    column_ok[j] = 10 * valid >= 8 * n;
  }
  ReplayCounts out;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t unresolved = 0, spikes = 0;
    for (std::size_t j = 0; j < c; ++j) {
      spikes += spiked[i][j];
      unresolved += spiked[i][j] && !column_ok[j];
    }
    if (10 * (c - unresolved) >= 8 * c) {
      out.repaired += spikes;
    } else {
      ++out.dropped_rows;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Straight-line model oracle: nested loops over std::vector, reading the flat
// parameter buffer in its documented order. Shares no code with the library.
// ---------------------------------------------------------------------------

using Table = std::vector<std::vector<double>>;

inline Table zeros(std::size_t r, std::size_t c) { return Table(r, std::vector<double>(c, 0.0)); }

struct FlatReader {
  const std::vector<double>& p;
  std::size_t at = 0;
  Table matrix(std::size_t r, std::size_t c) {
    Table m = zeros(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) m[i][j] = p[at++];
    return m;
  }
  std::vector<double> vector(std::size_t n) {
    std::vector<double> v(p.begin() + static_cast<std::ptrdiff_t>(at), p.begin() + static_cast<std::ptrdiff_t>(at + n));
    at += n;
    return v;
  }
};

inline Table matmul(const Table& a, const Table& b, std::uint64_t& madds) {
  Table out = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) {
        out[i][j] += a[i][k] * b[k][j];
        ++madds;
      }
  return out;
}

inline Table row_layer_norm(const Table& x, const std::vector<double>& g, const std::vector<double>& b, double eps) {
  Table out = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double mean = 0.0;
    for (double v : x[i]) mean += v;
    mean /= static_cast<double>(x[i].size());
    double var = 0.0;
    for (double v : x[i]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x[i].size());
    for (std::size_t j = 0; j < x[i].size(); ++j) out[i][j] = g[j] * (x[i][j] - mean) / std::sqrt(var + eps) + b[j];
  }
  return out;
}

/// `madds`, when given, receives the number of multiply-adds executed in
/// matrix products (projections, attention, FFN, classifier).
inline std::vector<double> reference_forward(const ModelConfig& cfg, const std::vector<double>& params,
                                             const CsiInstance& x, std::uint64_t* madds = nullptr) {
  std::uint64_t counted = 0;
  const auto n = static_cast<std::size_t>(x.rows());
  const auto c = static_cast<std::size_t>(cfg.subcarriers);
  const auto z = static_cast<std::size_t>(cfg.heads);
  const auto hdim = static_cast<std::size_t>(cfg.ffn_hidden);
  const auto m = static_cast<std::size_t>(cfg.classes);
  FlatReader rd{params};

  Table a = zeros(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    double pos = static_cast<double>(i);
    if (cfg.pos_encoding == PositionalEncoding::SinusoidalTime) {
      pos = x.timestamps[i] / x.duration * cfg.time_reference_length;
    }
    for (std::size_t j = 0; j < c; ++j) {
      const double w = 1.0 / std::pow(10000.0, static_cast<double>(2 * (j / 2)) / static_cast<double>(c));
      a[i][j] = static_cast<double>(x.values(static_cast<Index>(i), static_cast<Index>(j))) +
                (j % 2 == 0 ? std::sin(pos * w) : std::cos(pos * w));
    }
  }

  for (Index layer = 0; layer < cfg.layers; ++layer) {
    Table concat = zeros(n, z * c);
    for (std::size_t h = 0; h < z; ++h) {
      const Table q = matmul(a, rd.matrix(c, c), counted);
      const Table k = matmul(a, rd.matrix(c, c), counted);
      const Table v = matmul(a, rd.matrix(c, c), counted);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> s(n);
        double mx = -INFINITY;
        for (std::size_t t = 0; t < n; ++t) {
          double dot = 0.0;
          for (std::size_t j = 0; j < c; ++j) {
            dot += q[i][j] * k[t][j];
            ++counted;
          }
          s[t] = dot / std::sqrt(static_cast<double>(c));
          mx = std::max(mx, s[t]);
        }
        double total = 0.0;
        for (auto& e : s) total += (e = std::exp(e - mx));
        for (std::size_t t = 0; t < n; ++t)
          for (std::size_t j = 0; j < c; ++j) {
            concat[i][h * c + j] += s[t] / total * v[t][j];
            ++counted;
          }
      }
    }
    Table res = matmul(concat, rd.matrix(z * c, c), counted);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) res[i][j] += a[i][j];
    const auto g1 = rd.vector(c), b1n = rd.vector(c);
    const Table hid = row_layer_norm(res, g1, b1n, cfg.layer_norm_eps);
    const Table w1 = rd.matrix(c, hdim);
    const auto b1 = rd.vector(hdim);
    const Table w2 = rd.matrix(hdim, c);
    const auto b2 = rd.vector(c);
    const auto g2 = rd.vector(c), b2n = rd.vector(c);
    Table pre = matmul(hid, w1, counted);
    for (auto& row : pre)
      for (std::size_t j = 0; j < hdim; ++j) row[j] = std::max(0.0, row[j] + b1[j]);
    Table f = matmul(pre, w2, counted);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < c; ++j) f[i][j] += b2[j] + (cfg.output_norm ? hid[i][j] : 0.0);
    a = cfg.output_norm ? row_layer_norm(f, g2, b2n, cfg.layer_norm_eps) : f;
  }

  std::vector<double> pooled(c, -INFINITY);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < c; ++j) pooled[j] = std::max(pooled[j], a[i][j]);
  const Table wc = rd.matrix(c, m);
  const auto bc = rd.vector(m);
  std::vector<double> logits(bc);
  for (std::size_t j = 0; j < c; ++j)
    for (std::size_t k = 0; k < m; ++k) {
      logits[k] += pooled[j] * wc[j][k];
      ++counted;
    }
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) total += (l = std::exp(l - mx));
  for (auto& l : logits) l /= total;
  if (madds) *madds = counted;
  return logits;
}

/// Random instance of shape n x c with amplitudes in [0, 3) and
/// order-statistic timestamps on [0, 1).
inline CsiInstance random_instance(Index n, Index c, Rng& rng, std::uint32_t label) {
  CsiInstance x = make_instance(n, c, 1.0, [&](Index, Index) { return 3.0 * unit_uniform(rng); }, label);
  if (n >= 2) {
    for (Index i = 1; i < n; ++i) {
      x.timestamps[static_cast<std::size_t>(i)] =
          x.timestamps[static_cast<std::size_t>(i - 1)] + quantize_time((0.2 + unit_uniform(rng)) / static_cast<double>(n + 1));
    }
  }
  return x;
}

inline double batch_loss(const SrvModel& model, std::span<const CsiInstance> batch) {
  double loss = 0.0;
  for (const auto& x : batch) loss -= std::log(forward(model, x)(*x.label));
  return loss / static_cast<double>(batch.size());
}

/// Largest |analytic - numeric| / max(|analytic|, |numeric|, floor) over all
/// parameters, numeric gradients by central differences of the batch loss.
inline double max_gradient_relative_error(const SrvModel& model, std::span<const CsiInstance> batch, double step,
                                          double floor) {
  const auto analytic = loss_and_grad(model, batch).grad;
  SrvModel probe = model;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.num_parameters(); ++i) {
    const double saved = probe.parameters()[i];
    probe.parameters()[i] = saved + step;
    const double up = batch_loss(probe, batch);
    probe.parameters()[i] = saved - step;
    const double down = batch_loss(probe, batch);
    probe.parameters()[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

/// Random parameter fill for tests that need non-trivial biases and gains.
inline void randomize_parameters(SrvModel& model, std::uint64_t seed, double scale) {
  Rng rng(seed);
  for (double& p : model.parameters()) p = scale * (2.0 * unit_uniform(rng) - 1.0);
}

}  // namespace srvnn::testing
