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

#include <cstdint>

#include "srvnn/model.hpp"

namespace srvnn {

/// Floating-point operations for one inference pass over N rows, counting a
/// multiply-add as 2. Per encoder layer:
///   Q/K/V projections      2 * N * C^2 * 3Z
///   scores and weighting   2 * N^2 * C * Z * 2
///   output projection W_U  2 * N * ZC * C
///   two-layer FFN          2 * N * C * H * 2
/// plus 2 * C * M for the classifier. Normalisation, softmax, activations and
/// pooling are not counted.
inline std::uint64_t estimate_flops(const ModelConfig& cfg, std::uint64_t n) {
  const auto c = static_cast<std::uint64_t>(cfg.subcarriers);
  const auto z = static_cast<std::uint64_t>(cfg.heads);
  const auto h = static_cast<std::uint64_t>(cfg.ffn_hidden);
  const auto m = static_cast<std::uint64_t>(cfg.classes);
  const auto e = static_cast<std::uint64_t>(cfg.layers);
  const std::uint64_t per_layer = 2 * n * c * c * 3 * z  // W_Q, W_K, W_V
                                  + 2 * n * n * c * z * 2  // Q K^T and P V
                                  + 2 * n * z * c * c      // W_U
                                  + 2 * n * c * h * 2;     // W_1, W_2
  return e * per_layer + 2 * c * m;
}

/// Deployment-sized profile used for compute budgeting: 2 heads, 4 encoder
/// layers, FFN width 4C.
inline ModelConfig reference_flops_config(Index subcarriers, Index classes) {
  ModelConfig cfg;
  cfg.subcarriers = subcarriers;
  cfg.heads = 2;
  cfg.layers = 4;
  cfg.ffn_hidden = 4 * subcarriers;
  cfg.classes = classes;
  return cfg;
}

}  // namespace srvnn
