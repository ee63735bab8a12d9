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

// SRVNN001 checkpoints, all fields little-endian:
//   u8[8] magic "SRVNN001"
//   u32 C, u32 Z, u32 E, u32 H, u32 M
//   u32 positional encoding (0 index, 1 time), u32 output_norm (0/1)
//   f64 time_reference_length, f64 layer_norm_eps
//   u64 init_seed, f64 init_scale
//   u64 parameter count, then that many f64 in ParameterLayout order

#include <array>
#include <filesystem>
#include <string>

#include "srvnn/dataset_io.hpp"
#include "srvnn/model.hpp"

namespace srvnn {

inline constexpr std::array<char, 8> kCheckpointMagic = {'S', 'R', 'V', 'N', 'N', '0', '0', '1'};

inline std::string encode_checkpoint(const SrvModel& model) {
  const auto& cfg = model.config();
  std::string out(kCheckpointMagic.begin(), kCheckpointMagic.end());
  le::put_u32(out, static_cast<std::uint32_t>(cfg.subcarriers));
  le::put_u32(out, static_cast<std::uint32_t>(cfg.heads));
  le::put_u32(out, static_cast<std::uint32_t>(cfg.layers));
  le::put_u32(out, static_cast<std::uint32_t>(cfg.ffn_hidden));
  le::put_u32(out, static_cast<std::uint32_t>(cfg.classes));
  le::put_u32(out, cfg.pos_encoding == PositionalEncoding::SinusoidalTime ? 1u : 0u);
  le::put_u32(out, cfg.output_norm ? 1u : 0u);
  le::put_f64(out, cfg.time_reference_length);
  le::put_f64(out, cfg.layer_norm_eps);
  le::put_u64(out, cfg.init_seed);
  le::put_f64(out, cfg.init_scale);
  le::put_u64(out, model.num_parameters());
  for (double v : model.parameters()) le::put_f64(out, v);
  return out;
}

inline SrvModel decode_checkpoint(const std::string& bytes) {
  constexpr std::string_view where = "srv_model.read_checkpoint";
  le::Reader in(bytes, where);
  std::array<char, 8> magic{};
  in.bytes(magic.data(), magic.size());
  require(magic == kCheckpointMagic, ErrorKind::FormatError, where, "bad magic bytes");
  ModelConfig cfg;
  cfg.subcarriers = in.u32();
  cfg.heads = in.u32();
  cfg.layers = in.u32();
  cfg.ffn_hidden = in.u32();
  cfg.classes = in.u32();
  const std::uint32_t pe = in.u32();
  require(pe <= 1, ErrorKind::FormatError, where, "unknown positional encoding " + std::to_string(pe));
  cfg.pos_encoding = pe == 1 ? PositionalEncoding::SinusoidalTime : PositionalEncoding::SinusoidalIndex;
  const std::uint32_t norm = in.u32();
  require(norm <= 1, ErrorKind::FormatError, where, "bad output_norm flag");
  cfg.output_norm = norm == 1;
  cfg.time_reference_length = in.f64();
  cfg.layer_norm_eps = in.f64();
  cfg.init_seed = in.u64();
  cfg.init_scale = in.f64();
  try {
    cfg.validate();
  } catch (const Error& e) {
    fail(ErrorKind::FormatError, where, e.what());
  }
  const std::uint64_t count = in.u64();
  const auto expected = static_cast<std::uint64_t>(ParameterLayout(cfg).size);
  require(count == expected, ErrorKind::FormatError, where,
          "parameter count " + std::to_string(count) + " does not match config (" + std::to_string(expected) + ")");
  require(in.remaining() == count * 8, ErrorKind::FormatError, where, "parameter block size mismatch");
  std::vector<double> params(count);
  for (auto& v : params) v = in.f64();
  return SrvModel(cfg, std::move(params));
}

inline void write_checkpoint(const SrvModel& model, const std::filesystem::path& path) {
  write_file_bytes(path, encode_checkpoint(model), "srv_model.write_checkpoint");
}

inline SrvModel read_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file_bytes(path, "srv_model.read_checkpoint"));
}

}  // namespace srvnn
