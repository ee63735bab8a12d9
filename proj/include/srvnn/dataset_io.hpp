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

// SRVCSI01 dataset files.
//
//   offset  type      field
//   0       u8[8]     magic "SRVCSI01"
//   8       u32       version (1)
//   12      u32       M, number of classes
//   then, repeated until end of file, one record per instance:
//           u32       N, rows
//           u32       C, subcarriers
//           i32       label, -1 when unlabeled
//           f64       duration T in seconds
//           f64[N]    timestamps
//           f32[N*C]  amplitudes, row-major
//
// All integers and floats are little-endian. Class names live in a UTF-8
// manifest next to the data file (`<path>.classes`), one name per line.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "srvnn/csi.hpp"
#include "srvnn/error.hpp"

namespace srvnn {

inline constexpr std::array<char, 8> kDatasetMagic = {'S', 'R', 'V', 'C', 'S', 'I', '0', '1'};
inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::filesystem::path manifest_path(const std::filesystem::path& data_path) {
  auto p = data_path;
  p += ".classes";
  return p;
}

namespace le {

template <typename U>
void put_uint(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline void put_u32(std::string& out, std::uint32_t v) { put_uint(out, v); }
inline void put_i32(std::string& out, std::int32_t v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_u64(std::string& out, std::uint64_t v) { put_uint(out, v); }
inline void put_f32(std::string& out, float v) { put_uint(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::string& out, double v) { put_uint(out, std::bit_cast<std::uint64_t>(v)); }

/// Bounds-checked little-endian reader over an in-memory buffer.
class Reader {
 public:
  Reader(const std::string& buf, std::string_view where) : buf_(buf), where_(where) {}

  bool at_end() const noexcept { return pos_ == buf_.size(); }
  std::size_t remaining() const noexcept { return buf_.size() - pos_; }

  void bytes(char* dst, std::size_t n) {
    require(remaining() >= n, ErrorKind::FormatError, where_,
            "truncated file: need " + std::to_string(n) + " bytes at offset " + std::to_string(pos_));
    std::memcpy(dst, buf_.data() + pos_, n);
    pos_ += n;
  }

  template <typename U>
  U uint() {
    std::array<unsigned char, sizeof(U)> b{};
    bytes(reinterpret_cast<char*>(b.data()), sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(b[i]) << (8 * i);
    return v;
  }

  std::uint32_t u32() { return uint<std::uint32_t>(); }
  std::int32_t i32() { return std::bit_cast<std::int32_t>(u32()); }
  std::uint64_t u64() { return uint<std::uint64_t>(); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

 private:
  const std::string& buf_;
  std::string_view where_;
  std::size_t pos_ = 0;
};

}  // namespace le

inline std::string read_file_bytes(const std::filesystem::path& path, std::string_view where) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::IoError, where, "cannot open " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(!in.bad(), ErrorKind::IoError, where, "read failed for " + path.string());
  return buf;
}

inline void write_file_bytes(const std::filesystem::path& path, const std::string& bytes, std::string_view where) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::IoError, where, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  require(static_cast<bool>(out), ErrorKind::IoError, where, "write failed for " + path.string());
}

inline std::string encode_dataset(const Dataset& ds) {
  check_dataset(ds, "csi_core.write_dataset");
  std::string out(kDatasetMagic.begin(), kDatasetMagic.end());
  le::put_u32(out, kDatasetVersion);
  le::put_u32(out, ds.num_classes);
  for (const auto& x : ds.instances) {
    le::put_u32(out, static_cast<std::uint32_t>(x.rows()));
    le::put_u32(out, static_cast<std::uint32_t>(x.subcarriers()));
    le::put_i32(out, x.label ? static_cast<std::int32_t>(*x.label) : -1);
    le::put_f64(out, x.duration);
    for (double t : x.timestamps) le::put_f64(out, t);
    for (Index i = 0; i < x.values.size(); ++i) le::put_f32(out, x.values.data()[i]);
  }
  return out;
}

/// Decodes the binary part; class names are filled with placeholders.
inline Dataset decode_dataset(const std::string& bytes) {
  constexpr std::string_view where = "csi_core.read_dataset";
  le::Reader in(bytes, where);
  std::array<char, 8> magic{};
  in.bytes(magic.data(), magic.size());
  require(magic == kDatasetMagic, ErrorKind::FormatError, where, "bad magic bytes");
  const std::uint32_t version = in.u32();
  require(version == kDatasetVersion, ErrorKind::FormatError, where, "unsupported version " + std::to_string(version));
  Dataset ds;
  ds.num_classes = in.u32();
  require(ds.num_classes >= 1, ErrorKind::FormatError, where, "num_classes must be positive");
  while (!in.at_end()) {
    CsiInstance x;
    const std::uint32_t n = in.u32();
    const std::uint32_t c = in.u32();
    const std::int32_t label = in.i32();
    x.duration = in.f64();
    const std::uint64_t payload = static_cast<std::uint64_t>(n) * 8u + static_cast<std::uint64_t>(n) * c * 4u;
    require(in.remaining() >= payload, ErrorKind::FormatError, where,
            "truncated instance " + std::to_string(ds.instances.size()));
    require(label >= -1, ErrorKind::FormatError, where, "invalid label " + std::to_string(label));
    if (label >= 0) x.label = static_cast<std::uint32_t>(label);
    x.timestamps.resize(n);
    for (auto& t : x.timestamps) t = in.f64();
    x.values.resize(n, c);
    for (Index i = 0; i < x.values.size(); ++i) x.values.data()[i] = in.f32();
    ds.instances.push_back(std::move(x));
  }
  ds.class_names.resize(ds.num_classes);
  for (std::uint32_t m = 0; m < ds.num_classes; ++m) ds.class_names[m] = "class_" + std::to_string(m);
  return ds;
}

inline void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  constexpr std::string_view where = "csi_core.write_dataset";
  write_file_bytes(path, encode_dataset(ds), where);
  std::string manifest;
  for (const auto& name : ds.class_names) {
    require(name.find('\n') == std::string::npos, ErrorKind::FormatError, where, "class name contains a newline");
    manifest += name;
    manifest += '\n';
  }
  write_file_bytes(manifest_path(path), manifest, where);
}

inline Dataset read_dataset(const std::filesystem::path& path) {
  constexpr std::string_view where = "csi_core.read_dataset";
  Dataset ds = decode_dataset(read_file_bytes(path, where));

  std::ifstream manifest(manifest_path(path));
  require(static_cast<bool>(manifest), ErrorKind::IoError, where, "cannot open " + manifest_path(path).string());
  std::vector<std::string> names;
  for (std::string line; std::getline(manifest, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    names.push_back(line);
  }
  require(names.size() == ds.num_classes, ErrorKind::FormatError, where,
          "manifest lists " + std::to_string(names.size()) + " classes, header declares " +
              std::to_string(ds.num_classes));
  ds.class_names = std::move(names);
  try {
    check_dataset(ds, where);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::FormatError) throw;
    fail(ErrorKind::FormatError, where, e.what());
  }
  return ds;
}

}  // namespace srvnn
