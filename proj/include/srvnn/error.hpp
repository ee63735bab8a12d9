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

#include <stdexcept>
#include <string>
#include <string_view>

namespace srvnn {

/// Error kinds surfaced by the library. Every thrown srvnn::Error names the
/// module and operation that failed, so CLI messages read e.g.
/// "csi_core.preprocess: EmptyAfterPreprocess: every row was dropped".
enum class ErrorKind {
  ConfigError,
  FormatError,
  IoError,
  DegenerateInstance,
  DegenerateInput,
  EmptyAfterPreprocess,
  RateTooHigh,
  DimensionMismatch,
  UnlabeledInstance,
  LossCountMismatch,
  NonFiniteLoss,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::FormatError: return "FormatError";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::DegenerateInstance: return "DegenerateInstance";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::EmptyAfterPreprocess: return "EmptyAfterPreprocess";
    case ErrorKind::RateTooHigh: return "RateTooHigh";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::UnlabeledInstance: return "UnlabeledInstance";
    case ErrorKind::LossCountMismatch: return "LossCountMismatch";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string_view where, const std::string& detail)
      : std::runtime_error(std::string(where) + ": " + std::string(to_string(kind)) + ": " + detail),
        kind_(kind),
        where_(where) {}

  ErrorKind kind() const noexcept { return kind_; }
  /// "module.operation"
  const std::string& where() const noexcept { return where_; }

 private:
  ErrorKind kind_;
  std::string where_;
};

[[noreturn]] inline void fail(ErrorKind kind, std::string_view where, const std::string& detail) {
  throw Error(kind, where, detail);
}

inline void require(bool cond, ErrorKind kind, std::string_view where, const std::string& detail) {
  if (!cond) fail(kind, where, detail);
}

}  // namespace srvnn
