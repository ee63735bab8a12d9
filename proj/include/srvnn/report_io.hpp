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

// Report files.
//
// CSV:
//   rate_hz,accuracy
//   <rate>,<accuracy>      one row per evaluated rate
//   avg,<mean accuracy>
//   var,<population variance>
//   std,<standard deviation>
//
// JSON Lines: one {"rate_hz", "accuracy", "confusion"} object per rate, then
// {"summary": {"avg", "var", "std", "seed", "repetitions"}}.
//
// Grid CSV: header "train_rate_hz,<test rate>,...", then one row per
// training rate.
//
// Numbers are written with 17 significant digits.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "srvnn/dataset_io.hpp"
#include "srvnn/eval.hpp"

namespace srvnn {

enum class ReportFormat { CSV, JSONLines };

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_number(const std::string& s, std::string_view where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    require(used == s.size(), ErrorKind::FormatError, where, "bad number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(ErrorKind::FormatError, where, "bad number '" + s + "'");
  }
}

inline std::string encode_report(const EvalReport& report, ReportFormat format) {
  constexpr std::string_view where = "eval_harness.emit_report";
  require(!report.rates.empty(), ErrorKind::ConfigError, where, "report has no rates");
  require(report.rates.size() == report.accuracies.size(), ErrorKind::ConfigError, where,
          "rates and accuracies differ in length");
  std::string out;
  if (format == ReportFormat::CSV) {
    out = "rate_hz,accuracy\n";
    for (std::size_t i = 0; i < report.rates.size(); ++i) {
      out += format_number(report.rates[i]) + "," + format_number(report.accuracies[i]) + "\n";
    }
    out += "avg," + format_number(report.avg_accuracy) + "\n";
    out += "var," + format_number(report.variance) + "\n";
    out += "std," + format_number(report.std_dev) + "\n";
    return out;
  }
  for (std::size_t i = 0; i < report.rates.size(); ++i) {
    nlohmann::json rec = {{"rate_hz", report.rates[i]}, {"accuracy", report.accuracies[i]}};
    if (i < report.confusion.size()) {
      const auto& cm = report.confusion[i];
      auto rows = nlohmann::json::array();
      for (Index r = 0; r < cm.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Index c = 0; c < cm.cols(); ++c) row.push_back(cm(r, c));
        rows.push_back(std::move(row));
      }
      rec["confusion"] = std::move(rows);
    }
    out += rec.dump() + "\n";
  }
  nlohmann::json summary = {{"avg", report.avg_accuracy},
                            {"var", report.variance},
                            {"std", report.std_dev},
                            {"seed", report.seed},
                            {"repetitions", report.repetitions}};
  out += nlohmann::json{{"summary", summary}}.dump() + "\n";
  return out;
}

inline EvalReport decode_report(const std::string& text, ReportFormat format) {
  constexpr std::string_view where = "eval_harness.parse_report";
  EvalReport report;
  std::istringstream in(text);
  std::string line;
  if (format == ReportFormat::CSV) {
    require(std::getline(in, line) && line == "rate_hz,accuracy", ErrorKind::FormatError, where, "bad CSV header");
    int summary_rows = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto comma = line.find(',');
      require(comma != std::string::npos, ErrorKind::FormatError, where, "bad CSV row '" + line + "'");
      const std::string key = line.substr(0, comma);
      const double value = parse_number(line.substr(comma + 1), where);
      if (key == "avg") {
        report.avg_accuracy = value, ++summary_rows;
      } else if (key == "var") {
        report.variance = value, ++summary_rows;
      } else if (key == "std") {
        report.std_dev = value, ++summary_rows;
      } else {
        require(summary_rows == 0, ErrorKind::FormatError, where, "rate row after summary rows");
        report.rates.push_back(parse_number(key, where));
        report.accuracies.push_back(value);
      }
    }
    require(summary_rows == 3, ErrorKind::FormatError, where, "missing avg/var/std rows");
    return report;
  }
  bool have_summary = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("summary")) {
        const auto& s = j.at("summary");
        report.avg_accuracy = s.at("avg").get<double>();
        report.variance = s.at("var").get<double>();
        report.std_dev = s.at("std").get<double>();
        report.seed = s.at("seed").get<std::uint64_t>();
        report.repetitions = s.at("repetitions").get<std::size_t>();
        have_summary = true;
        continue;
      }
      report.rates.push_back(j.at("rate_hz").get<double>());
      report.accuracies.push_back(j.at("accuracy").get<double>());
      if (j.contains("confusion")) {
        const auto rows = j.at("confusion").get<std::vector<std::vector<int>>>();
        Eigen::MatrixXi cm(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows[0].size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
          require(rows[r].size() == static_cast<std::size_t>(cm.cols()), ErrorKind::FormatError, where,
                  "ragged confusion matrix");
          for (std::size_t c = 0; c < rows[r].size(); ++c) cm(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
        }
        report.confusion.push_back(std::move(cm));
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::FormatError, where, e.what());
    }
  }
  require(have_summary, ErrorKind::FormatError, where, "missing summary record");
  return report;
}

inline void emit_report(const EvalReport& report, const std::filesystem::path& path, ReportFormat format) {
  write_file_bytes(path, encode_report(report, format), "eval_harness.emit_report");
}

inline EvalReport parse_report(const std::filesystem::path& path, ReportFormat format) {
  return decode_report(read_file_bytes(path, "eval_harness.parse_report"), format);
}

inline std::string encode_grid(const RateGrid& grid) {
  std::string out = "train_rate_hz";
  for (double r : grid.test_rates) out += "," + format_number(r);
  out += "\n";
  for (Index i = 0; i < grid.accuracy.rows(); ++i) {
    out += format_number(grid.train_rates[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < grid.accuracy.cols(); ++j) out += "," + format_number(grid.accuracy(i, j));
    out += "\n";
  }
  return out;
}

inline RateGrid decode_grid(const std::string& text) {
  constexpr std::string_view where = "eval_harness.parse_grid";
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    return cells;
  };
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::FormatError, where, "empty grid");
  const auto header = split(line);
  require(!header.empty() && header[0] == "train_rate_hz", ErrorKind::FormatError, where, "bad grid header");
  RateGrid grid;
  for (std::size_t k = 1; k < header.size(); ++k) grid.test_rates.push_back(parse_number(header[k], where));
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    require(cells.size() == header.size(), ErrorKind::FormatError, where, "ragged grid row");
    grid.train_rates.push_back(parse_number(cells[0], where));
    std::vector<double> row;
    for (std::size_t k = 1; k < cells.size(); ++k) row.push_back(parse_number(cells[k], where));
    rows.push_back(std::move(row));
  }
  grid.accuracy.resize(static_cast<Index>(rows.size()), static_cast<Index>(grid.test_rates.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) grid.accuracy(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
  }
  return grid;
}

}  // namespace srvnn
