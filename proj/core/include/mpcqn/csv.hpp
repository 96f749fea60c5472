// SPDX-License-Identifier: MIT
/// \file csv.hpp
/// \brief Small CSV reader/writer used for run artifacts.
///
/// Numbers are written with "%.17g" so a file round-trips doubles exactly;
/// byte-identical inputs therefore produce byte-identical files.

#pragma once

#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "mpcqn/errors.hpp"

namespace mpcqn {

/// Formats a double with enough digits to round-trip exactly.
std::string format_g17(double v);

/// Parses a string previously produced by format_g17 (or any double literal).
double parse_double(const std::string& text);

/// Streaming CSV writer with a fixed header.
class CsvWriter {
 public:
  /// Opens (truncates) the file and writes the header row.
  CsvWriter(const std::filesystem::path& path,
            const std::vector<std::string>& header);

  /// Writes one row of numeric cells (formatted with %.17g).
  void row(std::span<const double> values);

  /// Writes one row of already-formatted cells (empty string = empty field).
  void row(const std::vector<std::string>& cells);

  /// Flushes and closes; throws IoError on failure.  Called by destructor
  /// as well, but calling explicitly surfaces errors.
  void close();

  ~CsvWriter();

  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t n_cols_;
  bool closed_ = false;
};

/// Reads a whole CSV file, header row included, splitting cells on commas.
/// No quoting or escaping is supported (none of our artifacts need it).
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

}  // namespace mpcqn
