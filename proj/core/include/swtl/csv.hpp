#pragma once

#include <string>
#include <vector>

namespace swtl {

/// Shortest round-trip decimal formatting ('.' separator, no locale).
std::string format_double(double x);

/// Split one CSV line on commas (no quoting in any swtl schema).
std::vector<std::string> split_csv_line(const std::string& line);

/// Parse error carrying the 1-based data row number for CLI reporting.
struct CsvParseError {
  std::size_t row;
  std::string message;
};

}  // namespace swtl
