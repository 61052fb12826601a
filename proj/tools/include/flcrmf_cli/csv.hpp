#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace flcrmf::cli {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Index of a header column, or -1.
  long column(std::string_view name) const;
};

/// Splits one line on commas. Double-quoted fields may contain commas and
/// "" escapes; surrounding whitespace of unquoted fields is trimmed.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no);

/// Reads a header plus rows; blank lines are skipped, ragged rows rejected.
CsvTable parse_csv(std::string_view text, const std::string& source);
CsvTable read_csv(const std::filesystem::path& path);

/// Strict decimal parse of the whole cell; `where` names the cell in errors.
double parse_number(std::string_view cell, const std::string& where);
bool is_number(std::string_view cell);

/// Shortest representation that round-trips to the same double.
std::string format_number(double value);
std::string csv_field(std::string_view text);

}  // namespace flcrmf::cli
