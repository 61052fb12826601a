#include "flcrmf_cli/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "flcrmf/error.hpp"

namespace flcrmf::cli {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

long CsvTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == name) return static_cast<long>(c);
  }
  return -1;
}

std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields;
  std::size_t i = 0;
  while (true) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::string field;
    if (i < line.size() && line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        field += line[i++];
      }
      if (!closed) throw InputError("line " + std::to_string(line_no) + ": unterminated quote");
      const auto next = line.find(',', i);
      if (!trim(line.substr(i, next == std::string_view::npos ? next : next - i)).empty()) {
        throw InputError("line " + std::to_string(line_no) + ": text after closing quote");
      }
      i = next;
    } else {
      const auto next = line.find(',', i);
      field = std::string(trim(line.substr(i, next == std::string_view::npos ? next : next - i)));
      i = next;
    }
    fields.push_back(std::move(field));
    if (i == std::string_view::npos) break;
    ++i;
  }
  return fields;
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool have_header = false;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (trim(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    auto fields = split_csv_line(line, line_no);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
    } else {
      if (fields.size() != table.header.size()) {
        throw InputError(source + " line " + std::to_string(line_no) + ": expected " +
                         std::to_string(table.header.size()) + " fields, found " +
                         std::to_string(fields.size()));
      }
      table.rows.push_back(std::move(fields));
    }
    if (end == text.size()) break;
  }
  if (!have_header) throw InputError(source + ": empty file");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), path.string());
}

bool is_number(std::string_view cell) {
  if (cell.empty()) return false;
  if (cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  return ec == std::errc() && ptr == cell.data() + cell.size();
}

double parse_number(std::string_view cell, const std::string& where) {
  std::string_view body = cell;
  if (!body.empty() && body.front() == '+') body.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value);
  if (body.empty() || ec != std::errc() || ptr != body.data() + body.size()) {
    throw InputError(where + ": '" + std::string(cell) + "' is not a number");
  }
  if (!std::isfinite(value)) throw InputError(where + ": value must be finite");
  return value;
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, ptr);
}

std::string csv_field(std::string_view text) {
  if (text.find_first_of(",\"\n") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (const char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace flcrmf::cli
