#include "memeguard/csv.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

#include "memeguard/binary_io.hpp"

namespace memeguard {

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw std::runtime_error("missing CSV column '" + std::string(name) + "'");
}

std::vector<std::string> split_fields(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

CsvTable parse_csv(std::string_view text, const std::string& source_name) {
  CsvTable table;
  std::size_t line_no = 0;
  std::size_t start = 0;
  bool have_header = false;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = split_fields(line);
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw std::runtime_error(source_name + ":" + std::to_string(line_no) + ": expected " +
                               std::to_string(table.header.size()) + " fields, got " +
                               std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_file_text(path), path.string());
}

std::uint64_t parse_id(std::string_view s, const std::string& where) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::runtime_error(where + ": invalid id '" + std::string(s) + "'");
  }
  return v;
}

double parse_real(std::string_view s, const std::string& where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw std::runtime_error(where + ": invalid number '" + std::string(s) + "'");
  }
  return v;
}

std::string format_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace memeguard

namespace memeguard {

std::string format_sci(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*e", digits, v);
  return buf;
}

}  // namespace memeguard
