#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace memeguard {

/// Minimal comma-separated table. Fields are unquoted; every file this
/// project reads or writes holds only ids, numbers and fixed column names.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row

  /// Index of `name` in the header; throws if absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text, const std::string& source_name);
CsvTable read_csv(const std::filesystem::path& path);

std::vector<std::string> split_fields(std::string_view line, char sep = ',');

std::uint64_t parse_id(std::string_view s, const std::string& where);
double parse_real(std::string_view s, const std::string& where);

/// Fixed-point rendering with `digits` decimals, locale-independent.
std::string format_fixed(double v, int digits);
/// Scientific rendering with `digits` mantissa decimals.
std::string format_sci(double v, int digits);

}  // namespace memeguard
