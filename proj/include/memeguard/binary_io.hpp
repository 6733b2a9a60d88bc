#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace memeguard {

/// Raised for malformed or truncated binary payloads.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Appends little-endian scalars to a byte buffer.
class ByteWriter {
 public:
  void magic(std::string_view tag) { raw(tag); }
  void raw(std::string_view bytes);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f32(float v);
  void f64(double v);

  const std::vector<std::byte>& bytes() const { return buf_; }

 private:
  std::vector<std::byte> buf_;
};

/// Reads little-endian scalars, throwing FormatError on truncation.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::byte> data) : data_(data) {}

  void expect_magic(std::string_view tag);
  std::string raw(std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  float f32();
  double f64();

  std::size_t remaining() const { return data_.size() - pos_; }
  std::size_t position() const { return pos_; }

 private:
  void need(std::size_t n, const char* what) const;

  std::span<const std::byte> data_;
  std::size_t pos_ = 0;
};

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written artifact.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

std::string read_file_text(const std::filesystem::path& path);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);
std::uint64_t fnv1a64(std::span<const std::byte> data);

}  // namespace memeguard
