#include "memeguard/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace memeguard {

namespace {

template <typename U>
void put_le(std::vector<std::byte>& buf, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
  }
}

template <typename U>
U get_le(std::span<const std::byte> data, std::size_t pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    v |= static_cast<U>(std::to_integer<std::uint8_t>(data[pos + i])) << (8 * i);
  }
  return v;
}

}  // namespace

void ByteWriter::raw(std::string_view bytes) {
  for (char c : bytes) buf_.push_back(static_cast<std::byte>(c));
}

void ByteWriter::u32(std::uint32_t v) { put_le(buf_, v); }
void ByteWriter::u64(std::uint64_t v) { put_le(buf_, v); }
void ByteWriter::f32(float v) { put_le(buf_, std::bit_cast<std::uint32_t>(v)); }
void ByteWriter::f64(double v) { put_le(buf_, std::bit_cast<std::uint64_t>(v)); }

void ByteReader::need(std::size_t n, const char* what) const {
  if (remaining() < n) {
    throw FormatError("truncated payload: expected " + std::to_string(n) + " bytes for " + what +
                      " at offset " + std::to_string(pos_) + ", " + std::to_string(remaining()) +
                      " left");
  }
}

void ByteReader::expect_magic(std::string_view tag) {
  need(tag.size(), "magic");
  for (std::size_t i = 0; i < tag.size(); ++i) {
    if (static_cast<char>(data_[pos_ + i]) != tag[i]) {
      throw FormatError("bad magic: expected \"" + std::string(tag) + "\"");
    }
  }
  pos_ += tag.size();
}

std::string ByteReader::raw(std::size_t n) {
  need(n, "raw bytes");
  std::string out(n, '\0');
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<char>(data_[pos_ + i]);
  pos_ += n;
  return out;
}

std::uint32_t ByteReader::u32() {
  need(4, "u32");
  auto v = get_le<std::uint32_t>(data_, pos_);
  pos_ += 4;
  return v;
}

std::uint64_t ByteReader::u64() {
  need(8, "u64");
  auto v = get_le<std::uint64_t>(data_, pos_);
  pos_ += 8;
  return v;
}

float ByteReader::f32() { return std::bit_cast<float>(u32()); }
double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<std::byte> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  if (!raw.empty()) std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> data) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  write_file_atomic(path, std::as_bytes(std::span(text.data(), text.size())));
}

std::uint64_t fnv1a64(std::string_view data) {
  return fnv1a64(std::as_bytes(std::span(data.data(), data.size())));
}

std::uint64_t fnv1a64(std::span<const std::byte> data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::byte b : data) {
    h ^= std::to_integer<std::uint8_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace memeguard
