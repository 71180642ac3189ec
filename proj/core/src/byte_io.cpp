#include "glaris/byte_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace glaris {

void ByteWriter::f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

void ByteWriter::tag(std::string_view fourcc) {
  for (char c : fourcc) buf_.push_back(static_cast<std::uint8_t>(c));
}

double ByteReader::f64() { return std::bit_cast<double>(get(8)); }

bool ByteReader::tag(std::string_view fourcc) {
  const auto got = bytes(fourcc.size());
  for (std::size_t i = 0; i < fourcc.size(); ++i) {
    if (got[i] != static_cast<std::uint8_t>(fourcc[i])) return false;
  }
  return true;
}

std::span<const std::uint8_t> ByteReader::bytes(std::size_t n) {
  need(n);
  auto out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint64_t ByteReader::get(int n) {
  need(static_cast<std::size_t>(n));
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_ + i]) << (8 * i);
  pos_ += static_cast<std::size_t>(n);
  return v;
}

void ByteReader::need(std::size_t n) const {
  if (data_.size() - pos_ < n) {
    throw Error(underflow_, "unexpected end of data at offset " + std::to_string(pos_));
  }
}

std::uint32_t crc32(std::span<const std::uint8_t> data) noexcept {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  crc = ::crc32(crc, data.data(), static_cast<uInt>(data.size()));
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

}  // namespace glaris
