#include "glaris/container.hpp"

#include <string>

#include "glaris/byte_io.hpp"
#include "glaris/error.hpp"

namespace glaris {

std::vector<std::uint8_t> serialize_container(const StreamContainer& c) {
  c.header.fec.validate();
  ByteWriter w;
  w.tag("GLCS");
  w.u8(kContainerVersion);
  w.u32(c.header.model_checksum);
  w.u8(c.header.q_lambda);
  w.u8(static_cast<std::uint8_t>(c.header.fec.stages));
  w.u8(static_cast<std::uint8_t>(c.header.fec.copies()));
  for (auto k : c.header.fec.offsets) w.u8(static_cast<std::uint8_t>(k));
  w.u16(static_cast<std::uint16_t>(c.header.fec.frame_rate));
  w.u64(c.header.sample_count);
  w.u32(static_cast<std::uint32_t>(c.packets.size()));
  for (const auto& p : c.packets) {
    if (p.size() > 0xFFFF) throw Error(ErrorCode::invalid_argument, "packet exceeds 65535 bytes");
    w.u16(static_cast<std::uint16_t>(p.size()));
    w.bytes(p);
  }
  return std::move(w).take();
}

StreamContainer parse_container(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::corrupt_stream);
  if (!r.tag("GLCS")) throw Error(ErrorCode::corrupt_stream, "not a stream container (bad magic)");
  if (r.u8() != kContainerVersion) throw Error(ErrorCode::unsupported_format, "unsupported container version");
  StreamContainer c;
  c.header.model_checksum = r.u32();
  c.header.q_lambda = r.u8();
  c.header.fec.stages = r.u8();
  const std::size_t n = r.u8();
  c.header.fec.offsets.clear();
  for (std::size_t i = 0; i < n; ++i) c.header.fec.offsets.push_back(r.u8());
  c.header.fec.frame_rate = r.u16();
  try {
    c.header.fec.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::corrupt_stream, std::string("container header: ") + e.what());
  }
  c.header.sample_count = r.u64();
  const std::size_t count = r.u32();
  if (count > r.remaining() / 2) throw Error(ErrorCode::corrupt_stream, "container packet count exceeds data");
  c.packets.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t len = r.u16();
    const auto data = r.bytes(len);
    c.packets.emplace_back(data.begin(), data.end());
  }
  if (r.remaining() != 0) throw Error(ErrorCode::corrupt_stream, "trailing bytes after container");
  return c;
}

void save_container(const std::filesystem::path& path, const StreamContainer& c) {
  write_file(path, serialize_container(c));
}

StreamContainer load_container(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_container(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace glaris
