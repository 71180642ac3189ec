#include "glaris/model_io.hpp"

#include <string>

#include "glaris/byte_io.hpp"
#include "glaris/error.hpp"

namespace glaris {

std::vector<std::uint8_t> serialize_model(const CodecModel& model) {
  model.validate();
  ByteWriter w;
  w.tag("GLRM");
  w.u16(kModelVersion);
  w.u16(model.d_l);
  w.u16(model.d_y);
  w.u16(model.d_z);
  w.u8(static_cast<std::uint8_t>(model.stages()));
  w.f64(model.sigma_min);
  w.f64(model.rho);
  w.f64(model.kappa);
  for (double v : model.sigma_table) w.f64(v);
  for (double v : model.tokens.m_high) w.f64(v);
  for (double v : model.tokens.m_low) w.f64(v);
  for (double v : model.tokens.m_z) w.f64(v);
  for (std::size_t s = 0; s < model.stages(); ++s) {
    for (double v : model.books.stage_data(s)) w.f64(v);
  }
  const std::uint32_t crc = crc32(w.data());
  w.u32(crc);
  return std::move(w).take();
}

CodecModel parse_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(ErrorCode::corrupt_stream, "model file too short");
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader trailer(bytes.last(4));
  if (crc32(body) != trailer.u32()) throw Error(ErrorCode::corrupt_stream, "model file CRC mismatch");

  ByteReader r(body);
  if (!r.tag("GLRM")) throw Error(ErrorCode::corrupt_stream, "not a codec model file (bad magic)");
  const std::uint16_t version = r.u16();
  if (version != kModelVersion) {
    throw Error(ErrorCode::unsupported_format, "unsupported model version " + std::to_string(version));
  }
  CodecModel m;
  m.d_l = r.u16();
  m.d_y = r.u16();
  m.d_z = r.u16();
  const std::size_t stages = r.u8();
  if (stages > kMaxStages) throw Error(ErrorCode::corrupt_stream, "model declares too many stages");
  m.sigma_min = r.f64();
  m.rho = r.f64();
  m.kappa = r.f64();
  auto read_vec = [&r](std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = r.f64();
    return v;
  };
  m.sigma_table = read_vec(m.d_y);
  m.tokens.m_high = read_vec(m.d_y);
  m.tokens.m_low = read_vec(m.d_y);
  m.tokens.m_z = read_vec(stages * m.d_z);
  std::vector<std::vector<double>> books;
  for (std::size_t s = 0; s < stages; ++s) books.push_back(read_vec(kCodebookSize * m.d_z));
  if (r.remaining() != 0) throw Error(ErrorCode::corrupt_stream, "trailing bytes in model file");
  m.books = RvqCodebooks(m.d_z, std::move(books));
  m.validate();
  return m;
}

void save_model(const std::filesystem::path& path, const CodecModel& model) {
  write_file(path, serialize_model(model));
}

CodecModel load_model(const std::filesystem::path& path) {
  try {
    return parse_model(read_file(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::uint32_t model_checksum(const CodecModel& model) {
  const auto bytes = serialize_model(model);
  ByteReader r(std::span<const std::uint8_t>(bytes).last(4));
  return r.u32();
}

}  // namespace glaris
