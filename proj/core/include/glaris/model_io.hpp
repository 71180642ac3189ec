#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glaris/hyperprior.hpp"

namespace glaris {

inline constexpr std::uint16_t kModelVersion = 1;

// Binary codec model, little-endian:
//   "GLRM", version u16, d_l u16, d_y u16, d_z u16, Q u8,
//   sigma_min f64, rho f64, kappa f64, sigma_table[d_y] f64,
//   m_high[d_y] f64, m_low[d_y] f64, m_z[Q*d_z] f64,
//   Q codebooks of 1024*d_z f64, CRC32 of everything before it.
std::vector<std::uint8_t> serialize_model(const CodecModel& model);
CodecModel parse_model(std::span<const std::uint8_t> bytes);

void save_model(const std::filesystem::path& path, const CodecModel& model);
CodecModel load_model(const std::filesystem::path& path);

// CRC32 trailer of the serialized model; identifies a model in stream headers.
std::uint32_t model_checksum(const CodecModel& model);

}  // namespace glaris
