#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "glaris/packetizer.hpp"

namespace glaris {

inline constexpr std::uint8_t kContainerVersion = 1;

struct StreamHeader {
  std::uint32_t model_checksum = 0;
  std::uint8_t q_lambda = 0;
  FecConfig fec;
  std::uint64_t sample_count = 0;

  bool operator==(const StreamHeader&) const = default;
};

// Encoded stream on disk: the header followed by the serialized packets,
// each prefixed with its u16 length. Packets stay opaque byte strings so a
// channel can drop or damage them before parsing.
struct StreamContainer {
  StreamHeader header;
  std::vector<std::vector<std::uint8_t>> packets;

  bool operator==(const StreamContainer&) const = default;
};

//   "GLCS", version u8, model checksum u32, q_lambda u8, Q u8, N u8,
//   offsets[N] u8, frame_rate u16, sample_count u64, packet_count u32,
//   then packet_count x (length u16, bytes).
std::vector<std::uint8_t> serialize_container(const StreamContainer& c);
StreamContainer parse_container(std::span<const std::uint8_t> bytes);

void save_container(const std::filesystem::path& path, const StreamContainer& c);
StreamContainer load_container(const std::filesystem::path& path);

}  // namespace glaris
