#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "glaris/entropy_coder.hpp"
#include "glaris/hyperprior.hpp"

namespace glaris {

inline constexpr std::size_t kMaxCopies = 4;
inline constexpr int kDefaultFrameRate = 50;
inline constexpr std::uint8_t kPacketVersion = 1;

struct FecConfig {
  std::size_t stages = 2;                      // Q
  std::vector<std::uint32_t> offsets{1, 13};   // K, |K| = N
  int frame_rate = kDefaultFrameRate;

  std::size_t copies() const noexcept { return offsets.size(); }
  std::uint32_t max_offset() const noexcept { return offsets.empty() ? 0 : offsets.back(); }
  void validate() const;

  // Spread schedule used when only N is given.
  static std::vector<std::uint32_t> default_offsets(std::size_t copies);

  bool operator==(const FecConfig&) const = default;
};

struct ZBlock {
  std::uint8_t offset = 0;
  SideInfo side;

  bool operator==(const ZBlock&) const = default;
};

struct Packet {
  std::uint32_t frame_index = 0;
  std::uint8_t q_lambda = 0;
  Bitstream payload;
  std::vector<ZBlock> z_blocks;  // offset 0 first, then ascending

  bool operator==(const Packet&) const = default;
};

// Side information of the most recent frames, keyed by frame index.
class SideInfoCache {
 public:
  explicit SideInfoCache(std::size_t capacity) : capacity_(capacity) {}

  void push(const SideInfo& si);
  const SideInfo* find(std::uint32_t frame_index) const;

 private:
  std::size_t capacity_;
  std::deque<SideInfo> entries_;
};

// Packet for frame t carrying z_t and z_{t-k} for every k in K with t-k >= 0.
// The cache must hold every needed past frame (internal error otherwise).
Packet build_packet(std::uint32_t t, std::uint8_t q_lambda, Bitstream payload, const SideInfo& z_t,
                    const SideInfoCache& z_cache, const FecConfig& cfg);

// Wire format, little-endian integers:
//   "GLPK", version u8, frame_index u32, q_lambda u8,
//   flags u8 (bits 0-3 Q, bits 4-6 payload pad bits), z-block count u8,
//   per block: offset u8 + Q 10-bit indices packed MSB-first,
//   payload length u16, payload, CRC32 u32 of all preceding bytes.
std::vector<std::uint8_t> serialize(const Packet& packet);
// Throws short_packet on truncation and corrupt_packet on anything else.
Packet parse(std::span<const std::uint8_t> bytes);

std::size_t z_block_bytes(std::size_t stages) noexcept;

double redundancy_bitrate(const FecConfig& cfg);
// Includes the current frame's copy.
double total_sideinfo_bitrate(const FecConfig& cfg);
double prob_all_copies_lost(double p, std::size_t copies);

struct BitrateReport {
  std::size_t packets = 0;
  double seconds = 0.0;
  double source_kbps = 0.0;     // entropy payload bits
  double sideinfo_kbps = 0.0;   // every z copy, current and backup
  double redundant_kbps = 0.0;  // backup copies only
  double total_kbps = 0.0;      // source + side info
  double wire_kbps = 0.0;       // serialized packet bytes
  double steady_redundant_kbps = 0.0;  // packets with t >= max(K)
  std::size_t sideinfo_bits = 0;
  std::size_t redundant_bits = 0;
};

BitrateReport account_stream(std::span<const Packet> packets, const FecConfig& cfg);

}  // namespace glaris
