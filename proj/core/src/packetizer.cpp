#include "glaris/packetizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glaris/byte_io.hpp"
#include "glaris/error.hpp"

namespace glaris {

namespace {

constexpr std::size_t kHeaderBytes = 12;
constexpr std::size_t kMinPacketBytes = kHeaderBytes + 2 + 4;

void pack_indices(ByteWriter& w, const SideInfo& si) {
  std::uint32_t acc = 0;
  int bits = 0;
  for (auto idx : si.indices) {
    acc = (acc << kIndexBits) | (idx & ((1u << kIndexBits) - 1));
    bits += static_cast<int>(kIndexBits);
    while (bits >= 8) {
      bits -= 8;
      w.u8(static_cast<std::uint8_t>(acc >> bits));
    }
  }
  if (bits > 0) w.u8(static_cast<std::uint8_t>(acc << (8 - bits)));
}

SideInfo unpack_indices(std::span<const std::uint8_t> data, std::size_t stages,
                        std::uint32_t frame_index) {
  SideInfo si;
  si.frame_index = frame_index;
  si.indices.resize(stages);
  si.masked.assign(stages, false);
  std::size_t bitpos = 0;
  for (std::size_t s = 0; s < stages; ++s) {
    std::uint32_t v = 0;
    for (unsigned b = 0; b < kIndexBits; ++b, ++bitpos) {
      v = (v << 1) | ((data[bitpos / 8] >> (7 - bitpos % 8)) & 1u);
    }
    si.indices[s] = static_cast<std::uint16_t>(v);
  }
  // Trailing pad bits must be zero.
  for (; bitpos < data.size() * 8; ++bitpos) {
    if ((data[bitpos / 8] >> (7 - bitpos % 8)) & 1u) {
      throw Error(ErrorCode::corrupt_packet, "nonzero padding in z block");
    }
  }
  return si;
}

}  // namespace

void FecConfig::validate() const {
  if (stages > kMaxStages) {
    throw Error(ErrorCode::configuration, "fec_q must be at most " + std::to_string(kMaxStages));
  }
  if (offsets.size() > kMaxCopies) {
    throw Error(ErrorCode::configuration, "fec_offsets holds at most " + std::to_string(kMaxCopies) + " entries");
  }
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    if (offsets[i] == 0 || offsets[i] > 255) {
      throw Error(ErrorCode::configuration, "fec_offsets entries must lie in 1..255");
    }
    if (i > 0 && offsets[i] <= offsets[i - 1]) {
      throw Error(ErrorCode::configuration, "fec_offsets must be strictly increasing");
    }
  }
  if (frame_rate <= 0) throw Error(ErrorCode::configuration, "frame_rate must be positive");
}

std::vector<std::uint32_t> FecConfig::default_offsets(std::size_t copies) {
  switch (copies) {
    case 0: return {};
    case 1: return {1};
    case 2: return {1, 13};
    case 3: return {1, 7, 13};
    case 4: return {1, 5, 9, 13};
    default:
      throw Error(ErrorCode::configuration, "fec_n must be at most " + std::to_string(kMaxCopies));
  }
}

void SideInfoCache::push(const SideInfo& si) {
  if (capacity_ == 0) return;
  entries_.push_back(si);
  while (entries_.size() > capacity_) entries_.pop_front();
}

const SideInfo* SideInfoCache::find(std::uint32_t frame_index) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->frame_index == frame_index) return &*it;
  }
  return nullptr;
}

Packet build_packet(std::uint32_t t, std::uint8_t q_lambda, Bitstream payload, const SideInfo& z_t,
                    const SideInfoCache& z_cache, const FecConfig& cfg) {
  Packet p;
  p.frame_index = t;
  p.q_lambda = q_lambda;
  p.payload = std::move(payload);
  p.z_blocks.push_back(ZBlock{0, z_t});
  p.z_blocks.back().side.frame_index = t;
  for (auto k : cfg.offsets) {
    if (k > t) break;
    const SideInfo* past = z_cache.find(t - k);
    if (past == nullptr) {
      throw Error(ErrorCode::internal, "side information for frame " + std::to_string(t - k) +
                                           " missing from cache");
    }
    p.z_blocks.push_back(ZBlock{static_cast<std::uint8_t>(k), *past});
  }
  return p;
}

std::size_t z_block_bytes(std::size_t stages) noexcept { return (stages * kIndexBits + 7) / 8; }

std::vector<std::uint8_t> serialize(const Packet& p) {
  const std::size_t stages = p.z_blocks.empty() ? 0 : p.z_blocks.front().side.stages();
  if (stages > kMaxStages) throw Error(ErrorCode::invalid_argument, "too many RVQ stages in packet");
  if (p.z_blocks.size() > 255) throw Error(ErrorCode::invalid_argument, "too many z blocks");
  if (p.payload.bytes.size() > 0xFFFF) throw Error(ErrorCode::invalid_argument, "payload exceeds 65535 bytes");
  const std::size_t len = p.payload.bytes.size();
  if (p.payload.bit_length > len * 8 || p.payload.bit_length + 8 <= len * 8) {
    throw Error(ErrorCode::invalid_argument, "payload bit length inconsistent with its bytes");
  }
  const auto pad = static_cast<std::uint8_t>(len * 8 - p.payload.bit_length);

  ByteWriter w;
  w.tag("GLPK");
  w.u8(kPacketVersion);
  w.u32(p.frame_index);
  w.u8(p.q_lambda);
  w.u8(static_cast<std::uint8_t>(stages | (pad << 4)));
  w.u8(static_cast<std::uint8_t>(p.z_blocks.size()));
  for (const auto& b : p.z_blocks) {
    if (b.side.stages() != stages) throw Error(ErrorCode::invalid_argument, "z blocks differ in stage count");
    w.u8(b.offset);
    pack_indices(w, b.side);
  }
  w.u16(static_cast<std::uint16_t>(len));
  w.bytes(p.payload.bytes);
  w.u32(crc32(w.data()));
  return std::move(w).take();
}

Packet parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMinPacketBytes) throw Error(ErrorCode::short_packet, "short packet");
  ByteReader r(bytes, ErrorCode::short_packet);
  if (!r.tag("GLPK")) throw Error(ErrorCode::corrupt_packet, "corrupt packet: bad magic");
  if (r.u8() != kPacketVersion) throw Error(ErrorCode::corrupt_packet, "corrupt packet: unsupported version");

  Packet p;
  p.frame_index = r.u32();
  p.q_lambda = r.u8();
  const std::uint8_t flags = r.u8();
  const std::size_t stages = flags & 0x0F;
  const std::size_t pad = (flags >> 4) & 0x07;
  const std::size_t count = r.u8();
  const std::size_t zb = z_block_bytes(stages);

  std::vector<std::pair<std::uint8_t, std::span<const std::uint8_t>>> blocks;
  blocks.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const auto offset = r.u8();
    blocks.emplace_back(offset, r.bytes(zb));
  }
  const std::size_t len = r.u16();
  const std::size_t declared = r.position() + len + 4;
  if (declared > bytes.size()) throw Error(ErrorCode::short_packet, "short packet");
  if (declared < bytes.size()) throw Error(ErrorCode::corrupt_packet, "corrupt packet: trailing bytes");
  const auto payload = r.bytes(len);
  const std::uint32_t stored = r.u32();
  if (crc32(bytes.first(bytes.size() - 4)) != stored) {
    throw Error(ErrorCode::corrupt_packet, "corrupt packet: CRC mismatch");
  }

  if ((flags & 0x80) != 0 || stages > kMaxStages) {
    throw Error(ErrorCode::corrupt_packet, "corrupt packet: bad flags");
  }
  if (len == 0 && pad != 0) throw Error(ErrorCode::corrupt_packet, "corrupt packet: pad without payload");
  p.payload.bytes.assign(payload.begin(), payload.end());
  p.payload.bit_length = len * 8 - pad;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto offset = blocks[i].first;
    if ((i == 0 && offset != 0) || (i > 0 && offset <= blocks[i - 1].first)) {
      throw Error(ErrorCode::corrupt_packet, "corrupt packet: z block offsets out of order");
    }
    if (offset > p.frame_index) {
      throw Error(ErrorCode::corrupt_packet, "corrupt packet: z block precedes stream start");
    }
    p.z_blocks.push_back(ZBlock{offset, unpack_indices(blocks[i].second, stages, p.frame_index - offset)});
  }
  return p;
}

double redundancy_bitrate(const FecConfig& cfg) {
  return static_cast<double>(kIndexBits * cfg.stages * cfg.copies()) * cfg.frame_rate / 1000.0;
}

double total_sideinfo_bitrate(const FecConfig& cfg) {
  return static_cast<double>(kIndexBits * cfg.stages * (cfg.copies() + 1)) * cfg.frame_rate / 1000.0;
}

double prob_all_copies_lost(double p, std::size_t copies) {
  if (p < 0.0 || p > 1.0) throw Error(ErrorCode::invalid_argument, "loss probability outside [0, 1]");
  return std::pow(p, static_cast<double>(copies));
}

BitrateReport account_stream(std::span<const Packet> packets, const FecConfig& cfg) {
  BitrateReport rep;
  rep.packets = packets.size();
  if (packets.empty()) return rep;
  const double fps = cfg.frame_rate;
  rep.seconds = static_cast<double>(packets.size()) / fps;

  std::size_t source = 0;
  std::size_t wire = 0;
  std::size_t steady_bits = 0;
  std::size_t steady_packets = 0;
  for (const auto& p : packets) {
    source += p.payload.bit_length;
    wire += serialize(p).size() * 8;
    std::size_t red = 0;
    for (const auto& b : p.z_blocks) {
      const std::size_t bits = kIndexBits * b.side.stages();
      rep.sideinfo_bits += bits;
      if (b.offset > 0) red += bits;
    }
    rep.redundant_bits += red;
    if (p.frame_index >= cfg.max_offset()) {
      steady_bits += red;
      ++steady_packets;
    }
  }
  const auto kbps = [&](std::size_t bits, std::size_t n) {
    return n == 0 ? 0.0 : static_cast<double>(bits) * fps / (static_cast<double>(n) * 1000.0);
  };
  rep.source_kbps = kbps(source, packets.size());
  rep.sideinfo_kbps = kbps(rep.sideinfo_bits, packets.size());
  rep.redundant_kbps = kbps(rep.redundant_bits, packets.size());
  rep.total_kbps = rep.source_kbps + rep.sideinfo_kbps;
  rep.wire_kbps = kbps(wire, packets.size());
  rep.steady_redundant_kbps = kbps(steady_bits, steady_packets);
  return rep;
}

}  // namespace glaris
