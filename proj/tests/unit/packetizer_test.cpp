#include <gtest/gtest.h>

#include "glaris/container.hpp"
#include "glaris/error.hpp"
#include "glaris/packetizer.hpp"
#include "glaris/rng.hpp"
#include "glaris/sender.hpp"
#include "test_support.hpp"

using namespace glaris;

namespace {

SideInfo random_side(Rng& rng, std::size_t stages, std::uint32_t frame) {
  SideInfo si;
  si.frame_index = frame;
  for (std::size_t s = 0; s < stages; ++s) si.indices.push_back(static_cast<std::uint16_t>(rng.below(1024)));
  si.masked.assign(stages, false);
  return si;
}

std::vector<std::uint8_t> offsets_of(const Packet& p) {
  std::vector<std::uint8_t> out;
  for (const auto& b : p.z_blocks) out.push_back(b.offset);
  return out;
}

// Packets for t = 0..n-1 with random side information and payloads.
std::vector<Packet> synthetic_stream(std::size_t n, const FecConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  SideInfoCache cache(cfg.max_offset());
  std::vector<Packet> out;
  for (std::uint32_t t = 0; t < n; ++t) {
    const auto si = random_side(rng, cfg.stages, t);
    Bitstream payload;
    payload.bytes.resize(rng.below(40) + 1);
    for (auto& b : payload.bytes) b = static_cast<std::uint8_t>(rng.next());
    payload.bytes.back() &= 0xF0;
    payload.bit_length = payload.bytes.size() * 8 - rng.below(4);
    out.push_back(build_packet(t, 7, payload, si, cache, cfg));
    cache.push(si);
  }
  return out;
}

}  // namespace

TEST(BuildPacket, Schedule) {
  const FecConfig cfg;
  const auto stream = synthetic_stream(20, cfg, 1);
  EXPECT_EQ(offsets_of(stream[0]), (std::vector<std::uint8_t>{0}));
  EXPECT_EQ(offsets_of(stream[5]), (std::vector<std::uint8_t>{0, 1}));
  EXPECT_EQ(offsets_of(stream[13]), (std::vector<std::uint8_t>{0, 1, 13}));
  EXPECT_EQ(stream[13].z_blocks[2].side, stream[0].z_blocks[0].side);
  EXPECT_EQ(stream[13].z_blocks[1].side, stream[12].z_blocks[0].side);
}

TEST(BuildPacket, MissingCacheEntryIsInternal) {
  const FecConfig cfg;
  Rng rng(1);
  SideInfoCache empty(13);
  try {
    build_packet(3, 0, Bitstream{{0}, 1}, random_side(rng, 2, 3), empty, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::internal);
  }
}

TEST(PacketWire, RandomRoundTrip) {
  Rng rng(44);
  for (int n = 0; n < 10000; ++n) {
    FecConfig cfg;
    cfg.stages = rng.below(9);
    cfg.offsets = FecConfig::default_offsets(rng.below(5));
    Packet p;
    p.frame_index = static_cast<std::uint32_t>(rng.below(100000));
    p.q_lambda = static_cast<std::uint8_t>(rng.below(64));
    p.payload.bytes.resize(rng.below(300));
    for (auto& b : p.payload.bytes) b = static_cast<std::uint8_t>(rng.next());
    p.payload.bit_length = p.payload.bytes.size() * 8;
    if (!p.payload.bytes.empty()) {
      const auto pad = rng.below(8);
      p.payload.bytes.back() &= static_cast<std::uint8_t>(0xFF << pad);
      p.payload.bit_length -= pad;
    }
    p.z_blocks.push_back({0, random_side(rng, cfg.stages, p.frame_index)});
    for (auto k : cfg.offsets) {
      if (k <= p.frame_index) p.z_blocks.push_back({static_cast<std::uint8_t>(k), random_side(rng, cfg.stages, p.frame_index - k)});
    }
    const auto bytes = serialize(p);
    const std::size_t expected = 12 + p.z_blocks.size() * (1 + z_block_bytes(cfg.stages)) + 2 +
                                 p.payload.bytes.size() + 4;
    ASSERT_EQ(bytes.size(), expected);
    ASSERT_EQ(parse(bytes), p);
  }
}

TEST(PacketWire, DamageRejected) {
  const auto stream = synthetic_stream(20, FecConfig{}, 3);
  const auto bytes = serialize(stream[15]);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    auto b = bytes;
    b[i] ^= 0x01;
    try {
      parse(b);
      FAIL() << "byte " << i;
    } catch (const Error& e) {
      EXPECT_TRUE(e.code() == ErrorCode::corrupt_packet || e.code() == ErrorCode::short_packet) << i;
    }
  }
  auto b = bytes;
  b[b.size() - 10] ^= 0xFF;
  try {
    parse(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::corrupt_packet);
  }
}

TEST(PacketWire, TruncationIsShort) {
  const auto bytes = serialize(synthetic_stream(3, FecConfig{}, 4)[2]);
  for (std::size_t n = 0; n < bytes.size(); ++n) {
    try {
      parse(std::span(bytes).first(n));
      FAIL() << n;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::short_packet) << n;
    }
  }
}

TEST(PacketWire, FixedLengthZBlocks) {
  for (std::size_t q = 0; q <= 8; ++q) EXPECT_EQ(z_block_bytes(q), (10 * q + 7) / 8);
  FecConfig cfg;
  cfg.stages = 3;
  for (const auto& p : synthetic_stream(40, cfg, 5)) {
    const auto bytes = serialize(p);
    EXPECT_EQ(bytes.size(), 12 + p.z_blocks.size() * 5 + 2 + p.payload.bytes.size() + 4);
  }
}

TEST(Redundancy, Formula) {
  FecConfig cfg;
  cfg.stages = 2;
  EXPECT_DOUBLE_EQ(redundancy_bitrate(cfg), 2.0);
  EXPECT_DOUBLE_EQ(total_sideinfo_bitrate(cfg), 3.0);
  cfg.stages = 1;
  cfg.offsets = {1};
  EXPECT_DOUBLE_EQ(redundancy_bitrate(cfg), 0.5);
  cfg.stages = 0;
  EXPECT_DOUBLE_EQ(redundancy_bitrate(cfg), 0.0);
}

TEST(Redundancy, AllCopiesLost) {
  EXPECT_DOUBLE_EQ(prob_all_copies_lost(0.3, 2), 0.09);
  EXPECT_DOUBLE_EQ(prob_all_copies_lost(0.3, 0), 1.0);
  EXPECT_DOUBLE_EQ(prob_all_copies_lost(0.0, 3), 0.0);
  EXPECT_THROW(prob_all_copies_lost(1.5, 1), Error);
}

TEST(AccountStream, SteadyStateExact) {
  FecConfig cfg;
  cfg.stages = 2;
  const auto packets = synthetic_stream(100, cfg, 6);
  const auto rep = account_stream(packets, cfg);
  EXPECT_EQ(rep.steady_redundant_kbps, 2.0);
  for (const auto& p : packets) {
    std::size_t bits = 0;
    for (const auto& b : p.z_blocks) bits += 10 * b.side.stages();
    EXPECT_EQ(bits, 20 * p.z_blocks.size());
  }
  // The first 13 packets carry fewer than two backups.
  EXPECT_LT(rep.redundant_kbps, 2.0);
  EXPECT_EQ(rep.redundant_bits, 20 * (12 + 87 * 2));
}

TEST(AccountStream, NoSideInfo) {
  FecConfig cfg;
  cfg.stages = 0;
  cfg.offsets = {};
  const auto rep = account_stream(synthetic_stream(60, cfg, 7), cfg);
  EXPECT_EQ(rep.sideinfo_kbps, 0.0);
  EXPECT_EQ(rep.redundant_kbps, 0.0);
}

TEST(FecConfigValidation, Invariants) {
  FecConfig cfg;
  cfg.offsets = {13, 1};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.offsets = {1, 1};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.offsets = {1, 2, 3, 4, 5};
  EXPECT_THROW(cfg.validate(), Error);
  cfg.offsets = {1};
  cfg.stages = 9;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Container, RoundTripAndEncoderDeterminism) {
  const auto& model = fixtures::reference_model(2);
  PcmClip clip = fixtures::eval_clip();
  clip.samples.resize(16000);
  const auto a = encode_stream(model, clip, 20, FecConfig{});
  const auto b = encode_stream(model, clip, 20, FecConfig{});
  EXPECT_EQ(serialize_container(a), serialize_container(b));
  EXPECT_EQ(parse_container(serialize_container(a)), a);
  EXPECT_EQ(a.packets.size(), 50u);
  auto bytes = serialize_container(a);
  bytes.pop_back();
  EXPECT_THROW(parse_container(bytes), Error);
}
