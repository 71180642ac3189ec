#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glaris/context_predictor.hpp"
#include "glaris/hyperprior.hpp"
#include "glaris/packetizer.hpp"
#include "glaris/table_cache.hpp"

namespace glaris {

enum class DecodePath : std::uint8_t { entropy, plc_high, plc_low, zero_fill };
inline constexpr std::size_t kDecodePathCount = 4;
std::string_view to_string(DecodePath path) noexcept;

// How lost frames are concealed.
//   side_info: recovered side information when available, context otherwise.
//   context_only: ignore side information for lost frames.
//   zero_fill: emit silence.
enum class PlcStrategy : std::uint8_t { side_info, context_only, zero_fill };
std::string_view to_string(PlcStrategy s) noexcept;
PlcStrategy parse_plc_strategy(std::string_view text);

// One packet slot from the channel: the bytes when delivered, nothing when
// lost.
struct ChannelEvent {
  std::uint32_t frame_index = 0;
  std::optional<std::vector<std::uint8_t>> bytes;

  static ChannelEvent received(std::uint32_t t, std::vector<std::uint8_t> bytes) { return {t, std::move(bytes)}; }
  static ChannelEvent lost(std::uint32_t t) { return {t, std::nullopt}; }
};

struct ReceiverConfig {
  std::size_t playout_delay = 13;
  ContextMode context = ContextMode::lpc;
  LpcSettings lpc;
  PlcStrategy strategy = PlcStrategy::side_info;
  // Shared between receivers of the same model; a private cache when null.
  std::shared_ptr<TableCache> tables;
};

struct DecodedFrame {
  LatentCode y_hat;
  DecodePath path = DecodePath::entropy;
  bool packet_received = false;  // parsed with a valid CRC
  bool z_available = false;
};

struct LossMasks {
  std::vector<bool> y_lost;
  std::vector<std::vector<bool>> z_stage_masked;
  std::vector<bool> z_fully_available;
};

struct ReceiverReport {
  std::size_t frames = 0;
  std::array<std::size_t, kDecodePathCount> path_counts{};
  std::size_t lost_frames = 0;        // frames not entropy decoded
  std::size_t z_recovered = 0;        // of those, side information available
  std::size_t corrupt_packets = 0;    // delivered but rejected by the parser
  std::size_t payload_failures = 0;   // parsed but the payload failed to decode

  std::size_t count(DecodePath p) const { return path_counts[static_cast<std::size_t>(p)]; }
  double z_recovery_rate() const {
    return lost_frames == 0 ? 1.0 : static_cast<double>(z_recovered) / static_cast<double>(lost_frames);
  }
};

// Streaming decoder. Events must arrive for consecutive frame indices from 0;
// frame t is emitted once the event for t + D has been ingested, or at
// finalize(). Emitted frames are never revisited.
class Receiver {
 public:
  Receiver(const CodecModel& model, ReceiverConfig config);

  std::vector<DecodedFrame> ingest(const ChannelEvent& event);
  std::vector<DecodedFrame> finalize();

  const ReceiverReport& report() const noexcept { return report_; }
  const LossMasks& masks() const noexcept { return masks_; }

 private:
  struct Pending {
    std::optional<Packet> packet;
  };

  DecodedFrame decode_frame_at(std::uint32_t t);
  std::optional<LatentCode> entropy_decode(const Packet& packet, const SideInfo& z);
  void emit_ready(std::vector<DecodedFrame>& out, bool flush);

  const CodecModel& model_;
  ReceiverConfig cfg_;
  std::shared_ptr<TableCache> tables_;
  std::uint32_t next_event_ = 0;
  std::uint32_t next_emit_ = 0;
  std::map<std::uint32_t, Pending> pending_;
  std::map<std::uint32_t, SideInfo> z_cache_;
  std::deque<LatentCode> history_;
  ReceiverReport report_;
  LossMasks masks_;
};

// Offline helper: ingest every event, then finalize.
std::vector<DecodedFrame> receive_all(const CodecModel& model, const ReceiverConfig& cfg,
                                      const std::vector<ChannelEvent>& events,
                                      ReceiverReport* report = nullptr, LossMasks* masks = nullptr);

}  // namespace glaris
