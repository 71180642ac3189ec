#pragma once

#include <cstdint>
#include <vector>

#include "glaris/audio_frontend.hpp"
#include "glaris/container.hpp"
#include "glaris/hyperprior.hpp"
#include "glaris/packetizer.hpp"
#include "glaris/table_cache.hpp"

namespace glaris {

// Per-frame sender chain: transform, side information, hyperprior, range
// coding and packetization with backup copies.
class StreamEncoder {
 public:
  // fec.stages may use a prefix of the model's codebooks.
  StreamEncoder(const CodecModel& model, int q_lambda, FecConfig fec);

  Packet encode(const LatentFrame& frame);
  // Latent code, quantized symbols and side information of the last frame.
  const LatentCode& last_latent() const noexcept { return last_y_; }
  const QuantizedLatent& last_symbols() const noexcept { return last_yq_; }

  std::uint32_t frames() const noexcept { return next_; }

 private:
  const CodecModel& model_;
  int q_lambda_;
  double step_;
  FecConfig fec_;
  SideInfoCache cache_;
  TableCache tables_;
  std::uint32_t next_ = 0;
  LatentCode last_y_;
  QuantizedLatent last_yq_;
};

// Whole clip to parsed packets.
std::vector<Packet> encode_packets(const CodecModel& model, const PcmClip& clip, int q_lambda,
                                   const FecConfig& fec);
StreamContainer encode_stream(const CodecModel& model, const PcmClip& clip, int q_lambda,
                              const FecConfig& fec);

}  // namespace glaris
