#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glaris/audio_frontend.hpp"
#include "glaris/channel_sim.hpp"
#include "glaris/container.hpp"
#include "glaris/context_predictor.hpp"
#include "glaris/hyperprior.hpp"
#include "glaris/metrics.hpp"
#include "glaris/packetizer.hpp"
#include "glaris/receiver.hpp"

namespace glaris {

inline constexpr std::string_view kMetricsSchema = "# glaris-metrics v1";

// WAV files, or directories scanned (non-recursively, sorted) for *.wav.
std::vector<PcmClip> load_corpus(const std::vector<std::filesystem::path>& inputs);
PcmClip concatenate(const std::vector<PcmClip>& clips);
std::vector<LatentCode> corpus_latents(const std::vector<PcmClip>& clips);

struct PointSpec {
  int q_lambda = 32;
  FecConfig fec;
  ChannelSpec channel;
  std::uint64_t seed = 1;
  std::size_t playout_delay = 13;
  ContextMode context = ContextMode::lpc;
  PlcStrategy strategy = PlcStrategy::side_info;
};

struct MetricsRow {
  int q_lambda = 0;
  std::size_t fec_q = 0;
  std::size_t fec_n = 0;
  std::string channel;
  std::uint64_t seed = 0;
  double loss_rate = 0.0;  // measured on the applied trace
  double bitrate_total_kbps = 0.0;
  double bitrate_src_kbps = 0.0;
  double bitrate_fec_kbps = 0.0;
  WaveformMetrics wave;
  ReceiverReport receiver;
  std::array<double, kDecodePathCount> latent_mse{};  // per path, NaN when unused
};

struct PointResult {
  MetricsRow row;
  StreamContainer container;
  PcmClip decoded;
  std::vector<DecodedFrame> frames;
  std::vector<LatentCode> reference;  // unquantized latents of the input
  LossTrace trace;
};

// Packets through the channel and receiver. A trace shorter than the stream
// is an error.
std::vector<DecodedFrame> simulate_stream(const CodecModel& model, const StreamContainer& stream,
                                          const LossTrace& trace, const ReceiverConfig& cfg,
                                          ReceiverReport* report = nullptr);
PcmClip render(const std::vector<DecodedFrame>& frames, std::size_t sample_count);

// Encode, simulate and decode one clip.
PointResult run_point(const CodecModel& model, const PcmClip& clip, const PointSpec& spec);
// Simulate and decode an encoded stream of `clip`; rate and FEC settings come
// from the stream header.
PointResult evaluate_stream(const CodecModel& model, const PcmClip& clip, StreamContainer stream,
                            const PointSpec& spec);

// Points run concurrently on up to `threads` workers (0 = hardware
// concurrency); results keep the input order.
std::vector<MetricsRow> run_sweep(const CodecModel& model, const PcmClip& clip,
                                  const std::vector<PointSpec>& points, std::size_t threads = 0);

std::string metrics_csv(const std::vector<MetricsRow>& rows);
std::string receiver_report_csv(const ReceiverReport& report,
                                const std::array<double, kDecodePathCount>& latent_mse);

}  // namespace glaris
