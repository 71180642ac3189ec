#include "glaris/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include <fmt/format.h>

#include "glaris/error.hpp"
#include "glaris/model_io.hpp"
#include "glaris/sender.hpp"
#include "glaris/transform_codec.hpp"

namespace glaris {

std::vector<PcmClip> load_corpus(const std::vector<std::filesystem::path>& inputs) {
  namespace fs = std::filesystem;
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    std::error_code ec;
    if (fs::is_directory(in, ec)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in)) {
        if (entry.is_regular_file() && entry.path().extension() == ".wav") found.push_back(entry.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::is_regular_file(in, ec)) {
      files.push_back(in);
    } else {
      throw Error(ErrorCode::io, "cannot read corpus input " + in.string());
    }
  }
  if (files.empty()) throw Error(ErrorCode::empty_input, "corpus contains no WAV files");
  std::vector<PcmClip> clips;
  clips.reserve(files.size());
  for (const auto& f : files) clips.push_back(read_wav(f));
  return clips;
}

PcmClip concatenate(const std::vector<PcmClip>& clips) {
  PcmClip out;
  for (const auto& c : clips) out.samples.insert(out.samples.end(), c.samples.begin(), c.samples.end());
  return out;
}

std::vector<LatentCode> corpus_latents(const std::vector<PcmClip>& clips) {
  std::vector<LatentCode> out;
  for (const auto& c : clips) {
    for (const auto& f : frame_encode(c)) out.push_back(analysis(f));
  }
  return out;
}

std::vector<DecodedFrame> simulate_stream(const CodecModel& model, const StreamContainer& stream,
                                          const LossTrace& trace, const ReceiverConfig& cfg,
                                          ReceiverReport* report) {
  if (trace.size() < stream.packets.size()) {
    throw Error(ErrorCode::configuration, "trace has " + std::to_string(trace.size()) +
                                              " packets but the stream has " +
                                              std::to_string(stream.packets.size()));
  }
  Receiver rx(model, cfg);
  std::vector<DecodedFrame> out;
  out.reserve(stream.packets.size());
  for (std::size_t t = 0; t < stream.packets.size(); ++t) {
    const auto idx = static_cast<std::uint32_t>(t);
    auto frames = trace.lost(t) ? rx.ingest(ChannelEvent::lost(idx))
                                : rx.ingest(ChannelEvent::received(idx, stream.packets[t]));
    std::move(frames.begin(), frames.end(), std::back_inserter(out));
  }
  auto rest = rx.finalize();
  std::move(rest.begin(), rest.end(), std::back_inserter(out));
  if (report != nullptr) *report = rx.report();
  return out;
}

PcmClip render(const std::vector<DecodedFrame>& frames, std::size_t sample_count) {
  std::vector<LatentFrame> wave;
  wave.reserve(frames.size());
  for (const auto& f : frames) wave.push_back(synthesis(f.y_hat));
  if (wave.empty()) return PcmClip{};
  return frame_decode(wave, sample_count);
}

PointResult run_point(const CodecModel& model, const PcmClip& clip, const PointSpec& spec) {
  return evaluate_stream(model, clip, encode_stream(model, clip, spec.q_lambda, spec.fec), spec);
}

PointResult evaluate_stream(const CodecModel& model, const PcmClip& clip, StreamContainer stream,
                            const PointSpec& spec) {
  if (stream.header.model_checksum != model_checksum(model)) {
    throw Error(ErrorCode::configuration, "stream was encoded with a different model");
  }
  if (stream.header.sample_count != clip.size()) {
    throw Error(ErrorCode::configuration, "reference has " + std::to_string(clip.size()) +
                                              " samples but the stream holds " +
                                              std::to_string(stream.header.sample_count));
  }
  PointResult res;
  res.container = std::move(stream);
  const FecConfig& fec = res.container.header.fec;
  std::vector<Packet> packets;
  packets.reserve(res.container.packets.size());
  for (const auto& bytes : res.container.packets) packets.push_back(parse(bytes));

  res.trace = make_trace(spec.channel, packets.size(), spec.seed);
  ReceiverConfig rc;
  rc.playout_delay = spec.playout_delay;
  rc.context = spec.context;
  rc.strategy = spec.strategy;
  res.frames = simulate_stream(model, res.container, res.trace, rc, &res.row.receiver);
  res.decoded = render(res.frames, clip.size());

  for (const auto& f : frame_encode(clip, model.d_l)) res.reference.push_back(analysis(f));

  MetricsRow& row = res.row;
  row.q_lambda = res.container.header.q_lambda;
  row.fec_q = fec.stages;
  row.fec_n = fec.copies();
  row.channel = spec.channel.describe();
  row.seed = spec.seed;
  const auto ts = trace_stats(LossTrace{{res.trace.flags.begin(),
                                         res.trace.flags.begin() + static_cast<std::ptrdiff_t>(packets.size())}});
  row.loss_rate = ts.loss_rate;
  const auto br = account_stream(packets, fec);
  row.bitrate_src_kbps = br.source_kbps;
  row.bitrate_fec_kbps = br.steady_redundant_kbps;
  row.bitrate_total_kbps = br.total_kbps;
  row.wave = compute_metrics(clip, res.decoded);

  std::array<double, kDecodePathCount> sum{};
  std::array<std::size_t, kDecodePathCount> n{};
  for (std::size_t t = 0; t < res.frames.size(); ++t) {
    const auto p = static_cast<std::size_t>(res.frames[t].path);
    sum[p] += mean_squared_error(res.frames[t].y_hat.coeffs, res.reference[t].coeffs);
    ++n[p];
  }
  for (std::size_t p = 0; p < kDecodePathCount; ++p) {
    row.latent_mse[p] = n[p] == 0 ? std::numeric_limits<double>::quiet_NaN() : sum[p] / static_cast<double>(n[p]);
  }
  return res;
}

std::vector<MetricsRow> run_sweep(const CodecModel& model, const PcmClip& clip,
                                  const std::vector<PointSpec>& points, std::size_t threads) {
  std::vector<MetricsRow> rows(points.size());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, points.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  const auto work = [&] {
    for (std::size_t i = next++; i < points.size() && !failed; i = next++) {
      try {
        rows[i] = run_point(model, clip, points[i]).row;
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
  std::string out(kMetricsSchema);
  out +=
      "\nq_lambda,fec_q,fec_n,channel,seed,loss_rate,bitrate_total_kbps,bitrate_src_kbps,bitrate_fec_kbps,"
      "mse,snr_db,seg_snr_db,snr_median_db,snr_q10_db,frames,entropy_count,plc_high_count,plc_low_count,"
      "zero_fill_count,z_recovery_rate,latent_mse_entropy,latent_mse_plc_high,latent_mse_plc_low,"
      "latent_mse_zero_fill\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.q_lambda,
                       r.fec_q, r.fec_n, csv_field(r.channel), r.seed, r.loss_rate, r.bitrate_total_kbps,
                       r.bitrate_src_kbps, r.bitrate_fec_kbps, r.wave.mse, r.wave.snr_db, r.wave.seg_snr_db,
                       r.wave.snr_median_db, r.wave.snr_q10_db, r.receiver.frames,
                       r.receiver.count(DecodePath::entropy), r.receiver.count(DecodePath::plc_high),
                       r.receiver.count(DecodePath::plc_low), r.receiver.count(DecodePath::zero_fill),
                       r.receiver.z_recovery_rate(), r.latent_mse[0], r.latent_mse[1], r.latent_mse[2],
                       r.latent_mse[3]);
  }
  return out;
}

std::string receiver_report_csv(const ReceiverReport& r, const std::array<double, kDecodePathCount>& latent_mse) {
  std::string out =
      "frames,entropy_count,plc_high_count,plc_low_count,zero_fill_count,z_recovery_rate,corrupt_packets,"
      "payload_failures,latent_mse_entropy,latent_mse_plc_high,latent_mse_plc_low,latent_mse_zero_fill\n";
  out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.frames, r.count(DecodePath::entropy),
                     r.count(DecodePath::plc_high), r.count(DecodePath::plc_low),
                     r.count(DecodePath::zero_fill), r.z_recovery_rate(), r.corrupt_packets, r.payload_failures,
                     latent_mse[0], latent_mse[1], latent_mse[2], latent_mse[3]);
  return out;
}

}  // namespace glaris
