#include "glaris/audio_frontend.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "glaris/byte_io.hpp"
#include "glaris/error.hpp"

namespace glaris {

namespace {

constexpr double kPcmScale = 32768.0;

}  // namespace

std::size_t frame_count(std::size_t samples, std::size_t frame_size) noexcept {
  return frame_size == 0 ? 0 : (samples + frame_size - 1) / frame_size;
}

std::int16_t denormalize(double value) noexcept {
  if (std::isnan(value)) return 0;
  const double scaled = std::round(value * kPcmScale);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

std::vector<LatentFrame> frame_encode(const PcmClip& clip, std::size_t frame_size) {
  if (clip.samples.empty()) throw Error(ErrorCode::empty_input, "empty input");
  if (clip.sample_rate != kSampleRate) {
    throw Error(ErrorCode::unsupported_format,
                "unsupported sample rate " + std::to_string(clip.sample_rate));
  }
  if (frame_size == 0) throw Error(ErrorCode::invalid_argument, "frame size must be positive");

  const std::size_t n = frame_count(clip.samples.size(), frame_size);
  std::vector<LatentFrame> frames(n);
  for (std::size_t t = 0; t < n; ++t) {
    auto& f = frames[t];
    f.frame_index = static_cast<std::uint32_t>(t);
    f.coeffs.assign(frame_size, 0.0);
    const std::size_t begin = t * frame_size;
    const std::size_t end = std::min(begin + frame_size, clip.samples.size());
    for (std::size_t i = begin; i < end; ++i) {
      f.coeffs[i - begin] = static_cast<double>(clip.samples[i]) / kPcmScale;
    }
  }
  return frames;
}

PcmClip frame_decode(std::span<const LatentFrame> frames, std::size_t original_len) {
  if (frames.empty()) throw Error(ErrorCode::empty_input, "empty input");
  PcmClip clip;
  std::size_t total = 0;
  for (const auto& f : frames) total += f.coeffs.size();
  clip.samples.reserve(total);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (t > 0 && frames[t].frame_index != frames[t - 1].frame_index + 1) {
      throw Error(ErrorCode::discontinuous_stream,
                  "discontinuous stream: frame " + std::to_string(frames[t].frame_index) +
                      " follows " + std::to_string(frames[t - 1].frame_index));
    }
    for (double c : frames[t].coeffs) clip.samples.push_back(denormalize(c));
  }
  if (clip.samples.size() > original_len) clip.samples.resize(original_len);
  return clip;
}

PcmClip parse_wav(std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes, ErrorCode::unsupported_format);
  if (!in.tag("RIFF")) throw Error(ErrorCode::unsupported_format, "not a RIFF file");
  in.u32();
  if (!in.tag("WAVE")) throw Error(ErrorCode::unsupported_format, "not a WAVE file");

  bool have_fmt = false;
  PcmClip clip;
  while (in.remaining() >= 8) {
    const auto id = in.bytes(4);
    const std::uint32_t size = in.u32();
    const std::string chunk(id.begin(), id.end());
    if (chunk == "fmt ") {
      if (size < 16) throw Error(ErrorCode::unsupported_format, "fmt chunk too small");
      ByteReader fmt(in.bytes(size), ErrorCode::unsupported_format);
      const std::uint16_t format_tag = fmt.u16();
      const std::uint16_t channels = fmt.u16();
      const std::uint32_t rate = fmt.u32();
      fmt.u32();  // byte rate
      fmt.u16();  // block align
      const std::uint16_t bits = fmt.u16();
      if (format_tag != 1) {
        throw Error(ErrorCode::unsupported_format,
                    "unsupported audio format tag " + std::to_string(format_tag));
      }
      if (channels != 1) {
        throw Error(ErrorCode::unsupported_format,
                    "unsupported channel count " + std::to_string(channels));
      }
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        throw Error(ErrorCode::unsupported_format,
                    "unsupported sample rate " + std::to_string(rate));
      }
      if (bits != 16) {
        throw Error(ErrorCode::unsupported_format,
                    "unsupported bits per sample " + std::to_string(bits));
      }
      have_fmt = true;
    } else if (chunk == "data") {
      if (!have_fmt) throw Error(ErrorCode::unsupported_format, "data chunk before fmt chunk");
      const std::size_t usable = std::min<std::size_t>(size, in.remaining()) & ~std::size_t{1};
      ByteReader data(in.bytes(usable), ErrorCode::unsupported_format);
      clip.samples.resize(usable / 2);
      for (auto& s : clip.samples) s = static_cast<std::int16_t>(data.u16());
      return clip;
    } else {
      const std::size_t skip = std::min<std::size_t>(size + (size & 1u), in.remaining());
      in.bytes(skip);
    }
  }
  throw Error(ErrorCode::unsupported_format, have_fmt ? "missing data chunk" : "missing fmt chunk");
}

std::vector<std::uint8_t> serialize_wav(const PcmClip& clip) {
  if (clip.sample_rate != kSampleRate) {
    throw Error(ErrorCode::unsupported_format,
                "unsupported sample rate " + std::to_string(clip.sample_rate));
  }
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  ByteWriter out;
  out.tag("RIFF");
  out.u32(36 + data_bytes);
  out.tag("WAVE");
  out.tag("fmt ");
  out.u32(16);
  out.u16(1);
  out.u16(1);
  out.u32(kSampleRate);
  out.u32(kSampleRate * 2);
  out.u16(2);
  out.u16(16);
  out.tag("data");
  out.u32(data_bytes);
  for (auto s : clip.samples) out.u16(static_cast<std::uint16_t>(s));
  return std::move(out).take();
}

PcmClip read_wav(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_wav(const std::filesystem::path& path, const PcmClip& clip) {
  write_file(path, serialize_wav(clip));
}

}  // namespace glaris
