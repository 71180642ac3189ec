#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace glaris {

inline constexpr int kSampleRate = 16000;
// One 20 ms frame at 16 kHz.
inline constexpr std::size_t kFrameSize = 320;

struct PcmClip {
  std::vector<std::int16_t> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const noexcept { return samples.size(); }
  double seconds() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
  bool operator==(const PcmClip&) const = default;
};

// Normalized samples of one frame, the unit every later stage works on.
struct LatentFrame {
  std::vector<double> coeffs;
  std::uint32_t frame_index = 0;

  bool operator==(const LatentFrame&) const = default;
};

// Splits a clip into zero-padded frames of normalized samples (x / 32768).
std::vector<LatentFrame> frame_encode(const PcmClip& clip,
                                      std::size_t frame_size = kFrameSize);

// Concatenates frames, denormalizes with saturation and truncates to
// original_len samples. Frame indices must be consecutive.
PcmClip frame_decode(std::span<const LatentFrame> frames, std::size_t original_len);

std::size_t frame_count(std::size_t samples, std::size_t frame_size = kFrameSize) noexcept;

// Saturating conversion of one normalized amplitude to PCM16.
std::int16_t denormalize(double value) noexcept;

// RIFF/WAVE PCM16 mono 16 kHz only. Anything else is rejected with a message
// naming the offending field.
PcmClip parse_wav(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> serialize_wav(const PcmClip& clip);
PcmClip read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const PcmClip& clip);

}  // namespace glaris
