#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "glaris/audio_frontend.hpp"

namespace glaris {

inline constexpr double kSnrCapDb = 99.0;
inline constexpr std::size_t kMetricWindow = 3 * kSampleRate;
inline constexpr std::size_t kMetricHop = kFrameSize;

// Capped at kSnrCapDb for an exact match; 0 dB for a silent test signal.
double snr_db(std::span<const double> ref, std::span<const double> test);

// Nearest-rank percentile, q in [0, 1].
double percentile(std::vector<double> values, double q);

struct WaveformMetrics {
  double mse = 0.0;          // normalized amplitudes
  double snr_db = 0.0;
  double seg_snr_db = 0.0;   // mean of windowed snr
  double snr_median_db = 0.0;
  double snr_q10_db = 0.0;
  std::size_t windows = 0;
};

// Sliding 3 s windows with a one-frame hop; a clip shorter than a window is
// scored as a single window. Throws invalid_argument on a length mismatch.
WaveformMetrics compute_metrics(const PcmClip& ref, const PcmClip& test,
                                std::size_t window = kMetricWindow, std::size_t hop = kMetricHop);
WaveformMetrics compute_metrics(std::span<const double> ref, std::span<const double> test,
                                std::size_t window = kMetricWindow, std::size_t hop = kMetricHop);

double mean_squared_error(std::span<const double> a, std::span<const double> b);

std::vector<double> normalized(const PcmClip& clip);

}  // namespace glaris
