#include "glaris/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "glaris/error.hpp"

namespace glaris {

namespace {

double snr_from_sums(double signal, double noise) {
  if (noise <= 0.0) return kSnrCapDb;
  if (signal <= 0.0) return 0.0;
  return std::min(10.0 * std::log10(signal / noise), kSnrCapDb);
}

}  // namespace

double snr_db(std::span<const double> ref, std::span<const double> test) {
  if (ref.size() != test.size()) throw Error(ErrorCode::invalid_argument, "snr needs equal lengths");
  double s = 0.0;
  double n = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    s += ref[i] * ref[i];
    const double d = ref[i] - test[i];
    n += d * d;
  }
  return snr_from_sums(s, n);
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw Error(ErrorCode::invalid_argument, "percentile of an empty set");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<double>(values.size());
  auto rank = static_cast<std::size_t>(std::ceil(std::clamp(q, 0.0, 1.0) * n));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::invalid_argument, "mse needs equal lengths");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

std::vector<double> normalized(const PcmClip& clip) {
  std::vector<double> out(clip.size());
  for (std::size_t i = 0; i < clip.size(); ++i) out[i] = clip.samples[i] / 32768.0;
  return out;
}

WaveformMetrics compute_metrics(std::span<const double> ref, std::span<const double> test,
                                std::size_t window, std::size_t hop) {
  if (ref.size() != test.size()) {
    throw Error(ErrorCode::invalid_argument, "reference has " + std::to_string(ref.size()) +
                                                 " samples but test has " + std::to_string(test.size()));
  }
  if (window == 0 || hop == 0) throw Error(ErrorCode::invalid_argument, "window and hop must be positive");
  WaveformMetrics m;
  m.mse = mean_squared_error(ref, test);
  m.snr_db = snr_db(ref, test);
  if (ref.empty()) {
    m.seg_snr_db = m.snr_median_db = m.snr_q10_db = m.snr_db;
    return m;
  }

  std::vector<double> sig(ref.size() + 1, 0.0);
  std::vector<double> err(ref.size() + 1, 0.0);
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double d = ref[i] - test[i];
    sig[i + 1] = sig[i] + ref[i] * ref[i];
    err[i + 1] = err[i] + d * d;
  }
  std::vector<double> windows;
  const std::size_t w = std::min(window, ref.size());
  for (std::size_t start = 0; start + w <= ref.size(); start += hop) {
    windows.push_back(snr_from_sums(sig[start + w] - sig[start], err[start + w] - err[start]));
  }
  m.windows = windows.size();
  m.seg_snr_db = std::accumulate(windows.begin(), windows.end(), 0.0) / static_cast<double>(windows.size());
  m.snr_median_db = percentile(windows, 0.5);
  m.snr_q10_db = percentile(windows, 0.1);
  return m;
}

WaveformMetrics compute_metrics(const PcmClip& ref, const PcmClip& test, std::size_t window, std::size_t hop) {
  return compute_metrics(normalized(ref), normalized(test), window, hop);
}

}  // namespace glaris
