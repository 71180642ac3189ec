#include "glaris/context_predictor.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "glaris/error.hpp"

namespace glaris {

std::string_view to_string(ContextMode mode) noexcept {
  switch (mode) {
    case ContextMode::none: return "none";
    case ContextMode::previous_frame: return "previous";
    case ContextMode::lpc: return "lpc";
  }
  return "none";
}

ContextMode parse_context_mode(std::string_view text) {
  if (text == "none") return ContextMode::none;
  if (text == "lpc") return ContextMode::lpc;
  if (text == "previous" || text == "previous_frame") return ContextMode::previous_frame;
  throw Error(ErrorCode::configuration, "unknown context mode '" + std::string(text) + "'");
}

std::vector<double> lpc_coefficients(std::span<const double> samples, int order, double white_noise) {
  const auto p = static_cast<std::size_t>(order);
  std::vector<double> a(p, 0.0);
  const std::size_t n = samples.size();
  if (order <= 0 || n <= p) return a;

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double h = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                            static_cast<double>(n - 1));
    w[i] = samples[i] * h;
  }
  std::vector<double> r(p + 1, 0.0);
  for (std::size_t lag = 0; lag <= p; ++lag) {
    double acc = 0.0;
    for (std::size_t i = lag; i < n; ++i) acc += w[i] * w[i - lag];
    r[lag] = acc;
  }
  if (!(r[0] > 0.0)) return a;
  r[0] *= 1.0 + white_noise;

  double err = r[0];
  std::vector<double> prev(p, 0.0);
  for (std::size_t i = 0; i < p; ++i) {
    double acc = r[i + 1];
    for (std::size_t j = 0; j < i; ++j) acc -= a[j] * r[i - j];
    const double k = acc / err;
    prev = a;
    a[i] = k;
    for (std::size_t j = 0; j < i; ++j) a[j] = prev[j] - k * prev[i - 1 - j];
    err *= 1.0 - k * k;
    if (!(err > 0.0)) break;
  }
  return a;
}

std::vector<double> lpc_extrapolate(std::span<const double> samples, std::size_t count,
                                    const LpcSettings& settings) {
  const auto a = lpc_coefficients(samples, settings.order, settings.white_noise);
  const std::size_t p = a.size();
  std::vector<double> buf(samples.begin(), samples.end());
  buf.reserve(samples.size() + count);
  for (std::size_t t = 0; t < count; ++t) {
    double v = 0.0;
    const std::size_t end = buf.size();
    for (std::size_t k = 1; k <= p && k <= end; ++k) v += a[k - 1] * buf[end - k];
    buf.push_back(v);
  }
  return {buf.end() - static_cast<std::ptrdiff_t>(count), buf.end()};
}

std::optional<LatentCode> predict_context(ContextMode mode, std::span<const LatentCode> history,
                                          std::uint32_t frame_index, const LpcSettings& settings) {
  if (history.empty() || mode == ContextMode::none) return std::nullopt;
  if (mode == ContextMode::previous_frame) {
    LatentCode out = history.back();
    out.frame_index = frame_index;
    return out;
  }
  const std::size_t use = std::min(history.size(), std::max<std::size_t>(settings.history_frames, 1));
  const std::size_t dim = history.back().size();
  std::vector<double> samples;
  samples.reserve(use * dim);
  for (std::size_t h = history.size() - use; h < history.size(); ++h) {
    const auto frame = synthesis(history[h]);
    samples.insert(samples.end(), frame.coeffs.begin(), frame.coeffs.end());
  }
  const LatentFrame next{lpc_extrapolate(samples, dim, settings), frame_index};
  return analysis(next);
}

}  // namespace glaris
