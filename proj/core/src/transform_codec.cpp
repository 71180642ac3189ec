#include "glaris/transform_codec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "glaris/error.hpp"

namespace glaris {

namespace {

// Row-major orthonormal DCT-II basis: basis[k * n + i].
std::shared_ptr<const std::vector<double>> dct_basis(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::shared_ptr<const std::vector<double>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto basis = std::make_shared<std::vector<double>>(n * n);
    const double dc = std::sqrt(1.0 / static_cast<double>(n));
    const double ac = std::sqrt(2.0 / static_cast<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
      const double scale = k == 0 ? dc : ac;
      for (std::size_t i = 0; i < n; ++i) {
        const double angle = std::numbers::pi * (static_cast<double>(i) + 0.5) *
                             static_cast<double>(k) / static_cast<double>(n);
        (*basis)[k * n + i] = scale * std::cos(angle);
      }
    }
    slot = std::move(basis);
  }
  return slot;
}

}  // namespace

void RateControl::validate() const {
  if (q_num < 2) throw Error(ErrorCode::invalid_rate_index, "q_num must be at least 2");
  if (q_lambda < 0 || q_lambda >= q_num) {
    throw Error(ErrorCode::invalid_rate_index,
                "invalid rate index " + std::to_string(q_lambda) + " (expected 0.." +
                    std::to_string(q_num - 1) + ")");
  }
  if (!(lambda_min > 0.0) || !(lambda_min < lambda_max)) {
    throw Error(ErrorCode::invalid_rate_index, "lambda range must satisfy 0 < min < max");
  }
}

double lambda_from_q(const RateControl& rc) {
  rc.validate();
  const double lo = std::log(rc.lambda_min);
  const double hi = std::log(rc.lambda_max);
  const double frac = static_cast<double>(rc.q_lambda) / static_cast<double>(rc.q_num - 1);
  return std::exp(lo + frac * (hi - lo));
}

double step_from_lambda(double lambda, double lambda_min, double step_ref) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::invalid_argument, "lambda must be positive");
  if (!(lambda_min > 0.0)) throw Error(ErrorCode::invalid_argument, "lambda_min must be positive");
  return step_ref * std::sqrt(lambda / lambda_min);
}

double step_for_q(int q_lambda) { return step_from_lambda(lambda_from_q(q_lambda)); }

void dct_forward(std::span<const double> in, std::span<double> out) {
  const std::size_t n = in.size();
  if (out.size() != n) throw Error(ErrorCode::invalid_argument, "dct size mismatch");
  const auto basis = dct_basis(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double* row = basis->data() + k * n;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += row[i] * in[i];
    out[k] = acc;
  }
}

void dct_inverse(std::span<const double> in, std::span<double> out) {
  const std::size_t n = in.size();
  if (out.size() != n) throw Error(ErrorCode::invalid_argument, "dct size mismatch");
  const auto basis = dct_basis(n);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double* row = basis->data() + k * n;
    const double c = in[k];
    if (c == 0.0) continue;
    for (std::size_t i = 0; i < n; ++i) out[i] += row[i] * c;
  }
}

LatentCode analysis(const LatentFrame& frame) {
  LatentCode code;
  code.frame_index = frame.frame_index;
  code.coeffs.resize(frame.coeffs.size());
  dct_forward(frame.coeffs, code.coeffs);
  return code;
}

LatentFrame synthesis(const LatentCode& code) {
  LatentFrame frame;
  frame.frame_index = code.frame_index;
  frame.coeffs.resize(code.coeffs.size());
  dct_inverse(code.coeffs, frame.coeffs);
  return frame;
}

QuantizedLatent quantize(const LatentCode& code, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "quantization step must be positive");
  QuantizedLatent q;
  q.frame_index = code.frame_index;
  q.indices.resize(code.coeffs.size());
  for (std::size_t i = 0; i < code.coeffs.size(); ++i) {
    // std::round rounds halfway cases away from zero.
    const double r = std::round(code.coeffs[i] / step);
    q.indices[i] = static_cast<std::int32_t>(std::clamp(r, -32768.0, 32767.0));
  }
  return q;
}

LatentCode dequantize(const QuantizedLatent& q, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::invalid_argument, "quantization step must be positive");
  LatentCode code;
  code.frame_index = q.frame_index;
  code.coeffs.resize(q.indices.size());
  for (std::size_t i = 0; i < q.indices.size(); ++i) {
    code.coeffs[i] = static_cast<double>(q.indices[i]) * step;
  }
  return code;
}

}  // namespace glaris
