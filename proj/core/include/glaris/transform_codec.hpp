#pragma once

#include <cstdint>
#include <vector>

#include "glaris/audio_frontend.hpp"

namespace glaris {

// Reference quantization step at lambda_min.
inline constexpr double kStepRef = 1.0 / 1024.0;

// Transform-domain representation of one frame.
struct LatentCode {
  std::vector<double> coeffs;
  std::uint32_t frame_index = 0;

  std::size_t size() const noexcept { return coeffs.size(); }
  bool operator==(const LatentCode&) const = default;
};

// Integer symbols of a quantized LatentCode. Indices saturate to the signed
// 16-bit range carried by the entropy coder's bypass path.
struct QuantizedLatent {
  std::vector<std::int32_t> indices;
  std::uint32_t frame_index = 0;

  std::size_t size() const noexcept { return indices.size(); }
  bool operator==(const QuantizedLatent&) const = default;
};

struct RateControl {
  int q_lambda = 0;
  int q_num = 64;
  double lambda_min = 0.002;
  double lambda_max = 0.07;

  void validate() const;
};

// Log-linear schedule from the rate-control index to the RD trade-off weight.
double lambda_from_q(const RateControl& rc);
inline double lambda_from_q(int q_lambda) { return lambda_from_q(RateControl{.q_lambda = q_lambda}); }

// Step rule: delta = step_ref * sqrt(lambda / lambda_min).
double step_from_lambda(double lambda, double lambda_min = 0.002, double step_ref = kStepRef);

// Quantization step used by the codec for a rate index under default settings.
double step_for_q(int q_lambda);

// Orthonormal DCT-II over the frame and its inverse.
LatentCode analysis(const LatentFrame& frame);
LatentFrame synthesis(const LatentCode& code);
void dct_forward(std::span<const double> in, std::span<double> out);
void dct_inverse(std::span<const double> in, std::span<double> out);

// Uniform scalar quantizer; ties round away from zero.
QuantizedLatent quantize(const LatentCode& code, double step);
LatentCode dequantize(const QuantizedLatent& q, double step);

}  // namespace glaris
