#include <string>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "glaris/error.hpp"
#include "glaris/transform_codec.hpp"
#include "test_support.hpp"

using namespace glaris;

namespace {

// Direct O(n^2) orthonormal DCT-II in long double.
std::vector<long double> dct_oracle(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<long double> out(n);
  const long double pi = std::numbers::pi_v<long double>;
  for (std::size_t k = 0; k < n; ++k) {
    long double acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * std::cos(pi * (i + 0.5L) * k / n);
    const long double scale = k == 0 ? std::sqrt(1.0L / n) : std::sqrt(2.0L / n);
    out[k] = acc * scale;
  }
  return out;
}

}  // namespace

TEST(RateControl, Endpoints) {
  EXPECT_NEAR(lambda_from_q(0), 0.002, 1e-12);
  EXPECT_NEAR(lambda_from_q(63), 0.07, 1e-12);
}

TEST(RateControl, MidpointGolden) {
  // High-precision evaluation of the schedule at q = 32.
  EXPECT_NEAR(lambda_from_q(32), 0.01217078319405733213, 1e-15);
}

TEST(RateControl, LogIsAffineAndIncreasing) {
  const double l0 = std::log(lambda_from_q(0));
  const double slope = (std::log(lambda_from_q(63)) - l0) / 63.0;
  for (int q = 0; q < 64; ++q) {
    EXPECT_NEAR(std::log(lambda_from_q(q)), l0 + slope * q, 1e-12);
    if (q > 0) {
      EXPECT_GT(lambda_from_q(q), lambda_from_q(q - 1));
    }
  }
}

TEST(RateControl, OutOfRangeRejected) {
  for (int q : {-1, 64}) {
    try {
      lambda_from_q(q);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::invalid_rate_index);
      EXPECT_EQ(std::string(e.what()).rfind("invalid rate index", 0), 0u);
    }
  }
}

TEST(StepRule, AnchorsAndGolden) {
  EXPECT_DOUBLE_EQ(step_from_lambda(0.002), kStepRef);
  EXPECT_DOUBLE_EQ(step_from_lambda(0.008), 2 * kStepRef);
  EXPECT_NEAR(step_from_lambda(0.07), 0.005777421663183218791, 1e-17);
  EXPECT_THROW(step_from_lambda(0.0), Error);
  EXPECT_THROW(step_from_lambda(-1.0), Error);
}

TEST(Dct, MatchesDirectOracle) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = fixtures::random_frame(s);
    const auto y = analysis(LatentFrame{x, 0});
    const auto ref = dct_oracle(x);
    for (std::size_t k = 0; k < x.size(); ++k) ASSERT_NEAR(y.coeffs[k], static_cast<double>(ref[k]), 1e-12);
  }
}

TEST(Dct, EnergyPreservedAndInvertible) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto x = fixtures::random_frame(1000 + s);
    const auto y = analysis(LatentFrame{x, 3});
    double ex = 0, ey = 0;
    for (double v : x) ex += v * v;
    for (double v : y.coeffs) ey += v * v;
    ASSERT_NEAR(ey / ex, 1.0, 1e-9);
    const auto back = synthesis(y);
    EXPECT_EQ(back.frame_index, 3u);
    for (std::size_t i = 0; i < x.size(); ++i) ASSERT_NEAR(back.coeffs[i], x[i], 1e-9);
  }
}

TEST(Dct, ZeroAndConstantFrames) {
  const auto z = analysis(LatentFrame{std::vector<double>(320, 0.0), 0});
  for (double v : z.coeffs) EXPECT_EQ(v, 0.0);
  const auto c = analysis(LatentFrame{std::vector<double>(320, 0.25), 0});
  EXPECT_NEAR(c.coeffs[0], 0.25 * std::sqrt(320.0), 1e-12);
  for (std::size_t k = 1; k < 320; ++k) EXPECT_NEAR(c.coeffs[k], 0.0, 1e-12);
  LatentCode dc{std::vector<double>(320, 0.0), 0};
  dc.coeffs[0] = std::sqrt(320.0);
  for (double v : synthesis(dc).coeffs) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Quantize, NearestWithTiesAwayFromZero) {
  const auto q = quantize(LatentCode{{0.4, -1.3, 2.6, 0.5, -0.5}, 0}, 1.0);
  EXPECT_EQ(q.indices, (std::vector<std::int32_t>{0, -1, 3, 1, -1}));
}

TEST(Quantize, DequantizeAndErrorBound) {
  EXPECT_EQ(dequantize(QuantizedLatent{{3}, 0}, 0.25).coeffs, std::vector<double>{0.75});
  EXPECT_EQ(dequantize(QuantizedLatent{{0, 0}, 0}, 0.5).coeffs, (std::vector<double>{0.0, 0.0}));
  for (std::uint64_t s = 0; s < 200; ++s) {
    const LatentCode y{fixtures::random_frame(s, 320, 0.05), 0};
    const double step = step_for_q(static_cast<int>(s % 64));
    const auto back = dequantize(quantize(y, step), step);
    for (std::size_t i = 0; i < 320; ++i) ASSERT_LE(std::abs(back.coeffs[i] - y.coeffs[i]), step / 2 + 1e-15);
  }
}
