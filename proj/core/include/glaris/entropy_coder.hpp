#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "glaris/hyperprior.hpp"
#include "glaris/transform_codec.hpp"

namespace glaris {

inline constexpr int kDefaultHalfWidth = 255;
inline constexpr unsigned kProbBits = 16;
inline constexpr std::uint32_t kProbTotal = 1u << kProbBits;

// Per-dimension cumulative counts over the alphabet [-L, L] plus an escape
// symbol, each table summing to 2^16. Dimensions sharing (mu, sigma) share a
// table.
class CdfTable {
 public:
  CdfTable() = default;
  // counts: one vector of 2L+2 symbol counts per distinct table (escape last);
  // dim_to_table maps each dimension to its table.
  CdfTable(int half_width, std::vector<std::vector<std::uint32_t>> counts,
           std::vector<std::uint32_t> dim_to_table);

  int half_width() const noexcept { return half_width_; }
  std::size_t dims() const noexcept { return dim_to_table_.size(); }
  std::size_t symbols() const noexcept { return 2 * static_cast<std::size_t>(half_width_) + 2; }
  std::size_t escape_symbol() const noexcept { return symbols() - 1; }
  std::size_t distinct_tables() const noexcept { return cdfs_.size(); }

  // symbols() + 1 cumulative entries, first 0 and last 2^16.
  std::span<const std::uint32_t> cdf(std::size_t dim) const;
  std::uint32_t count(std::size_t dim, std::size_t symbol) const;
  // Count for an in-alphabet value; values outside [-L, L] use the escape.
  std::uint32_t value_count(std::size_t dim, int value) const;

 private:
  int half_width_ = kDefaultHalfWidth;
  std::vector<std::vector<std::uint32_t>> cdfs_;
  std::vector<std::uint32_t> dim_to_table_;
};

// Discretized Gaussian mass per symbol with tails folded into +-L, quantized
// to 16-bit counts: every symbol keeps at least one count, the escape exactly
// one, and the remainder goes out by largest fractional part.
std::vector<std::uint32_t> gaussian_counts(double mu, double sigma, double step,
                                           int half_width = kDefaultHalfWidth);

CdfTable build_cdf(const GaussianParams& theta, double step, int half_width = kDefaultHalfWidth);

struct Bitstream {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;

  bool operator==(const Bitstream&) const = default;
};

// Carry-less range coder over a 32-bit window held in 64-bit registers.
// Bytes are emitted big-endian; finish() writes only the leading bits of the
// shortest value inside the final interval.
class RangeEncoder {
 public:
  void encode(std::uint32_t cum, std::uint32_t freq);
  void encode_raw16(std::uint16_t value) { encode(value, 1); }
  Bitstream finish();

 private:
  void normalize();

  std::uint64_t low_ = 0;
  std::uint64_t range_ = std::uint64_t{1} << 32;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(const Bitstream& bits);

  // Cumulative-frequency target in [0, 2^16), or nullopt on a corrupt stream.
  std::optional<std::uint32_t> target();
  void consume(std::uint32_t cum, std::uint32_t freq);
  // True when the stream ended exactly where the encoder's flush would.
  bool finish() const;

 private:
  std::uint8_t next_byte();
  void normalize();

  const Bitstream& bits_;
  std::size_t pos_ = 0;
  std::uint64_t code_ = 0;
  std::uint64_t low_ = 0;
  std::uint64_t range_ = std::uint64_t{1} << 32;
  std::uint64_t step_ = 0;
};

// Throws invalid_argument for a value outside the signed 16-bit range.
Bitstream encode_frame(const QuantizedLatent& yq, const CdfTable& tables);

// nullopt marks a decode failure (truncated, padded or corrupted stream).
std::optional<QuantizedLatent> decode_frame(const Bitstream& bits, const CdfTable& tables,
                                            std::size_t d_y, std::uint32_t frame_index = 0);

inline std::size_t measure_rate(const Bitstream& bits) noexcept { return bits.bit_length; }

}  // namespace glaris
