#include "glaris/entropy_coder.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "glaris/error.hpp"

namespace glaris {

namespace {

constexpr std::uint64_t kWindowMask = 0xFFFFFFFFull;
constexpr std::uint64_t kBot = std::uint64_t{1} << 16;
constexpr std::uint32_t kTerminatorCum = 0xA500;
constexpr std::uint32_t kTerminatorFreq = 0x100;
constexpr double kSupportSigmas = 12.0;

// Shortest flush: the fewest leading bits k such that the value with those
// bits and zeros below lies inside [low, low + range). A stream with no
// renormalized bytes flushes at least one bit.
std::pair<unsigned, std::uint64_t> canonical_flush(std::uint64_t low, std::uint64_t range, bool empty) {
  for (unsigned k = empty ? 1 : 0; k <= 32; ++k) {
    const std::uint64_t unit = std::uint64_t{1} << (32 - k);
    const std::uint64_t v = (low + unit - 1) / unit * unit;
    if (v < low + range) return {k, v};
  }
  return {32, low};
}

// Normal tail mass beyond |x|.
double tail_mass(double x) {
  constexpr double inv_sqrt2 = 0.70710678118654752440;
  return 0.5 * std::erfc(std::fabs(x) * inv_sqrt2);
}

// Phi(b) - Phi(a) from the tails at a and b.
double interval_mass(double a, double b, double tail_a, double tail_b) {
  if (a >= 0.0) return tail_a - tail_b;
  if (b <= 0.0) return tail_b - tail_a;
  return 1.0 - (tail_b + tail_a);
}

}  // namespace

CdfTable::CdfTable(int half_width, std::vector<std::vector<std::uint32_t>> counts,
                   std::vector<std::uint32_t> dim_to_table)
    : half_width_(half_width), dim_to_table_(std::move(dim_to_table)) {
  if (half_width_ < 1 || half_width_ > 32767) {
    throw Error(ErrorCode::invalid_argument, "alphabet half-width out of range");
  }
  cdfs_.reserve(counts.size());
  for (const auto& c : counts) {
    if (c.size() != symbols()) throw Error(ErrorCode::invalid_argument, "count table has wrong symbol count");
    std::vector<std::uint32_t> cdf(c.size() + 1, 0);
    for (std::size_t s = 0; s < c.size(); ++s) {
      if (c[s] == 0) throw Error(ErrorCode::invalid_argument, "every symbol needs at least one count");
      cdf[s + 1] = cdf[s] + c[s];
    }
    if (cdf.back() != kProbTotal) throw Error(ErrorCode::invalid_argument, "counts must total 65536");
    cdfs_.push_back(std::move(cdf));
  }
  for (auto idx : dim_to_table_) {
    if (idx >= cdfs_.size()) throw Error(ErrorCode::invalid_argument, "dimension maps to missing table");
  }
}

std::span<const std::uint32_t> CdfTable::cdf(std::size_t dim) const {
  return cdfs_.at(dim_to_table_.at(dim));
}

std::uint32_t CdfTable::count(std::size_t dim, std::size_t symbol) const {
  const auto c = cdf(dim);
  return c[symbol + 1] - c[symbol];
}

std::uint32_t CdfTable::value_count(std::size_t dim, int value) const {
  if (value < -half_width_ || value > half_width_) return count(dim, escape_symbol());
  return count(dim, static_cast<std::size_t>(value + half_width_));
}

std::vector<std::uint32_t> gaussian_counts(double mu, double sigma, double step, int half_width) {
  if (!(sigma > 0.0) || !(step > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "gaussian_counts needs positive sigma and step");
  }
  const std::size_t regular = 2 * static_cast<std::size_t>(half_width) + 1;

  // Bins beyond kSupportSigmas carry far less than one count and are floored.
  const double centre = mu / step + half_width;
  const double reach = kSupportSigmas * sigma / step + 1.0;
  const auto clamp_bin = [&](double x) {
    return static_cast<std::size_t>(std::clamp(x, 0.0, static_cast<double>(regular - 1)));
  };
  std::size_t lo = std::isfinite(centre - reach) ? clamp_bin(std::floor(centre - reach)) : 0;
  std::size_t hi = std::isfinite(centre + reach) ? clamp_bin(std::ceil(centre + reach)) : regular - 1;

  std::size_t w = hi - lo + 1;
  std::vector<double> mass(w);
  double total = 0.0;
  const auto edge = [&](std::size_t s) -> double {
    if (s == 0) return -INFINITY;
    if (s == regular) return INFINITY;
    return ((static_cast<double>(static_cast<int>(s) - half_width) - 0.5) * step - mu) / sigma;
  };
  double a = edge(lo);
  double tail_a = tail_mass(a);
  for (std::size_t i = 0; i < w; ++i) {
    const double b = edge(lo + i + 1);
    const double tail_b = tail_mass(b);
    mass[i] = std::max(interval_mass(a, b, tail_a, tail_b), 0.0);
    total += mass[i];
    a = b;
    tail_a = tail_b;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    lo = 0;
    w = regular;
    mass.assign(regular, 1.0);
    total = static_cast<double>(regular);
  }

  // Regular symbols share 65535 counts. Symbols whose share falls below one
  // count are floored to one; the excess comes from the non-mode symbols
  // first, then from all of them.
  const double share = static_cast<double>(kProbTotal - 1);
  const double peak = *std::max_element(mass.begin(), mass.end());
  std::vector<double> ideal(w);
  std::vector<char> is_mode(w);
  std::vector<char> floored(w, 0);
  for (std::size_t i = 0; i < w; ++i) {
    ideal[i] = mass[i] / total * share;
    is_mode[i] = mass[i] == peak;
  }

  std::vector<double> target(w, 1.0);
  const double outside = static_cast<double>(regular - w);
  for (;;) {
    double free = share - outside;
    double mode_sum = 0.0;
    double donor_sum = 0.0;
    for (std::size_t i = 0; i < w; ++i) {
      if (floored[i]) {
        free -= 1.0;
      } else if (is_mode[i]) {
        mode_sum += ideal[i];
      } else {
        donor_sum += ideal[i];
      }
    }
    const double room = free - mode_sum;
    const bool spare_mode = donor_sum > 0.0 && room > 0.0;
    const double scale = spare_mode ? room / donor_sum : free / (mode_sum + donor_sum);
    bool changed = false;
    for (std::size_t i = 0; i < w; ++i) {
      if (floored[i]) continue;
      target[i] = (spare_mode && is_mode[i]) ? ideal[i] : ideal[i] * scale;
      if (target[i] < 1.0) {
        floored[i] = 1;
        changed = true;
      }
    }
    if (!changed) break;
  }

  std::vector<std::uint32_t> counts(regular + 1, 1);
  std::vector<double> frac(w, 0.0);
  std::uint32_t used = static_cast<std::uint32_t>(regular + 1);
  std::vector<std::size_t> order;
  order.reserve(w);
  for (std::size_t i = 0; i < w; ++i) {
    if (floored[i]) continue;
    const double base = std::floor(target[i]);
    counts[lo + i] = static_cast<std::uint32_t>(base);
    used += counts[lo + i] - 1;
    frac[i] = target[i] - base;
    order.push_back(i);
  }
  std::uint32_t remaining = kProbTotal > used ? kProbTotal - used : 0;

  // Largest remainder in whole tie groups; a group that no longer fits sends
  // the rest to the bin nearest the mean.
  std::stable_sort(order.begin(), order.end(),
                   [&frac](std::size_t x, std::size_t y) { return frac[x] > frac[y]; });
  std::size_t i = 0;
  while (remaining > 0 && i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && frac[order[j]] == frac[order[i]]) ++j;
    const std::size_t group = j - i;
    if (group > remaining) break;
    for (std::size_t g = i; g < j; ++g) ++counts[lo + order[g]];
    remaining -= static_cast<std::uint32_t>(group);
    i = j;
  }
  if (remaining > 0) {
    const double nearest = std::clamp(std::round(mu / step), -static_cast<double>(half_width),
                                      static_cast<double>(half_width));
    counts[static_cast<std::size_t>(static_cast<int>(nearest) + half_width)] += remaining;
  }
  return counts;
}

CdfTable build_cdf(const GaussianParams& theta, double step, int half_width) {
  if (theta.mu.size() != theta.sigma.size()) {
    throw Error(ErrorCode::invalid_argument, "mu and sigma differ in length");
  }
  std::map<std::pair<double, double>, std::uint32_t> seen;
  std::vector<std::vector<std::uint32_t>> tables;
  std::vector<std::uint32_t> dim_map(theta.mu.size());
  for (std::size_t d = 0; d < theta.mu.size(); ++d) {
    const auto key = std::make_pair(theta.mu[d], theta.sigma[d]);
    auto it = seen.find(key);
    if (it == seen.end()) {
      it = seen.emplace(key, static_cast<std::uint32_t>(tables.size())).first;
      tables.push_back(gaussian_counts(key.first, key.second, step, half_width));
    }
    dim_map[d] = it->second;
  }
  return CdfTable(half_width, std::move(tables), std::move(dim_map));
}

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq) {
  const std::uint64_t r = range_ >> kProbBits;
  low_ += r * cum;
  range_ = r * freq;
  normalize();
}

void RangeEncoder::normalize() {
  for (;;) {
    if (((low_ ^ (low_ + range_ - 1)) >> 24) == 0) {
      // Top byte settled.
    } else if (range_ < kBot) {
      range_ = kBot - (low_ & (kBot - 1));
    } else {
      break;
    }
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ = (low_ << 8) & kWindowMask;
    range_ <<= 8;
  }
}

Bitstream RangeEncoder::finish() {
  const auto [k, v] = canonical_flush(low_, range_, out_.empty());
  Bitstream bits;
  bits.bit_length = out_.size() * 8 + k;
  bits.bytes = std::move(out_);
  for (unsigned b = 0; b < (k + 7) / 8; ++b) {
    bits.bytes.push_back(static_cast<std::uint8_t>(v >> (24 - 8 * b)));
  }
  out_.clear();
  low_ = 0;
  range_ = std::uint64_t{1} << 32;
  return bits;
}

RangeDecoder::RangeDecoder(const Bitstream& bits) : bits_(bits) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  const std::size_t at = pos_++;
  return at < bits_.bytes.size() ? bits_.bytes[at] : std::uint8_t{0};
}

std::optional<std::uint32_t> RangeDecoder::target() {
  step_ = range_ >> kProbBits;
  if (code_ < low_ || step_ == 0) return std::nullopt;
  const std::uint64_t t = (code_ - low_) / step_;
  if (t >= kProbTotal) return std::nullopt;
  return static_cast<std::uint32_t>(t);
}

void RangeDecoder::consume(std::uint32_t cum, std::uint32_t freq) {
  low_ += step_ * cum;
  range_ = step_ * freq;
  normalize();
}

void RangeDecoder::normalize() {
  for (;;) {
    if (((low_ ^ (low_ + range_ - 1)) >> 24) == 0) {
    } else if (range_ < kBot) {
      range_ = kBot - (low_ & (kBot - 1));
    } else {
      break;
    }
    code_ = ((code_ << 8) | next_byte()) & kWindowMask;
    low_ = (low_ << 8) & kWindowMask;
    range_ <<= 8;
  }
}

bool RangeDecoder::finish() const {
  const std::size_t renorm_bytes = pos_ - 4;
  const auto [k, v] = canonical_flush(low_, range_, renorm_bytes == 0);
  const std::size_t expected_bits = renorm_bytes * 8 + k;
  return code_ == v && expected_bits == bits_.bit_length &&
         (bits_.bit_length + 7) / 8 == bits_.bytes.size();
}

Bitstream encode_frame(const QuantizedLatent& yq, const CdfTable& tables) {
  if (yq.size() != tables.dims()) {
    throw Error(ErrorCode::invalid_argument, "frame has " + std::to_string(yq.size()) +
                                                 " symbols but tables cover " +
                                                 std::to_string(tables.dims()));
  }
  const int half = tables.half_width();
  RangeEncoder enc;
  for (std::size_t d = 0; d < yq.size(); ++d) {
    const int v = yq.indices[d];
    const auto cdf = tables.cdf(d);
    if (v >= -half && v <= half) {
      const auto s = static_cast<std::size_t>(v + half);
      enc.encode(cdf[s], cdf[s + 1] - cdf[s]);
    } else {
      if (v < -32768 || v > 32767) {
        throw Error(ErrorCode::invalid_argument,
                    "symbol " + std::to_string(v) + " exceeds the 16-bit bypass range");
      }
      const auto esc = tables.escape_symbol();
      enc.encode(cdf[esc], cdf[esc + 1] - cdf[esc]);
      enc.encode_raw16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
    }
  }
  enc.encode(kTerminatorCum, kTerminatorFreq);
  return enc.finish();
}

std::optional<QuantizedLatent> decode_frame(const Bitstream& bits, const CdfTable& tables,
                                            std::size_t d_y, std::uint32_t frame_index) {
  if (d_y != tables.dims()) {
    throw Error(ErrorCode::invalid_argument, "table dimension does not match d_y");
  }
  if (d_y > 0 && bits.bit_length == 0) return std::nullopt;
  if (bits.bit_length > bits.bytes.size() * 8) return std::nullopt;

  const int half = tables.half_width();
  RangeDecoder dec(bits);
  QuantizedLatent out;
  out.frame_index = frame_index;
  out.indices.resize(d_y);
  for (std::size_t d = 0; d < d_y; ++d) {
    const auto cdf = tables.cdf(d);
    const auto t = dec.target();
    if (!t) return std::nullopt;
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), *t);
    const auto s = static_cast<std::size_t>(it - cdf.begin()) - 1;
    dec.consume(cdf[s], cdf[s + 1] - cdf[s]);
    if (s == tables.escape_symbol()) {
      const auto raw = dec.target();
      if (!raw) return std::nullopt;
      dec.consume(*raw, 1);
      const int v = static_cast<std::int16_t>(static_cast<std::uint16_t>(*raw));
      if (v >= -half && v <= half) return std::nullopt;  // non-canonical escape
      out.indices[d] = v;
    } else {
      out.indices[d] = static_cast<int>(s) - half;
    }
  }
  const auto term = dec.target();
  if (!term || *term < kTerminatorCum || *term >= kTerminatorCum + kTerminatorFreq) return std::nullopt;
  dec.consume(kTerminatorCum, kTerminatorFreq);
  if (!dec.finish()) return std::nullopt;
  return out;
}

}  // namespace glaris
