#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace glaris {

enum class TraceOrigin : std::uint8_t { bernoulli, markov3, file };

struct LossTrace {
  std::vector<bool> flags;  // true = lost
  TraceOrigin origin = TraceOrigin::file;
  std::uint64_t seed = 0;

  std::size_t size() const noexcept { return flags.size(); }
  bool lost(std::size_t i) const { return flags.at(i); }
  bool operator==(const LossTrace&) const = default;
};

struct MarkovParams {
  std::array<std::array<double, 3>, 3> transition{};  // row-stochastic
  std::array<double, 3> loss_prob{};
  int initial_state = 0;

  // Throws configuration on a non-stochastic matrix or a bad probability.
  void validate() const;
};

LossTrace gen_bernoulli(double p, std::size_t len, std::uint64_t seed);
LossTrace gen_markov3(const MarkovParams& params, std::size_t len, std::uint64_t seed);

// Requires exactly one closed class; throws no_stationary_distribution
// otherwise.
std::array<double, 3> stationary_distribution(const MarkovParams& params);
double stationary_loss_rate(const MarkovParams& params);

// Good / burst / gap chain: losses only in the burst state, bursts of
// geometric length with the given mean, and a gap state that re-enters the
// burst state so losses cluster.
MarkovParams markov_burst_params(double loss_rate, double mean_burst);

struct MarkovPreset {
  std::string_view name;
  double loss_rate;
  double mean_burst;
};
// burst5, burst10 (default), burst20.
const std::vector<MarkovPreset>& markov_presets();
MarkovParams markov_preset(std::string_view name);

LossTrace parse_trace(std::string_view text);
std::string format_trace(const LossTrace& trace);
LossTrace load_trace(const std::filesystem::path& path);
void save_trace(const std::filesystem::path& path, const LossTrace& trace);

struct TraceStats {
  std::size_t frames = 0;
  std::size_t lost = 0;
  double loss_rate = 0.0;
  std::map<std::size_t, std::size_t> burst_histogram;  // length -> count
  std::size_t max_burst = 0;
  std::size_t bursts = 0;
  double mean_burst = 0.0;
};

TraceStats trace_stats(const LossTrace& trace);
// Header row and one data row: loss_rate,max_burst,mean_burst,hist_1..hist_max.
std::string trace_stats_csv(const TraceStats& stats);

// Channel description used by the harness:
//   none | bernoulli:<p> | markov:<preset> | markov:<rate>,<mean_burst> | trace:<path>
struct ChannelSpec {
  enum class Kind : std::uint8_t { none, bernoulli, markov, file } kind = Kind::none;
  double p = 0.0;
  MarkovParams markov;
  std::string label;
  std::filesystem::path path;

  static ChannelSpec parse(std::string_view text);
  static ChannelSpec bernoulli(double p);
  std::string describe() const;
  // Analytic average loss rate; NaN for recorded traces.
  double expected_loss_rate() const;
};

// Trace for `len` packets. Recorded traces must be at least that long.
LossTrace make_trace(const ChannelSpec& spec, std::size_t len, std::uint64_t seed);

}  // namespace glaris
