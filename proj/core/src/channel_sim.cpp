#include "glaris/channel_sim.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "glaris/byte_io.hpp"
#include "glaris/error.hpp"
#include "glaris/rng.hpp"

namespace glaris {

namespace {

constexpr std::uint64_t kBernoulliStream = 0xB3;
constexpr std::uint64_t kMarkovStream = 0x3A;

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc{} || res.ptr != end) {
    throw Error(ErrorCode::configuration, "invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

}  // namespace

void MarkovParams::validate() const {
  for (std::size_t i = 0; i < 3; ++i) {
    double sum = 0.0;
    for (double v : transition[i]) {
      if (!(v >= 0.0) || v > 1.0) {
        throw Error(ErrorCode::configuration, "transition matrix row " + std::to_string(i) +
                                                  " has an entry outside [0, 1]");
      }
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      throw Error(ErrorCode::configuration, "transition matrix row " + std::to_string(i) + " sums to " +
                                                std::to_string(sum) + ", not 1");
    }
    if (!(loss_prob[i] >= 0.0) || loss_prob[i] > 1.0) {
      throw Error(ErrorCode::configuration, "loss probability of state " + std::to_string(i) +
                                                " outside [0, 1]");
    }
  }
  if (initial_state < 0 || initial_state > 2) throw Error(ErrorCode::configuration, "initial state must be 0, 1 or 2");
}

LossTrace gen_bernoulli(double p, std::size_t len, std::uint64_t seed) {
  if (!(p >= 0.0) || p > 1.0) throw Error(ErrorCode::configuration, "loss probability outside [0, 1]");
  LossTrace t;
  t.origin = TraceOrigin::bernoulli;
  t.seed = seed;
  t.flags.resize(len);
  Rng rng(seed, kBernoulliStream);
  for (std::size_t i = 0; i < len; ++i) t.flags[i] = rng.bernoulli(p);
  return t;
}

LossTrace gen_markov3(const MarkovParams& params, std::size_t len, std::uint64_t seed) {
  params.validate();
  LossTrace t;
  t.origin = TraceOrigin::markov3;
  t.seed = seed;
  t.flags.resize(len);
  Rng rng(seed, kMarkovStream);
  int state = params.initial_state;
  for (std::size_t i = 0; i < len; ++i) {
    const double th = params.loss_prob[static_cast<std::size_t>(state)];
    t.flags[i] = th >= 1.0 || (th > 0.0 && rng.bernoulli(th));
    const auto& row = params.transition[static_cast<std::size_t>(state)];
    const double u = rng.uniform();
    double acc = 0.0;
    int next = 2;
    for (int s = 0; s < 3; ++s) {
      acc += row[static_cast<std::size_t>(s)];
      if (u < acc) {
        next = s;
        break;
      }
    }
    while (row[static_cast<std::size_t>(next)] == 0.0 && next > 0) --next;
    state = next;
  }
  return t;
}

std::array<double, 3> stationary_distribution(const MarkovParams& params) {
  params.validate();
  std::array<std::array<bool, 3>, 3> reach{};
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) reach[i][j] = i == j || params.transition[i][j] > 0.0;
  }
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) reach[i][j] = reach[i][j] || (reach[i][k] && reach[k][j]);
    }
  }
  // A state is recurrent when everything it reaches reaches it back; count
  // closed classes by their smallest member.
  int classes = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    bool closed = true;
    bool smallest = true;
    for (std::size_t j = 0; j < 3; ++j) {
      if (reach[i][j] && !reach[j][i]) closed = false;
      if (j < i && reach[i][j] && reach[j][i]) smallest = false;
    }
    if (closed && smallest) ++classes;
  }
  if (classes != 1) {
    throw Error(ErrorCode::no_stationary_distribution, "no unique stationary distribution (" +
                                                           std::to_string(classes) + " closed classes)");
  }
  Eigen::Matrix<double, 4, 3> a;
  Eigen::Vector4d b = Eigen::Vector4d::Zero();
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      a(i, j) = params.transition[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] - (i == j ? 1.0 : 0.0);
    }
    a(3, i) = 1.0;
  }
  b(3) = 1.0;
  const Eigen::Vector3d pi = a.colPivHouseholderQr().solve(b);
  std::array<double, 3> out{};
  for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] = std::max(pi(i), 0.0);
  const double s = out[0] + out[1] + out[2];
  for (double& v : out) v /= s;
  return out;
}

double stationary_loss_rate(const MarkovParams& params) {
  const auto pi = stationary_distribution(params);
  return pi[0] * params.loss_prob[0] + pi[1] * params.loss_prob[1] + pi[2] * params.loss_prob[2];
}

MarkovParams markov_burst_params(double loss_rate, double mean_burst) {
  if (!(loss_rate > 0.0) || !(loss_rate < 1.0)) throw Error(ErrorCode::configuration, "markov loss rate must lie in (0, 1)");
  if (!(mean_burst >= 1.0)) throw Error(ErrorCode::configuration, "markov mean burst must be at least 1");
  const double e = 1.0 / mean_burst;
  const double denom = 1.0 / loss_rate - 1.0 - 0.8 * e;
  const double a = denom > 0.0 ? 0.6 * e / denom : 2.0;
  if (!(a <= 1.0)) {
    throw Error(ErrorCode::configuration, "loss rate and mean burst not reachable by the burst chain");
  }
  MarkovParams m;
  m.transition = {{{1.0 - a, a, 0.0}, {0.6 * e, 1.0 - e, 0.4 * e}, {0.0, 0.5, 0.5}}};
  m.loss_prob = {0.0, 1.0, 0.0};
  m.initial_state = 0;
  return m;
}

const std::vector<MarkovPreset>& markov_presets() {
  static const std::vector<MarkovPreset> presets{
      {"burst5", 0.05, 2.0},
      {"burst10", 0.10, 4.0},
      {"burst20", 0.20, 6.0},
  };
  return presets;
}

MarkovParams markov_preset(std::string_view name) {
  for (const auto& p : markov_presets()) {
    if (p.name == name) return markov_burst_params(p.loss_rate, p.mean_burst);
  }
  throw Error(ErrorCode::configuration, "unknown markov preset '" + std::string(name) + "'");
}

LossTrace parse_trace(std::string_view text) {
  LossTrace t;
  t.origin = TraceOrigin::file;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto line = trim(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    ++line_no;
    if (line == "0") {
      t.flags.push_back(false);
    } else if (line == "1") {
      t.flags.push_back(true);
    } else if (!line.empty()) {
      throw Error(ErrorCode::parse, "line " + std::to_string(line_no) + ": invalid token '" +
                                        std::string(line) + "' (expected 0 or 1)");
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  if (t.flags.empty()) throw Error(ErrorCode::parse, "trace holds no packets");
  return t;
}

std::string format_trace(const LossTrace& trace) {
  std::string out;
  out.reserve(trace.size() * 2);
  for (bool lost : trace.flags) {
    out.push_back(lost ? '1' : '0');
    out.push_back('\n');
  }
  return out;
}

LossTrace load_trace(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_trace(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_trace(const std::filesystem::path& path, const LossTrace& trace) {
  const auto text = format_trace(trace);
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

TraceStats trace_stats(const LossTrace& trace) {
  TraceStats s;
  s.frames = trace.size();
  std::size_t run = 0;
  const auto close = [&] {
    if (run == 0) return;
    ++s.burst_histogram[run];
    ++s.bursts;
    s.max_burst = std::max(s.max_burst, run);
    run = 0;
  };
  for (bool lost : trace.flags) {
    if (lost) {
      ++s.lost;
      ++run;
    } else {
      close();
    }
  }
  close();
  s.loss_rate = s.frames == 0 ? 0.0 : static_cast<double>(s.lost) / static_cast<double>(s.frames);
  s.mean_burst = s.bursts == 0 ? 0.0 : static_cast<double>(s.lost) / static_cast<double>(s.bursts);
  return s;
}

std::string trace_stats_csv(const TraceStats& stats) {
  std::ostringstream os;
  os.precision(10);
  os << "loss_rate,max_burst,mean_burst";
  for (std::size_t k = 1; k <= stats.max_burst; ++k) os << ",hist_" << k;
  os << '\n' << stats.loss_rate << ',' << stats.max_burst << ',' << stats.mean_burst;
  for (std::size_t k = 1; k <= stats.max_burst; ++k) {
    const auto it = stats.burst_histogram.find(k);
    os << ',' << (it == stats.burst_histogram.end() ? 0 : it->second);
  }
  os << '\n';
  return os.str();
}

ChannelSpec ChannelSpec::bernoulli(double p) {
  ChannelSpec s;
  s.kind = Kind::bernoulli;
  s.p = p;
  if (!(p >= 0.0) || p > 1.0) throw Error(ErrorCode::configuration, "channel loss probability outside [0, 1]");
  return s;
}

ChannelSpec ChannelSpec::parse(std::string_view text) {
  text = trim(text);
  if (text.empty() || text == "none") return ChannelSpec{};
  const auto colon = text.find(':');
  const auto kind = text.substr(0, colon);
  const auto arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (kind == "bernoulli") return bernoulli(parse_double(arg, "bernoulli loss probability"));
  if (kind == "markov") {
    ChannelSpec s;
    s.kind = Kind::markov;
    const auto comma = arg.find(',');
    if (comma == std::string_view::npos) {
      s.label = arg.empty() ? "burst10" : std::string(arg);
      s.markov = markov_preset(s.label);
    } else {
      const double r = parse_double(arg.substr(0, comma), "markov loss rate");
      const double mb = parse_double(arg.substr(comma + 1), "markov mean burst");
      s.label = std::string(arg);
      s.markov = markov_burst_params(r, mb);
    }
    return s;
  }
  if (kind == "trace") {
    if (arg.empty()) throw Error(ErrorCode::configuration, "trace channel needs a file path");
    ChannelSpec s;
    s.kind = Kind::file;
    s.path = std::string(arg);
    return s;
  }
  throw Error(ErrorCode::configuration, "unknown channel '" + std::string(text) +
                                            "' (expected none, bernoulli:<p>, markov:<preset> or trace:<path>)");
}

std::string ChannelSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::none: return "none";
    case Kind::bernoulli: os << "bernoulli:" << p; return os.str();
    case Kind::markov: return "markov:" + label;
    case Kind::file: return "trace:" + path.string();
  }
  return "none";
}

double ChannelSpec::expected_loss_rate() const {
  switch (kind) {
    case Kind::none: return 0.0;
    case Kind::bernoulli: return p;
    case Kind::markov: return stationary_loss_rate(markov);
    case Kind::file: return std::numeric_limits<double>::quiet_NaN();
  }
  return 0.0;
}

LossTrace make_trace(const ChannelSpec& spec, std::size_t len, std::uint64_t seed) {
  switch (spec.kind) {
    case ChannelSpec::Kind::none: return gen_bernoulli(0.0, len, seed);
    case ChannelSpec::Kind::bernoulli: return gen_bernoulli(spec.p, len, seed);
    case ChannelSpec::Kind::markov: return gen_markov3(spec.markov, len, seed);
    case ChannelSpec::Kind::file: {
      auto t = load_trace(spec.path);
      if (t.size() < len) {
        throw Error(ErrorCode::configuration, "trace " + spec.path.string() + " has " + std::to_string(t.size()) +
                                                  " packets but the stream needs " + std::to_string(len));
      }
      t.flags.resize(len);
      return t;
    }
  }
  return {};
}

}  // namespace glaris
