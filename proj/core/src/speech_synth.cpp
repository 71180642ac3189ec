#include "glaris/speech_synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace glaris {

namespace {

constexpr double kFs = kSampleRate;

struct Vowel {
  double f1, f2, f3;
};
constexpr std::array<Vowel, 5> kVowels{{
    {730, 1090, 2440},
    {270, 2290, 3010},
    {300, 870, 2240},
    {530, 1840, 2480},
    {570, 840, 2410},
}};

void resonate(std::vector<double>& x, double freq, double bw) {
  const double r = std::exp(-std::numbers::pi * bw / kFs);
  const double th = 2.0 * std::numbers::pi * freq / kFs;
  const double a1 = 2.0 * r * std::cos(th);
  const double a2 = r * r;
  double y1 = 0.0;
  double y2 = 0.0;
  for (double& v : x) {
    const double y = (1.0 - r) * v + a1 * y1 - a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

std::size_t samples_for(double seconds) { return static_cast<std::size_t>(seconds * kFs); }

}  // namespace

std::vector<double> synthesize_utterance(Rng& rng, double seconds) {
  const std::size_t total = samples_for(seconds);
  std::vector<double> out;
  out.reserve(total + samples_for(1.0));
  const double f0_base = rng.uniform(90.0, 220.0);

  while (out.size() < total) {
    if (rng.uniform() < 0.6) {
      const std::size_t len = samples_for(rng.uniform(0.04, 0.12));
      std::vector<double> x(len);
      for (double& v : x) v = rng.normal();
      resonate(x, rng.uniform(2500.0, 5000.0), 800.0);
      for (std::size_t i = 0; i < len; ++i) {
        const double w = len > 1 ? 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                                                       static_cast<double>(len - 1))
                                 : 1.0;
        out.push_back(x[i] * w * 0.3);
      }
    }

    const std::size_t len = samples_for(rng.uniform(0.08, 0.3));
    const Vowel& vowel = kVowels[rng.below(kVowels.size())];
    const double sweep = std::numbers::pi * rng.uniform(0.5, 2.0);
    std::vector<double> x(len, 0.0);
    double phase = 0.0;
    double prev_floor = 0.0;
    double glottal = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double pos = len > 1 ? static_cast<double>(i) / static_cast<double>(len - 1) : 0.0;
      const double f0 = f0_base * (1.0 + 0.1 * std::sin(sweep * pos)) * (1.0 + 0.01 * rng.normal());
      phase += f0 / kFs;
      const double fl = std::floor(phase);
      const double pulse = fl - prev_floor;
      prev_floor = fl;
      glottal = pulse + 0.97 * glottal;
      x[i] = glottal;
    }
    resonate(x, vowel.f1, 80.0);
    resonate(x, vowel.f2, 100.0);
    resonate(x, vowel.f3, 150.0);
    const double ramp = 0.02 * kFs;
    for (std::size_t i = 0; i < len; ++i) {
      const double edge = static_cast<double>(std::min(i, len - i));
      out.push_back(x[i] * std::min(1.0, edge / ramp));
    }

    if (rng.uniform() < 0.3) {
      const std::size_t pause = samples_for(rng.uniform(0.05, 0.4));
      for (std::size_t i = 0; i < pause; ++i) out.push_back(0.001 * rng.normal());
    }
  }
  out.resize(total);
  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (double& v : out) v *= 0.5 / peak;
  }
  return out;
}

PcmClip synthesize_speech(double seconds, std::uint64_t seed, double utterance_seconds) {
  Rng rng(seed, 0x5EEC);
  PcmClip clip;
  const std::size_t total = samples_for(seconds);
  clip.samples.reserve(total);
  while (clip.samples.size() < total) {
    const double remaining = static_cast<double>(total - clip.samples.size()) / kFs;
    const auto utt = synthesize_utterance(rng, std::min(utterance_seconds, remaining));
    if (utt.empty()) break;
    for (double v : utt) clip.samples.push_back(denormalize(v));
  }
  clip.samples.resize(total);
  return clip;
}

}  // namespace glaris
