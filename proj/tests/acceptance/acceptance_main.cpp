#include <fmt/core.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "glaris/audio_frontend.hpp"
#include "glaris/channel_sim.hpp"
#include "glaris/container.hpp"
#include "glaris/entropy_coder.hpp"
#include "glaris/experiment.hpp"
#include "glaris/receiver.hpp"
#include "glaris/rng.hpp"
#include "glaris/sender.hpp"
#include "glaris/speech_synth.hpp"
#include "glaris/table_cache.hpp"
#include "glaris/transform_codec.hpp"
#include "test_support.hpp"

using namespace glaris;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

double latent_mse(const LatentCode& a, const LatentCode& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.coeffs[i] - b.coeffs[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

// One-sided paired t statistic for mean(x - y) > 0.
struct Paired {
  double mean = 0.0;
  double t = 0.0;
  std::size_t n = 0;
};

Paired paired_t(const std::vector<double>& x, const std::vector<double>& y) {
  Paired r;
  r.n = x.size();
  if (r.n < 2) return r;
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < r.n; ++i) {
    const double d = x[i] - y[i];
    s += d;
    s2 += d * d;
  }
  const double n = static_cast<double>(r.n);
  r.mean = s / n;
  const double var = (s2 - n * r.mean * r.mean) / (n - 1.0);
  r.t = var > 0.0 ? r.mean / std::sqrt(var / n) : (r.mean > 0.0 ? INFINITY : 0.0);
  return r;
}

PcmClip clip_prefix(const PcmClip& clip, std::size_t frames) {
  PcmClip c = clip;
  c.samples.resize(std::min(c.samples.size(), frames * kFrameSize));
  return c;
}

// ---------------------------------------------------------------------------

Outcome ac1() {
  const double l0 = lambda_from_q(0);
  const double l63 = lambda_from_q(63);
  const double slope = (std::log(l63) - std::log(l0)) / 63.0;
  double resid = 0.0;
  for (int q = 0; q < 64; ++q) {
    resid = std::max(resid, std::fabs(std::log(lambda_from_q(q)) - (std::log(l0) + slope * q)));
  }
  const bool ok = std::fabs(l0 - 0.002) <= 1e-12 && std::fabs(l63 - 0.07) <= 1e-12 && resid <= 1e-12;
  return {ok, fmt::format("lambda(0)={:.15g} lambda(63)={:.15g} max ln residual={:.3g}", l0, l63, resid)};
}

Outcome ac2() {
  const auto& model = fixtures::reference_model(6);
  const auto clip = clip_prefix(fixtures::eval_clip(), 100);
  bool ok = true;
  std::string detail;
  for (std::size_t q : {1u, 2u, 4u, 6u}) {
    for (std::size_t n : {1u, 2u}) {
      FecConfig fec;
      fec.stages = q;
      fec.offsets = FecConfig::default_offsets(n);
      const auto packets = encode_packets(model, clip, 32, fec);
      const auto rep = account_stream(packets, fec);
      const double expect = 0.5 * static_cast<double>(q * n);
      const bool hit = rep.steady_redundant_kbps == expect && redundancy_bitrate(fec) == expect;
      ok = ok && hit;
      detail += fmt::format("{}Q{}N{}={}", detail.empty() ? "" : " ", q, n, rep.steady_redundant_kbps);
    }
  }
  return {ok, detail + " kbps"};
}

Outcome ac3() {
  const auto& model = fixtures::reference_model(2);
  const std::size_t frames = 100000;
  const auto packets = fixtures::tiled_stream(model, frames, 40, FecConfig{});
  const auto trace = gen_bernoulli(0.3, frames, 2024);
  ReceiverReport rep;
  receive_all(model, ReceiverConfig{}, fixtures::apply_losses(packets, trace.flags), &rep);
  const double n = static_cast<double>(rep.lost_frames);
  const double frac = static_cast<double>(rep.lost_frames - rep.z_recovered) / n;
  const double sigma = std::sqrt(0.09 * 0.91 / n);
  const bool ok = std::fabs(frac - 0.09) <= 3.0 * sigma;
  return {ok, fmt::format("lost={} unrecoverable fraction={:.5f} (0.09 +/- {:.5f})", rep.lost_frames, frac,
                          3.0 * sigma)};
}

Outcome ac4() {
  const auto& model = fixtures::reference_model(2);
  const std::size_t frames = 200;
  const FecConfig fec;
  const auto stream = encode_stream(model, clip_prefix(fixtures::eval_clip(), frames), 32, fec);
  ReceiverConfig cfg;
  cfg.playout_delay = 13;
  cfg.tables = std::make_shared<TableCache>(model);

  std::size_t checked = 0, high = 0, uncovered = 0, trials = 0;
  for (std::size_t b = 1; b <= 13; ++b) {
    for (std::size_t s = 0; s + b <= frames; ++s) {
      std::vector<bool> lost(frames, false);
      for (std::size_t t = s; t < s + b; ++t) lost[t] = true;
      const auto out = receive_all(model, cfg, fixtures::apply_losses(stream.packets, lost));
      ++trials;
      for (std::size_t t = s; t < s + b; ++t) {
        bool carrier = false;
        for (auto k : fec.offsets) carrier = carrier || (t + k < frames && !lost[t + k]);
        if (!carrier) {
          ++uncovered;
          continue;
        }
        ++checked;
        high += out[t].path == DecodePath::plc_high;
      }
    }
  }
  std::size_t long_bursts = 0, long_hit = 0;
  for (std::size_t s = 0; s + 14 <= frames; ++s) {
    std::vector<bool> lost(frames, false);
    for (std::size_t t = s; t < s + 14; ++t) lost[t] = true;
    const auto out = receive_all(model, cfg, fixtures::apply_losses(stream.packets, lost));
    ++long_bursts;
    bool any = false;
    for (std::size_t t = s; t < s + 14; ++t) any = any || out[t].path == DecodePath::plc_low;
    long_hit += any;
  }
  const bool ok = checked > 0 && high == checked && long_hit == long_bursts;
  return {ok, fmt::format("{} bursts, plc_high {}/{} lost frames ({} tail frames without an in-stream carrier), "
                          "length-14 bursts with plc_low {}/{}",
                          trials, high, checked, uncovered, long_hit, long_bursts)};
}

Outcome ac5() {
  Rng rng(5150);
  const int frames = 10000;
  const std::size_t dims = 320;
  double bits = 0.0, ce = 0.0;
  std::size_t bypass = 0, mismatches = 0;
  for (int n = 0; n < frames; ++n) {
    const double step = step_for_q(static_cast<int>(rng.below(64)));
    GaussianParams th;
    QuantizedLatent yq;
    for (std::size_t d = 0; d < dims; ++d) {
      const double sigma = step * std::exp(rng.uniform(std::log(0.05), std::log(40.0)));
      const double mu = step * rng.uniform(-20.0, 20.0);
      th.mu.push_back(mu);
      th.sigma.push_back(sigma);
      int v = static_cast<int>(std::lround((mu + sigma * rng.normal()) / step));
      if (rng.bernoulli(0.002)) {
        v = static_cast<int>(rng.below(32768 - 256)) + 256;
        if (rng.bernoulli(0.5)) v = -v;
        if (v == -32767 && rng.bernoulli(0.5)) v = -32768;
      }
      yq.indices.push_back(v);
    }
    const auto tables = build_cdf(th, step);
    for (std::size_t d = 0; d < dims; ++d) {
      const int v = yq.indices[d];
      ce -= std::log2(tables.value_count(d, v) / 65536.0);
      if (v < -tables.half_width() || v > tables.half_width()) {
        ce += 16.0;
        ++bypass;
      }
    }
    const auto stream = encode_frame(yq, tables);
    bits += static_cast<double>(measure_rate(stream));
    const auto back = decode_frame(stream, tables, dims);
    if (!back || back->indices != yq.indices) ++mismatches;
  }
  bits /= frames;
  ce /= frames;

  std::ifstream in(fixtures::data_dir() / "golden" / "range_coder.txt");
  std::string line;
  std::size_t golden = 0, golden_ok = 0;
  int half = 0;
  std::vector<std::vector<std::uint32_t>> counts;
  QuantizedLatent syms;
  std::size_t expect_bits = 0;
  while (std::getline(in, line)) {
    std::istringstream ss(line);
    std::string tag;
    ss >> tag;
    if (tag == "case") {
      std::string name;
      std::size_t dims_case = 0;
      ss >> name >> half >> dims_case;
      counts.clear();
      syms.indices.clear();
    } else if (tag == "counts") {
      counts.emplace_back();
      std::uint32_t c;
      while (ss >> c) counts.back().push_back(c);
    } else if (tag == "symbols") {
      int v;
      while (ss >> v) syms.indices.push_back(v);
    } else if (tag == "bits") {
      ss >> expect_bits;
    } else if (tag == "bytes") {
      std::string hex;
      ss >> hex;
      std::vector<std::uint32_t> map(counts.size());
      for (std::size_t i = 0; i < map.size(); ++i) map[i] = static_cast<std::uint32_t>(i);
      const CdfTable t(half, counts, map);
      const auto s = encode_frame(syms, t);
      std::string got;
      for (auto byte : s.bytes) got += fmt::format("{:02x}", byte);
      if (got.empty()) got = "-";
      ++golden;
      golden_ok += got == hex && s.bit_length == expect_bits;
    }
  }
  const bool ok = mismatches == 0 && bits <= ce + 16.0 && golden > 0 && golden_ok == golden;
  return {ok, fmt::format("{} frames, {} bypass symbols, {} mismatches, mean {:.2f} bits vs cross-entropy {:.2f}; "
                          "golden fixtures {}/{}",
                          frames, bypass, mismatches, bits, ce, golden_ok, golden)};
}

Outcome ac6() {
  const auto& model = fixtures::reference_model(2);
  const std::size_t frames = 500;
  const auto stream = encode_stream(model, clip_prefix(fixtures::eval_clip(), frames), 32, FecConfig{});
  ReceiverConfig cfg;
  cfg.tables = std::make_shared<TableCache>(model);
  const auto clean = receive_all(model, cfg, fixtures::apply_losses(stream.packets, std::vector<bool>(frames)));
  std::size_t compared = 0, identical = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto trace = gen_bernoulli(0.3, frames, 900 + seed);
    const auto out = receive_all(model, cfg, fixtures::apply_losses(stream.packets, trace.flags));
    for (std::size_t t = 0; t < frames; ++t) {
      if (!out[t].packet_received || !out[t].z_available) continue;
      ++compared;
      identical += out[t].path == DecodePath::entropy && out[t].y_hat == clean[t].y_hat;
    }
  }
  return {compared > 0 && identical == compared,
          fmt::format("100 traces, {}/{} received frames bit-identical", identical, compared)};
}

Outcome ac7() {
  CodecModel model = fixtures::reference_model(2);
  for (std::size_t i = 0; i < model.d_y; ++i) {
    model.tokens.m_high[i] = 0.001 * static_cast<double>(i % 3 + 1);
    model.tokens.m_low[i] = -0.0015 + 0.0005 * static_cast<double>(i % 2);
  }
  const int q = 32;
  const double step = step_for_q(q);
  FecConfig plain;
  plain.offsets.clear();
  StreamEncoder enc(model, q, plain);
  const auto source = frame_encode(clip_prefix(fixtures::eval_clip(), 203), model.d_l);
  std::vector<Packet> base;
  std::vector<LatentCode> y_q;
  for (std::size_t t = 0; t < 3; ++t) {
    base.push_back(enc.encode(source[200 + t]));
    y_q.push_back(dequantize(enc.last_symbols(), step));
  }

  ReceiverConfig cfg;
  cfg.playout_delay = 2;
  std::size_t combos = 0, frames_ok = 0, frames = 0;
  for (unsigned loss = 0; loss < 8; ++loss) {
    for (unsigned avail = 0; avail < 8; ++avail) {
      if ((avail & ~loss) != 0) continue;
      std::vector<bool> lost(3);
      for (std::size_t t = 0; t < 3; ++t) lost[t] = (loss >> t) & 1u;
      std::vector<std::vector<std::uint8_t>> packets(3);
      std::vector<Packet> built = base;
      bool realizable = true;
      for (std::size_t t = 0; t < 3; ++t) {
        if (!((avail >> t) & 1u)) continue;
        std::size_t u = t + 1;
        while (u < 3 && lost[u]) ++u;
        if (u >= 3) {
          realizable = false;
          break;
        }
        ZBlock b = base[t].z_blocks.front();
        b.offset = static_cast<std::uint8_t>(u - t);
        built[u].z_blocks.push_back(b);
      }
      if (!realizable) continue;
      for (std::size_t t = 0; t < 3; ++t) {
        std::sort(built[t].z_blocks.begin(), built[t].z_blocks.end(),
                  [](const ZBlock& a, const ZBlock& b) { return a.offset < b.offset; });
        packets[t] = serialize(built[t]);
      }
      ++combos;
      const auto out = receive_all(model, cfg, fixtures::apply_losses(packets, lost));

      std::vector<LatentCode> history;
      for (std::size_t t = 0; t < 3; ++t) {
        LatentCode expect;
        DecodePath path;
        if (!lost[t]) {
          expect = y_q[t];
          path = DecodePath::entropy;
        } else {
          const auto ctx = predict_context(cfg.context, history, static_cast<std::uint32_t>(t), cfg.lpc);
          const bool has_z = (avail >> t) & 1u;
          const auto theta =
              has_z ? hyper_synthesis(model, decode_side_info(model, base[t].z_blocks.front().side),
                                      ctx ? &*ctx : nullptr, false)
                    : hyper_synthesis(model, {}, ctx ? &*ctx : nullptr, true);
          const auto f_plc = plc_predict(theta, static_cast<std::uint32_t>(t));
          const auto& token = has_z ? model.tokens.m_high : model.tokens.m_low;
          expect.frame_index = static_cast<std::uint32_t>(t);
          for (std::size_t i = 0; i < model.d_y; ++i) expect.coeffs.push_back(f_plc.coeffs[i] + token[i]);
          path = has_z ? DecodePath::plc_high : DecodePath::plc_low;
        }
        ++frames;
        frames_ok += out[t].path == path && out[t].y_hat == expect;
        history.push_back(out[t].y_hat);
        while (history.size() > std::max<std::size_t>(cfg.lpc.history_frames, 1)) history.erase(history.begin());
      }
    }
  }
  return {frames_ok == frames && combos > 0,
          fmt::format("{} realizable loss/availability combinations, {}/{} frames match", combos, frames_ok,
                      frames)};
}

Outcome ac8() {
  bool ok = true;
  std::string detail;
  for (double p : {0.05, 0.1, 0.3}) {
    const auto tr = gen_bernoulli(p, 100000, 17);
    const double rate = trace_stats(tr).loss_rate;
    const double tol = 3.0 * std::sqrt(p * (1 - p) / 1e5);
    ok = ok && std::fabs(rate - p) <= tol;
    detail += fmt::format("bernoulli {}: {:.5f}; ", p, rate);
  }
  for (const auto& preset : markov_presets()) {
    const auto params = markov_preset(preset.name);
    const double analytic = stationary_loss_rate(params);
    const double rate = trace_stats(gen_markov3(params, 1000000, 23)).loss_rate;
    ok = ok && std::fabs(rate - analytic) <= 0.01;
    detail += fmt::format("{}: {:.5f} vs {:.5f}; ", preset.name, rate, analytic);
  }
  std::size_t files = 0, round_trips = 0;
  for (const auto& entry : std::filesystem::directory_iterator(fixtures::data_dir() / "traces")) {
    std::ifstream in(entry.path());
    std::stringstream text;
    text << in.rdbuf();
    const auto trace = parse_trace(text.str());
    ++files;
    round_trips += format_trace(trace) == text.str() && parse_trace(format_trace(trace)).flags == trace.flags;
  }
  ok = ok && files > 0 && round_trips == files;
  detail += fmt::format("sample traces round-tripped {}/{}", round_trips, files);
  return {ok, detail};
}

Outcome ac9() {
  const auto& model = fixtures::reference_model(2);
  const auto clip = synthesize_speech(600.0, 2024);
  PointSpec spec;
  spec.channel = ChannelSpec::bernoulli(0.1);
  spec.seed = 99;
  spec.strategy = PlcStrategy::side_info;
  const auto side = run_point(model, clip, spec);
  spec.strategy = PlcStrategy::context_only;
  const auto ctx = run_point(model, clip, spec);
  spec.strategy = PlcStrategy::zero_fill;
  const auto zero = run_point(model, clip, spec);
  if (side.trace.flags != ctx.trace.flags || side.trace.flags != zero.trace.flags) {
    return {false, "strategies saw different traces"};
  }

  std::vector<double> high_side, high_ctx, lost_ctx, lost_zero;
  for (std::size_t t = 0; t < side.frames.size(); ++t) {
    if (side.frames[t].path == DecodePath::entropy) continue;
    const double e_ctx = latent_mse(ctx.frames[t].y_hat, side.reference[t]);
    lost_ctx.push_back(e_ctx);
    lost_zero.push_back(latent_mse(zero.frames[t].y_hat, side.reference[t]));
    if (side.frames[t].path == DecodePath::plc_high) {
      high_side.push_back(latent_mse(side.frames[t].y_hat, side.reference[t]));
      high_ctx.push_back(e_ctx);
    }
  }
  const auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? NAN : s / static_cast<double>(v.size());
  };
  const auto g1 = paired_t(high_ctx, high_side);
  const auto g2 = paired_t(lost_zero, lost_ctx);
  // One-sided 1% level.
  const double t_crit = 2.326;
  const bool ok = g1.mean > 0 && g2.mean > 0 && g1.t > t_crit && g2.t > t_crit;
  return {ok, fmt::format("{:.0f} s corpus; latent MSE plc_high {:.4g} < plc_low {:.4g} < zero_fill {:.4g}; "
                          "paired t {:.1f} (n={}) and {:.1f} (n={})",
                          clip.seconds(), mean(high_side), mean(lost_ctx), mean(lost_zero), g1.t, g1.n, g2.t,
                          g2.n)};
}

Outcome ac10() {
  const auto& model = fixtures::reference_model(2);
  std::vector<PointSpec> points;
  for (int q : {0, 8, 16, 24, 32, 40, 48, 56, 63}) {
    PointSpec p;
    p.q_lambda = q;
    points.push_back(p);
  }
  const auto rows = run_sweep(model, fixtures::eval_clip(), points, 1);
  bool ok = true;
  std::string detail;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0) {
      ok = ok && rows[i].bitrate_total_kbps < rows[i - 1].bitrate_total_kbps;
      ok = ok && rows[i].wave.mse >= rows[i - 1].wave.mse;
    }
    detail += fmt::format("{}q{}:{:.2f}kbps/{:.3g}", i ? " " : "", rows[i].q_lambda, rows[i].bitrate_total_kbps,
                          rows[i].wave.mse);
  }
  return {ok, detail};
}

Outcome ac11() {
  const auto& model = fixtures::reference_model(2);
  const auto& clip = fixtures::eval_clip();
  PointSpec spec;
  spec.channel = ChannelSpec::bernoulli(0.1);
  const auto start = std::chrono::steady_clock::now();
  const auto r = run_point(model, clip, spec);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rtf = clip.seconds() / elapsed;
  return {elapsed < 60.0 && r.decoded.size() == clip.size(),
          fmt::format("{:.0f} s of audio in {:.2f} s, real-time factor {:.1f}", clip.seconds(), elapsed, rtf)};
}

Outcome ac12() {
  const auto& model = fixtures::reference_model(2);
  const auto clip = clip_prefix(fixtures::eval_clip(), 500);
  std::vector<PointSpec> points;
  for (int q : {16, 40}) {
    for (const char* ch : {"none", "bernoulli:0.1", "markov:burst10"}) {
      PointSpec p;
      p.q_lambda = q;
      p.channel = ChannelSpec::parse(ch);
      p.seed = 7;
      points.push_back(p);
    }
  }
  const auto csv_a = metrics_csv(run_sweep(model, clip, points, 2));
  const auto csv_b = metrics_csv(run_sweep(model, clip, points, 1));
  const auto a = run_point(model, clip, points[5]);
  const auto b = run_point(model, clip, points[5]);
  const bool csv_same = csv_a == csv_b;
  const bool container_same = serialize_container(a.container) == serialize_container(b.container);
  const bool wav_same = serialize_wav(a.decoded) == serialize_wav(b.decoded);
  return {csv_same && container_same && wav_same,
          fmt::format("csv {} ({} bytes), container {}, wav {}", csv_same ? "identical" : "differs", csv_a.size(),
                      container_same ? "identical" : "differs", wav_same ? "identical" : "differs")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {"AC1", "rate-control schedule", 1, ac1},
      {"AC2", "redundancy accounting", 10, ac2},
      {"AC3", "side information loss follows p^N", 60, ac3},
      {"AC4", "burst recovery", 30, ac4},
      {"AC5", "entropy coder soundness", 60, ac5},
      {"AC6", "error propagation containment", 120, ac6},
      {"AC7", "latent composition", 0, ac7},
      {"AC8", "channel model fidelity", 0, ac8},
      {"AC9", "concealment quality ordering", 120, ac9},
      {"AC10", "monotone rate-distortion", 120, ac10},
      {"AC11", "real-time factor", 60, ac11},
      {"AC12", "determinism", 0, ac12},
  };
  std::vector<std::string> only(argv + 1, argv + argc);

  // Warm shared fixtures.
  fixtures::reference_model(2);

  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.detail += fmt::format("; over the {:.0f} s budget", c.budget_s);
    }
    failed += !o.pass;
    fmt::print("[{}] {} {} ({:.2f} s): {}\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs, o.detail);
    std::fflush(stdout);
  }
  fmt::print("{} criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
