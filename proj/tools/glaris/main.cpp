#include <CLI11.hpp>
#include <fmt/core.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "glaris/audio_frontend.hpp"
#include "glaris/channel_sim.hpp"
#include "glaris/container.hpp"
#include "glaris/error.hpp"
#include "glaris/experiment.hpp"
#include "glaris/hyperprior.hpp"
#include "glaris/model_io.hpp"
#include "glaris/packetizer.hpp"
#include "glaris/sender.hpp"
#include "glaris/speech_synth.hpp"

namespace fs = std::filesystem;
using namespace glaris;

namespace {

struct Options {
  std::vector<fs::path> input;
  fs::path model;
  fs::path stream;
  int q_lambda = 32;
  std::size_t fec_q = 2;
  std::optional<std::size_t> fec_n;
  std::vector<std::uint32_t> fec_offsets;
  std::string channel = "none";
  std::uint64_t seed = 1;
  std::size_t playout_delay = 13;
  std::string context = "lpc";
  std::string plc = "side_info";
  std::size_t threads = 0;

  fs::path out_model;
  fs::path out_stream;
  fs::path out_wav;
  fs::path out_csv;
  fs::path out_report;
  fs::path out_trace;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

FecConfig fec_config(const Options& o) {
  FecConfig fec;
  fec.stages = o.fec_q;
  if (!o.fec_offsets.empty()) {
    if (o.fec_n && *o.fec_n != o.fec_offsets.size()) {
      throw Error(ErrorCode::configuration, fmt::format("fec_n ({}) does not match the {} fec_offsets entries",
                                                        *o.fec_n, o.fec_offsets.size()));
    }
    fec.offsets = o.fec_offsets;
  } else {
    fec.offsets = FecConfig::default_offsets(o.fec_n.value_or(2));
  }
  fec.validate();
  return fec;
}

PointSpec point_spec(const Options& o) {
  if (o.q_lambda < 0 || o.q_lambda > 63) {
    throw Error(ErrorCode::configuration, fmt::format("q_lambda must lie in 0..63, got {}", o.q_lambda));
  }
  PointSpec p;
  p.q_lambda = o.q_lambda;
  p.fec = fec_config(o);
  p.channel = ChannelSpec::parse(o.channel);
  p.seed = o.seed;
  p.playout_delay = o.playout_delay;
  p.context = parse_context_mode(o.context);
  p.strategy = parse_plc_strategy(o.plc);
  return p;
}

PcmClip load_input(const Options& o) {
  if (o.input.empty()) throw Error(ErrorCode::configuration, "input: no files given");
  const auto clips = load_corpus(o.input);
  if (clips.empty()) throw Error(ErrorCode::empty_input, "input: no WAV files found");
  return concatenate(clips);
}

CodecModel require_model(const Options& o) {
  if (o.model.empty()) throw Error(ErrorCode::configuration, "model: path required");
  return load_model(o.model);
}

void print_bitrate(const BitrateReport& r) {
  fmt::print("frames {} ({:.2f} s)\n", r.packets, r.seconds);
  fmt::print("source {:.3f} kbps, side info {:.3f} kbps, redundant {:.3f} kbps (steady state {:.3f})\n",
             r.source_kbps, r.sideinfo_kbps, r.redundant_kbps, r.steady_redundant_kbps);
  fmt::print("total {:.3f} kbps, on the wire {:.3f} kbps\n", r.total_kbps, r.wire_kbps);
}

void print_row(const MetricsRow& r) {
  fmt::print("channel {} measured loss {:.4f}\n", r.channel, r.loss_rate);
  fmt::print("bitrate total {:.3f} kbps (source {:.3f}, fec {:.3f})\n", r.bitrate_total_kbps,
             r.bitrate_src_kbps, r.bitrate_fec_kbps);
  fmt::print("snr {:.2f} dB, segmental {:.2f} dB, q10 {:.2f} dB, mse {:.4g}\n", r.wave.snr_db,
             r.wave.seg_snr_db, r.wave.snr_q10_db, r.wave.mse);
  fmt::print("paths entropy {} plc_high {} plc_low {} zero_fill {}, side info recovered {:.4f}\n",
             r.receiver.count(DecodePath::entropy), r.receiver.count(DecodePath::plc_high),
             r.receiver.count(DecodePath::plc_low), r.receiver.count(DecodePath::zero_fill),
             r.receiver.z_recovery_rate());
}

int cmd_calibrate(const Options& o, std::size_t stages, std::size_t d_z) {
  if (o.out_model.empty()) throw Error(ErrorCode::configuration, "out_model: path required");
  if (o.input.empty()) throw Error(ErrorCode::configuration, "input: no files given");
  const auto clips = load_corpus(o.input);
  if (clips.empty()) throw Error(ErrorCode::empty_input, "input: no WAV files found");
  CalibrationOptions opts;
  opts.d_z = d_z;
  const auto result = calibrate(corpus_latents(clips), stages, o.seed, opts);
  save_model(o.out_model, result.model);
  fmt::print("model {} stages, checksum {:08x}, codebooks {:08x}\n", result.model.stages(),
             model_checksum(result.model), result.model.books.checksum());
  return 0;
}

int cmd_encode(const Options& o) {
  if (o.out_stream.empty()) throw Error(ErrorCode::configuration, "out_stream: path required");
  const auto model = require_model(o);
  const auto spec = point_spec(o);
  const auto clip = load_input(o);
  const auto packets = encode_packets(model, clip, spec.q_lambda, spec.fec);
  StreamContainer c;
  c.header.model_checksum = model_checksum(model);
  c.header.q_lambda = static_cast<std::uint8_t>(spec.q_lambda);
  c.header.fec = spec.fec;
  c.header.sample_count = clip.size();
  for (const auto& p : packets) c.packets.push_back(serialize(p));
  save_container(o.out_stream, c);
  print_bitrate(account_stream(packets, spec.fec));
  return 0;
}

int cmd_decode(const Options& o) {
  if (o.stream.empty()) throw Error(ErrorCode::configuration, "stream: path required");
  if (o.out_wav.empty()) throw Error(ErrorCode::configuration, "out_wav: path required");
  const auto model = require_model(o);
  const auto c = load_container(o.stream);
  if (c.header.model_checksum != model_checksum(model)) {
    throw Error(ErrorCode::configuration, "stream was encoded with a different model");
  }
  ReceiverConfig rc;
  rc.playout_delay = o.playout_delay;
  rc.context = parse_context_mode(o.context);
  rc.strategy = parse_plc_strategy(o.plc);
  LossTrace clean;
  clean.flags.assign(c.packets.size(), false);
  ReceiverReport rep;
  const auto frames = simulate_stream(model, c, clean, rc, &rep);
  write_wav(o.out_wav, render(frames, c.header.sample_count));
  fmt::print("decoded {} frames, {} concealed\n", rep.frames, rep.lost_frames);
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto model = require_model(o);
  const auto spec = point_spec(o);
  const auto clip = load_input(o);
  const auto res = o.stream.empty() ? run_point(model, clip, spec)
                                    : evaluate_stream(model, clip, load_container(o.stream), spec);
  if (!o.out_wav.empty()) write_wav(o.out_wav, res.decoded);
  if (!o.out_csv.empty()) write_text(o.out_csv, metrics_csv({res.row}));
  if (!o.out_report.empty()) write_text(o.out_report, receiver_report_csv(res.row.receiver, res.row.latent_mse));
  if (!o.out_trace.empty()) save_trace(o.out_trace, res.trace);
  if (!o.out_stream.empty()) save_container(o.out_stream, res.container);
  print_row(res.row);
  return 0;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

int cmd_sweep(const Options& o, const std::string& axis, const std::vector<std::string>& values) {
  if (values.empty()) throw Error(ErrorCode::configuration, "values: sweep axis is empty");
  const auto model = require_model(o);
  const auto base = point_spec(o);
  const auto clip = load_input(o);
  std::vector<PointSpec> points;
  for (const auto& v : values) {
    PointSpec p = base;
    try {
      if (axis == "q_lambda") {
        p.q_lambda = std::stoi(v);
        if (p.q_lambda < 0 || p.q_lambda > 63) throw Error(ErrorCode::configuration, "out of range");
      } else if (axis == "loss") {
        p.channel = ChannelSpec::bernoulli(std::stod(v));
      } else if (axis == "channel") {
        p.channel = ChannelSpec::parse(v);
      } else if (axis == "fec") {
        const auto parts = split(v, 'x');
        if (parts.size() != 2) throw Error(ErrorCode::configuration, "expected QxN");
        p.fec.stages = std::stoul(parts[0]);
        p.fec.offsets = FecConfig::default_offsets(std::stoul(parts[1]));
        p.fec.validate();
      } else {
        throw Error(ErrorCode::configuration, "axis must be q_lambda, loss, channel or fec");
      }
    } catch (const std::logic_error&) {
      throw Error(ErrorCode::configuration, fmt::format("values: cannot read '{}' for axis {}", v, axis));
    } catch (const Error& e) {
      throw Error(ErrorCode::configuration, fmt::format("values: '{}' for axis {}: {}", v, axis, e.what()));
    }
    points.push_back(p);
  }
  const auto csv = metrics_csv(run_sweep(model, clip, points, o.threads));
  if (o.out_csv.empty()) {
    fmt::print("{}", csv);
  } else {
    write_text(o.out_csv, csv);
  }
  return 0;
}

int cmd_trace_stats(const fs::path& trace, const Options& o) {
  if (trace.empty()) throw Error(ErrorCode::configuration, "trace: path required");
  const auto csv = trace_stats_csv(trace_stats(load_trace(trace)));
  if (o.out_csv.empty()) {
    fmt::print("{}", csv);
  } else {
    write_text(o.out_csv, csv);
  }
  return 0;
}

int cmd_gen_trace(const Options& o, std::size_t frames) {
  if (o.out_trace.empty()) throw Error(ErrorCode::configuration, "out_trace: path required");
  const auto trace = make_trace(ChannelSpec::parse(o.channel), frames, o.seed);
  save_trace(o.out_trace, trace);
  const auto stats = trace_stats(trace);
  fmt::print("{} packets, loss rate {:.4f}, mean burst {:.3f}\n", stats.frames, stats.loss_rate, stats.mean_burst);
  return 0;
}

int cmd_synth_corpus(const fs::path& dir, std::size_t count, double seconds, std::uint64_t seed) {
  if (dir.empty()) throw Error(ErrorCode::configuration, "out_dir: path required");
  fs::create_directories(dir);
  for (std::size_t i = 0; i < count; ++i) {
    const auto path = dir / fmt::format("utt_{:03d}.wav", i);
    write_wav(path, synthesize_speech(seconds, seed + i));
    fmt::print("{}\n", path.string());
  }
  return 0;
}

void add_codec(CLI::App* app, Options& o) {
  app->add_option("--q_lambda", o.q_lambda, "Rate index 0..63")->capture_default_str();
  app->add_option("--fec_q", o.fec_q, "RVQ stages carried per side information block")->capture_default_str();
  app->add_option("--fec_n", o.fec_n, "Backup copies (default offsets)");
  app->add_option("--fec_offsets", o.fec_offsets, "Backup offsets in frames, increasing")->delimiter(',');
}

void add_receiver(CLI::App* app, Options& o) {
  app->add_option("--playout_delay", o.playout_delay, "Playout delay D in frames")->capture_default_str();
  app->add_option("--context", o.context, "Concealment context: none, previous, lpc")->capture_default_str();
  app->add_option("--plc", o.plc, "Concealment strategy: side_info, context_only, zero_fill")
      ->capture_default_str();
}

void add_channel(CLI::App* app, Options& o) {
  app->add_option("--channel", o.channel, "none | bernoulli:p | markov:preset | markov:rate,burst | trace:path")
      ->capture_default_str();
  app->add_option("--seed", o.seed, "Channel seed")->capture_default_str();
}

// Fills options not given on the command line from a flat TOML file.
void apply_config(const fs::path& path, CLI::App* sub) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot read config " + path.string());
  for (const auto& item : CLI::ConfigTOML().from_config(in)) {
    if (!item.parents.empty()) {
      throw Error(ErrorCode::configuration, "config: tables are not supported ([" + item.parents.front() + "])");
    }
    auto* opt = sub->get_option_no_throw("--" + item.name);
    if (opt == nullptr || item.name == "config") {
      throw Error(ErrorCode::configuration, "config: unknown field '" + item.name + "' for " + sub->get_name());
    }
    if (opt->count() > 0) continue;
    opt->add_result(item.inputs);
    opt->run_callback();
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Glaris speech codec with side-information packet loss concealment"};
  app.require_subcommand(1);
  Options o;

  auto* cal = app.add_subcommand("calibrate", "Fit codebooks and scales on a WAV corpus");
  std::size_t stages = 2, d_z = kDefaultSideDim;
  cal->add_option("--input", o.input, "WAV files or directories");
  cal->add_option("--stages", stages, "RVQ stages")->capture_default_str();
  cal->add_option("--d_z", d_z, "Side information dimension")->capture_default_str();
  cal->add_option("--seed", o.seed, "Seed")->capture_default_str();
  cal->add_option("--out_model", o.out_model, "Output model file");

  auto* enc = app.add_subcommand("encode", "Encode WAV input into a stream container");
  enc->add_option("--input", o.input, "WAV files or directories");
  enc->add_option("--model", o.model, "Model file");
  add_codec(enc, o);
  enc->add_option("--out_stream", o.out_stream, "Output container");

  auto* dec = app.add_subcommand("decode", "Decode a stream container without losses");
  dec->add_option("--stream", o.stream, "Input container");
  dec->add_option("--model", o.model, "Model file");
  add_receiver(dec, o);
  dec->add_option("--out_wav", o.out_wav, "Output WAV");

  auto* sim = app.add_subcommand("simulate", "Encode, pass through a lossy channel, decode and score");
  sim->add_option("--input", o.input, "Reference WAV files or directories");
  sim->add_option("--model", o.model, "Model file");
  sim->add_option("--stream", o.stream, "Use this encoded container instead of encoding the input");
  add_codec(sim, o);
  add_channel(sim, o);
  add_receiver(sim, o);
  sim->add_option("--out_wav", o.out_wav, "Decoded WAV");
  sim->add_option("--out_csv", o.out_csv, "Metrics CSV");
  sim->add_option("--out_report", o.out_report, "Receiver report CSV");
  sim->add_option("--out_trace", o.out_trace, "Applied loss trace");
  sim->add_option("--out_stream", o.out_stream, "Encoded container");

  auto* sw = app.add_subcommand("sweep", "Evaluate a grid of points along one axis");
  std::string axis = "q_lambda";
  std::vector<std::string> values;
  sw->add_option("--input", o.input, "Reference WAV files or directories");
  sw->add_option("--model", o.model, "Model file");
  add_codec(sw, o);
  add_channel(sw, o);
  add_receiver(sw, o);
  sw->add_option("--axis", axis, "q_lambda, loss, channel or fec")->capture_default_str();
  sw->add_option("--values", values, "Axis values; fec points as QxN")->delimiter(',');
  sw->add_option("--threads", o.threads, "Worker threads, 0 for all cores")->capture_default_str();
  sw->add_option("--out_csv", o.out_csv, "Metrics CSV (stdout when omitted)");

  auto* ts = app.add_subcommand("trace-stats", "Loss statistics of a trace file");
  fs::path trace;
  ts->add_option("--trace", trace, "Trace file");
  ts->add_option("--out_csv", o.out_csv, "Output CSV (stdout when omitted)");

  auto* gt = app.add_subcommand("gen-trace", "Generate a loss trace");
  std::size_t frames = 1000;
  add_channel(gt, o);
  gt->add_option("--frames", frames, "Trace length in packets")->capture_default_str();
  gt->add_option("--out_trace", o.out_trace, "Output trace");

  auto* sc = app.add_subcommand("synth-corpus", "Write synthetic speech WAVs");
  fs::path out_dir;
  std::size_t count = 1;
  double seconds = 10.0;
  sc->add_option("--out_dir", out_dir, "Output directory");
  sc->add_option("--count", count, "Number of files")->capture_default_str();
  sc->add_option("--seconds", seconds, "Seconds per file")->capture_default_str();
  sc->add_option("--seed", o.seed, "Seed of the first file")->capture_default_str();

  fs::path config;
  for (auto* sub : {cal, enc, dec, sim, sw, ts, gt, sc}) {
    sub->add_option("--config", config, "TOML file with the flag names as keys; flags take precedence");
  }

  CLI11_PARSE(app, argc, argv);

  if (!config.empty()) {
    try {
      apply_config(config, app.get_subcommands().front());
    } catch (const std::exception& e) {
      std::fprintf(stderr, "error: %s\n", e.what());
      return 1;
    }
  }

  try {
    if (cal->parsed()) return cmd_calibrate(o, stages, d_z);
    if (enc->parsed()) return cmd_encode(o);
    if (dec->parsed()) return cmd_decode(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (sw->parsed()) return cmd_sweep(o, axis, values);
    if (ts->parsed()) return cmd_trace_stats(trace, o);
    if (gt->parsed()) return cmd_gen_trace(o, frames);
    if (sc->parsed()) return cmd_synth_corpus(out_dir, count, seconds, o.seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
