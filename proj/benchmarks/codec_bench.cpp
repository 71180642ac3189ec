#include <benchmark/benchmark.h>

#include <vector>

#include "glaris/channel_sim.hpp"
#include "glaris/entropy_coder.hpp"
#include "glaris/experiment.hpp"
#include "glaris/hyperprior.hpp"
#include "glaris/receiver.hpp"
#include "glaris/sender.hpp"
#include "glaris/speech_synth.hpp"
#include "glaris/transform_codec.hpp"

using namespace glaris;

namespace {

const PcmClip& clip() {
  static const PcmClip c = synthesize_speech(10.0, 3);
  return c;
}

const CodecModel& model() {
  static const CodecModel m = calibrate(corpus_latents({clip()}), 2, 1).model;
  return m;
}

const std::vector<LatentCode>& latents() {
  static const auto l = corpus_latents({clip()});
  return l;
}

GaussianParams theta_for(const LatentCode& y) {
  const auto si = rvq_encode(hyper_analysis(y, model().d_z), model().books);
  return hyper_synthesis(model(), decode_side_info(model(), si), nullptr, false);
}

}  // namespace

static void BM_Dct(benchmark::State& state) {
  std::vector<double> in(kFrameSize, 0.1), out(kFrameSize);
  for (auto _ : state) {
    dct_forward(in, out);
    benchmark::DoNotOptimize(out.data());
  }
}
BENCHMARK(BM_Dct);

static void BM_RvqEncode(benchmark::State& state) {
  const auto z = hyper_analysis(latents()[100], model().d_z);
  for (auto _ : state) benchmark::DoNotOptimize(rvq_encode(z, model().books));
}
BENCHMARK(BM_RvqEncode);

static void BM_BuildCdf(benchmark::State& state) {
  const auto theta = theta_for(latents()[100]);
  const double step = step_for_q(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_cdf(theta, step));
}
BENCHMARK(BM_BuildCdf)->Arg(0)->Arg(32)->Arg(63);

static void BM_EncodeFrame(benchmark::State& state) {
  const auto& y = latents()[100];
  const double step = step_for_q(32);
  const auto tables = build_cdf(theta_for(y), step);
  const auto yq = quantize(y, step);
  for (auto _ : state) benchmark::DoNotOptimize(encode_frame(yq, tables));
}
BENCHMARK(BM_EncodeFrame);

static void BM_DecodeFrame(benchmark::State& state) {
  const auto& y = latents()[100];
  const double step = step_for_q(32);
  const auto tables = build_cdf(theta_for(y), step);
  const auto bits = encode_frame(quantize(y, step), tables);
  for (auto _ : state) benchmark::DoNotOptimize(decode_frame(bits, tables, y.size()));
}
BENCHMARK(BM_DecodeFrame);

static void BM_EncodeStream(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(encode_stream(model(), clip(), 32, FecConfig{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(latents().size()));
}
BENCHMARK(BM_EncodeStream)->Unit(benchmark::kMillisecond);

static void BM_Receiver(benchmark::State& state) {
  const auto stream = encode_stream(model(), clip(), 32, FecConfig{});
  const auto trace = gen_bernoulli(static_cast<double>(state.range(0)) / 100.0, stream.packets.size(), 5);
  for (auto _ : state) benchmark::DoNotOptimize(simulate_stream(model(), stream, trace, ReceiverConfig{}));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.packets.size()));
}
BENCHMARK(BM_Receiver)->Arg(0)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
