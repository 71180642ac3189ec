#include "glaris/sender.hpp"

#include <string>

#include "glaris/entropy_coder.hpp"
#include "glaris/error.hpp"
#include "glaris/model_io.hpp"
#include "glaris/transform_codec.hpp"

namespace glaris {

StreamEncoder::StreamEncoder(const CodecModel& model, int q_lambda, FecConfig fec)
    : model_(model), q_lambda_(q_lambda), fec_(std::move(fec)), cache_(fec_.max_offset()), tables_(model) {
  model_.validate();
  RateControl{.q_lambda = q_lambda}.validate();
  fec_.validate();
  if (fec_.stages > model_.stages()) {
    throw Error(ErrorCode::configuration, "fec_q (" + std::to_string(fec_.stages) + ") exceeds the model's " +
                                              std::to_string(model_.stages()) + " RVQ stages");
  }
  step_ = step_for_q(q_lambda);
}

Packet StreamEncoder::encode(const LatentFrame& frame) {
  const std::uint32_t t = next_++;
  LatentFrame f = frame;
  f.frame_index = t;
  last_y_ = analysis(f);
  const auto z = hyper_analysis(last_y_, model_.d_z);
  SideInfo si = rvq_encode(z, model_.books, fec_.stages);
  si.frame_index = t;
  last_yq_ = quantize(last_y_, step_);
  const auto tables = tables_.get(si, q_lambda_);
  auto packet = build_packet(t, static_cast<std::uint8_t>(q_lambda_), encode_frame(last_yq_, *tables), si,
                             cache_, fec_);
  cache_.push(si);
  return packet;
}

std::vector<Packet> encode_packets(const CodecModel& model, const PcmClip& clip, int q_lambda,
                                   const FecConfig& fec) {
  StreamEncoder enc(model, q_lambda, fec);
  const auto frames = frame_encode(clip, model.d_l);
  std::vector<Packet> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(enc.encode(f));
  return out;
}

StreamContainer encode_stream(const CodecModel& model, const PcmClip& clip, int q_lambda,
                              const FecConfig& fec) {
  StreamContainer c;
  c.header.model_checksum = model_checksum(model);
  c.header.q_lambda = static_cast<std::uint8_t>(q_lambda);
  c.header.fec = fec;
  c.header.sample_count = clip.size();
  for (const auto& p : encode_packets(model, clip, q_lambda, fec)) c.packets.push_back(serialize(p));
  return c;
}

}  // namespace glaris
