#include "glaris/receiver.hpp"

#include <algorithm>
#include <string>

#include "glaris/entropy_coder.hpp"
#include "glaris/error.hpp"
#include "glaris/transform_codec.hpp"

namespace glaris {

std::string_view to_string(DecodePath path) noexcept {
  switch (path) {
    case DecodePath::entropy: return "entropy";
    case DecodePath::plc_high: return "plc_high";
    case DecodePath::plc_low: return "plc_low";
    case DecodePath::zero_fill: return "zero_fill";
  }
  return "entropy";
}

std::string_view to_string(PlcStrategy s) noexcept {
  switch (s) {
    case PlcStrategy::side_info: return "side_info";
    case PlcStrategy::context_only: return "context_only";
    case PlcStrategy::zero_fill: return "zero_fill";
  }
  return "side_info";
}

PlcStrategy parse_plc_strategy(std::string_view text) {
  if (text == "side_info") return PlcStrategy::side_info;
  if (text == "context_only") return PlcStrategy::context_only;
  if (text == "zero_fill") return PlcStrategy::zero_fill;
  throw Error(ErrorCode::configuration, "unknown plc strategy '" + std::string(text) + "'");
}

Receiver::Receiver(const CodecModel& model, ReceiverConfig config)
    : model_(model), cfg_(std::move(config)), tables_(cfg_.tables) {
  model_.validate();
  if (!tables_) {
    tables_ = std::make_shared<TableCache>(model_);
  } else if (&tables_->model() != &model_) {
    throw Error(ErrorCode::configuration, "table cache belongs to a different model");
  }
}

std::vector<DecodedFrame> Receiver::ingest(const ChannelEvent& event) {
  if (event.frame_index != next_event_) {
    throw Error(ErrorCode::protocol, "event for frame " + std::to_string(event.frame_index) +
                                         " out of order (expected " + std::to_string(next_event_) + ")");
  }
  ++next_event_;
  Pending& slot = pending_[event.frame_index];
  if (event.bytes) {
    try {
      Packet p = parse(*event.bytes);
      if (p.frame_index != event.frame_index) throw Error(ErrorCode::corrupt_packet, "frame index mismatch");
      for (const auto& b : p.z_blocks) {
        const std::uint32_t f = b.side.frame_index;
        if (f < next_emit_) continue;
        z_cache_.try_emplace(f, b.side);
      }
      slot.packet = std::move(p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::corrupt_packet && e.code() != ErrorCode::short_packet) throw;
      ++report_.corrupt_packets;
    }
  }
  std::vector<DecodedFrame> out;
  emit_ready(out, false);
  return out;
}

std::vector<DecodedFrame> Receiver::finalize() {
  std::vector<DecodedFrame> out;
  emit_ready(out, true);
  return out;
}

void Receiver::emit_ready(std::vector<DecodedFrame>& out, bool flush) {
  while (next_emit_ < next_event_ &&
         (flush || static_cast<std::uint64_t>(next_emit_) + cfg_.playout_delay + 1 <= next_event_)) {
    out.push_back(decode_frame_at(next_emit_));
    pending_.erase(next_emit_);
    z_cache_.erase(next_emit_);
    ++next_emit_;
  }
}

std::optional<LatentCode> Receiver::entropy_decode(const Packet& packet, const SideInfo& z) {
  if (packet.q_lambda >= 64) return std::nullopt;
  try {
    const auto tables = tables_->get(z, packet.q_lambda);
    const auto yq = decode_frame(packet.payload, *tables, model_.d_y, packet.frame_index);
    if (!yq) return std::nullopt;
    return dequantize(*yq, step_for_q(packet.q_lambda));
  } catch (const Error&) {
    return std::nullopt;
  }
}

DecodedFrame Receiver::decode_frame_at(std::uint32_t t) {
  DecodedFrame f;
  const auto& slot = pending_[t];
  const auto zit = z_cache_.find(t);
  const SideInfo* z = zit == z_cache_.end() ? nullptr : &zit->second;
  if (z != nullptr && z->stages() > model_.stages()) z = nullptr;
  f.packet_received = slot.packet.has_value();

  bool decoded = false;
  if (slot.packet && z != nullptr) {
    if (auto y = entropy_decode(*slot.packet, *z)) {
      f.y_hat = std::move(*y);
      f.path = DecodePath::entropy;
      f.z_available = true;
      decoded = true;
    }
  }
  if (slot.packet && !decoded) ++report_.payload_failures;

  if (!decoded) {
    // Side information counts for concealment only when it carries stages.
    f.z_available = z != nullptr && z->stages() > 0 && !z->fully_masked();
    if (cfg_.strategy == PlcStrategy::zero_fill) {
      f.y_hat = LatentCode{std::vector<double>(model_.d_y, 0.0), t};
      f.path = DecodePath::zero_fill;
    } else {
      const std::vector<LatentCode> hist(history_.begin(), history_.end());
      const auto ctx = predict_context(cfg_.context, hist, t, cfg_.lpc);
      const bool use_z = f.z_available && cfg_.strategy == PlcStrategy::side_info;
      GaussianParams theta;
      if (use_z) {
        theta = hyper_synthesis(model_, decode_side_info(model_, *z), ctx ? &*ctx : nullptr, false);
      } else {
        theta = hyper_synthesis(model_, {}, ctx ? &*ctx : nullptr, true);
      }
      const auto predicted = apply_confidence(plc_predict(theta, t), use_z, model_.tokens);
      f.y_hat = compose_latent(nullptr, &predicted, true);
      f.path = use_z ? DecodePath::plc_high : DecodePath::plc_low;
    }
    ++report_.lost_frames;
    if (f.z_available) ++report_.z_recovered;
  }
  f.y_hat.frame_index = t;

  ++report_.frames;
  ++report_.path_counts[static_cast<std::size_t>(f.path)];
  masks_.y_lost.push_back(!decoded);
  masks_.z_fully_available.push_back(f.z_available);
  masks_.z_stage_masked.emplace_back(model_.stages(), !f.z_available);

  history_.push_back(f.y_hat);
  while (history_.size() > std::max<std::size_t>(cfg_.lpc.history_frames, 1)) history_.pop_front();
  return f;
}

std::vector<DecodedFrame> receive_all(const CodecModel& model, const ReceiverConfig& cfg,
                                      const std::vector<ChannelEvent>& events, ReceiverReport* report,
                                      LossMasks* masks) {
  Receiver rx(model, cfg);
  std::vector<DecodedFrame> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    auto frames = rx.ingest(e);
    std::move(frames.begin(), frames.end(), std::back_inserter(out));
  }
  auto rest = rx.finalize();
  std::move(rest.begin(), rest.end(), std::back_inserter(out));
  if (report != nullptr) *report = rx.report();
  if (masks != nullptr) *masks = rx.masks();
  return out;
}

}  // namespace glaris
