#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "glaris/transform_codec.hpp"

namespace glaris {

// Causal predictor that feeds the concealment path.
//   none: no context; concealment relies on side information alone.
//   previous_frame: the last emitted latent, as is.
//   lpc: short-term linear prediction of the waveform continuation from the
//        last emitted frames, mapped back into the latent domain.
enum class ContextMode : std::uint8_t { none, previous_frame, lpc };

std::string_view to_string(ContextMode mode) noexcept;
ContextMode parse_context_mode(std::string_view text);

struct LpcSettings {
  int order = 16;
  std::size_t history_frames = 2;
  double white_noise = 1e-4;
};

// History is oldest first. Returns nullopt without history or for none.
std::optional<LatentCode> predict_context(ContextMode mode, std::span<const LatentCode> history,
                                          std::uint32_t frame_index, const LpcSettings& settings = {});

// Levinson-Durbin on the autocorrelation of a Hamming-windowed excerpt.
// Returns a_1..a_p for x[n] ~ sum_k a_k x[n-k]; all zeros for silent input.
std::vector<double> lpc_coefficients(std::span<const double> samples, int order, double white_noise);

// Runs the all-pole predictor forward from the end of `samples` with zero
// excitation.
std::vector<double> lpc_extrapolate(std::span<const double> samples, std::size_t count,
                                    const LpcSettings& settings = {});

}  // namespace glaris
