#pragma once

#include <cstdint>
#include <vector>

#include "glaris/audio_frontend.hpp"
#include "glaris/rng.hpp"

namespace glaris {

// Source-filter speech stand-in: pitched vowels through formant resonators,
// noisy consonant bursts and short pauses. Deterministic per seed.
std::vector<double> synthesize_utterance(Rng& rng, double seconds);

// Concatenated utterances of `utterance_seconds`, each peak-normalized to 0.5.
PcmClip synthesize_speech(double seconds, std::uint64_t seed, double utterance_seconds = 10.0);

}  // namespace glaris
