#pragma once

#include <cstdint>
#include <random>

#include "bat/signal_core.hpp"

namespace bat {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; derives independent stream seeds from (seed, index)
/// so that any scene can be regenerated on its own.
std::uint64_t split_seed(std::uint64_t seed, std::uint64_t index);

/// Speech-like test signal: voiced syllables (harmonic complex under a random
/// formant envelope with drifting pitch), unvoiced bursts and pauses.
/// Normalized to RMS 0.05.
Signal synthetic_speech(double duration_s, int sample_rate, std::uint64_t seed);

/// Music-like ambient signal: decaying harmonic chords from a pentatonic
/// scale. Normalized to RMS 0.05.
Signal synthetic_music(double duration_s, int sample_rate, std::uint64_t seed);

/// Zero-mean white Gaussian noise with unit variance.
Signal white_noise(std::size_t length, std::uint64_t seed);

}  // namespace bat
