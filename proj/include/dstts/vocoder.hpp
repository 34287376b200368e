#pragma once

#include "dstts/dsp.hpp"

namespace dstts {

struct GriffinLimConfig {
  int iterations = 32;
  double momentum = 0.99;
};

// exp() then the least-squares pseudo-inverse of the mel filterbank, clamped
// at zero.
SpectralFrames invert_mel(const MelSpectrogram& mel);

// Iterative phase recovery. Output length is (T-1)*hop + window samples at
// 16 kHz. `consistency_errors`, when given, receives the per-iteration
// relative spectral error ||mag - |STFT(x)||| / ||mag||.
AudioClip griffin_lim(const SpectralFrames& spec, const GriffinLimConfig& cfg = {},
                      std::vector<double>* consistency_errors = nullptr);

// Least-squares overlap-add inverse of the complex STFT used here.
std::vector<double> istft(const std::vector<std::vector<std::complex<double>>>& frames);

}  // namespace dstts
