#pragma once

#include <string>

#include "dstts/dsp.hpp"

namespace dstts {

// Reads a 16-bit PCM RIFF WAV (mono or stereo, any rate), averages stereo to
// mono, and resamples to 16 kHz with a windowed-sinc kernel.
AudioClip load_audio(const std::string& path);

// Writes mono 16-bit PCM at the clip's sample rate.
void write_wav(const std::string& path, const AudioClip& clip);

std::vector<double> resample(const std::vector<double>& in, int from_rate, int to_rate);

}  // namespace dstts
