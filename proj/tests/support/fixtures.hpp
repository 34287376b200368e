#pragma once

#include <string>
#include <vector>

#include "dstts/dsp.hpp"

namespace dstts::testing {

// Deterministic speech-like audio: a glottal pulse train driven through
// formant resonators, alternating with noise bursts. Good enough spectrally
// to exercise the mel/pitch/Griffin-Lim paths.
AudioClip make_speech_like(double seconds, uint64_t seed, double f0_base = 160.0);

// A clip holding a single sustained vowel-like voiced segment.
AudioClip make_voiced(double seconds, double f0, uint64_t seed);

struct FixtureDataset {
  std::string dir;
  std::string manifest;           // dir + "/manifest.jsonl"
  std::vector<std::string> ids;
  std::vector<std::string> wavs;
};

// Writes `count` speech-like WAVs plus a JSONL manifest with phonemes and
// durations that sum to each clip's mel frame count.
FixtureDataset make_dataset(const std::string& dir, int count, uint64_t seed,
                            double seconds = 0.9);

std::string temp_dir(const std::string& tag);

}  // namespace dstts::testing
