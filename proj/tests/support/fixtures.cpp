#include "fixtures.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "dstts/rng.hpp"
#include "dstts/wav_io.hpp"

namespace dstts::testing {

namespace {

// Two-pole resonator centered at `freq` with bandwidth `bw`.
struct Resonator {
  double a1 = 0.0, a2 = 0.0;
  double y1 = 0.0, y2 = 0.0;

  Resonator(double freq, double bw, int sample_rate) {
    const double r = std::exp(-std::numbers::pi * bw / sample_rate);
    a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / sample_rate);
    a2 = -r * r;
  }

  double step(double x) {
    const double y = x + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    return y;
  }
};

void peak_normalize(std::vector<double>& x, double target) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0)
    for (double& v : x) v *= target / peak;
}

}  // namespace

AudioClip make_voiced(double seconds, double f0, uint64_t seed) {
  const int n = static_cast<int>(seconds * kSampleRate);
  Rng rng(seed);
  Resonator r1(500.0 + 80.0 * rng.uniform(), 90.0, kSampleRate);
  Resonator r2(1400.0 + 200.0 * rng.uniform(), 120.0, kSampleRate);
  Resonator r3(2600.0 + 200.0 * rng.uniform(), 180.0, kSampleRate);
  std::vector<double> x(n, 0.0);
  double phase = 0.0;
  for (int i = 0; i < n; ++i) {
    phase += f0 / kSampleRate;
    double pulse = 0.0;
    if (phase >= 1.0) {
      phase -= 1.0;
      pulse = 1.0;
    }
    const double src = pulse + 0.02 * (rng.uniform() - 0.5);
    x[i] = r1.step(src) + 0.6 * r2.step(src) + 0.3 * r3.step(src);
  }
  peak_normalize(x, 0.7);
  AudioClip clip;
  clip.samples = std::move(x);
  clip.sample_rate = kSampleRate;
  return clip;
}

AudioClip make_speech_like(double seconds, uint64_t seed, double f0_base) {
  const int n = static_cast<int>(seconds * kSampleRate);
  Rng rng(seed);
  std::vector<double> x(n, 0.0);
  int pos = 0;
  bool voiced = true;
  while (pos < n) {
    const int seg = std::min(n - pos, static_cast<int>((0.08 + 0.12 * rng.uniform()) * kSampleRate));
    if (voiced) {
      const double f0 = f0_base * (0.85 + 0.3 * rng.uniform());
      Resonator r1(400.0 + 500.0 * rng.uniform(), 90.0, kSampleRate);
      Resonator r2(1100.0 + 900.0 * rng.uniform(), 140.0, kSampleRate);
      Resonator r3(2400.0 + 600.0 * rng.uniform(), 200.0, kSampleRate);
      double phase = 0.0;
      for (int i = 0; i < seg; ++i) {
        const double vib = 1.0 + 0.02 * std::sin(2.0 * std::numbers::pi * 5.0 * (pos + i) / kSampleRate);
        phase += f0 * vib / kSampleRate;
        double pulse = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          pulse = 1.0;
        }
        const double src = pulse + 0.02 * (rng.uniform() - 0.5);
        const double env = std::min({1.0, (i + 1) / 200.0, (seg - i) / 200.0});
        x[pos + i] = env * (r1.step(src) + 0.5 * r2.step(src) + 0.25 * r3.step(src));
      }
    } else {
      Resonator hiss(3400.0 + 800.0 * rng.uniform(), 1200.0, kSampleRate);
      for (int i = 0; i < seg; ++i) {
        const double env = std::min({1.0, (i + 1) / 100.0, (seg - i) / 100.0});
        x[pos + i] = 0.2 * env * hiss.step(rng.uniform() - 0.5);
      }
    }
    voiced = !voiced;
    pos += seg;
  }
  peak_normalize(x, 0.7);
  AudioClip clip;
  clip.samples = std::move(x);
  clip.sample_rate = kSampleRate;
  return clip;
}

std::string temp_dir(const std::string& tag) {
  static int counter = 0;
  const auto base = std::filesystem::temp_directory_path() /
                    ("dstts_test_" + tag + "_" + std::to_string(counter++));
  std::filesystem::remove_all(base);
  std::filesystem::create_directories(base);
  return base.string();
}

FixtureDataset make_dataset(const std::string& dir, int count, uint64_t seed,
                            double seconds) {
  static const char* kSymbols[] = {"AA", "AH", "B",  "D",  "EH", "IY",
                                   "K",  "L",  "M",  "N",  "OW", "S"};
  std::filesystem::create_directories(dir);
  FixtureDataset ds;
  ds.dir = dir;
  ds.manifest = dir + "/manifest.jsonl";
  std::ofstream manifest(ds.manifest);
  Rng rng(mix_seed(seed, "dataset"));
  for (int u = 0; u < count; ++u) {
    const std::string id = "utt" + std::to_string(u);
    const std::string wav = dir + "/" + id + ".wav";
    AudioClip clip = make_speech_like(seconds, seed + 17 * u, 130.0 + 40.0 * u);
    write_wav(wav, clip);
    const int frames = stft_frame_count(static_cast<long long>(clip.samples.size()));
    const int phonemes = 6 + static_cast<int>(rng.next_u64() % 4);
    std::vector<int> durations(phonemes, frames / phonemes);
    durations.back() += frames - (frames / phonemes) * phonemes;
    manifest << "{\"id\":\"" << id << "\",\"wav\":\"" << wav << "\",\"phonemes\":[";
    for (int p = 0; p < phonemes; ++p) {
      if (p) manifest << ",";
      manifest << "\"" << kSymbols[rng.next_u64() % 12] << "\"";
    }
    manifest << "],\"durations\":[";
    for (int p = 0; p < phonemes; ++p) {
      if (p) manifest << ",";
      manifest << durations[p];
    }
    manifest << "],\"speaker\":\"spk" << u << "\"}\n";
    ds.ids.push_back(id);
    ds.wavs.push_back(wav);
  }
  return ds;
}

}  // namespace dstts::testing
