#pragma once

#include <complex>
#include <vector>

namespace dstts {

// Frontend constants shared by analysis and resynthesis.
constexpr int kSampleRate = 16000;
constexpr int kWindowSize = 1024;
constexpr int kHopSize = 256;
constexpr int kFftBins = kWindowSize / 2 + 1;  // 513
constexpr int kMelBins = 80;
constexpr int kMfccCoeffs = 20;
constexpr double kMelFmin = 0.0;
constexpr double kMelFmax = 8000.0;
constexpr double kLogFloor = 1e-5;

struct AudioClip {
  std::vector<double> samples;  // mono, [-1, 1]
  int sample_rate = kSampleRate;
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct SpectralFrames {
  std::vector<std::vector<double>> frames;  // T x 513 magnitudes
  int frame_count() const { return static_cast<int>(frames.size()); }
};

struct MelSpectrogram {
  std::vector<std::vector<double>> frames;  // T x 80 log amplitudes
  int frame_count() const { return static_cast<int>(frames.size()); }
};

struct MfccSequence {
  std::vector<std::vector<double>> frames;  // T x 20, unit L2 norm per frame
  int frame_count() const { return static_cast<int>(frames.size()); }
};

struct VarianceTargets {
  std::vector<int> durations;    // frames per phoneme, sums to mel frame count
  std::vector<double> pitch;     // Hz per phoneme, 0 = unvoiced
  std::vector<double> energy;    // magnitude per phoneme
};

// Frames that fit fully inside the signal: floor((N - window)/hop) + 1.
int stft_frame_count(long long num_samples);

// In-place radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& buf, bool inverse);

SpectralFrames stft_magnitude(const AudioClip& clip);
// Complex STFT with the same framing; used by the vocoder.
std::vector<std::vector<std::complex<double>>> stft_complex(
    const std::vector<double>& samples);

// Triangular mel filterbank, HTK scale, area-normalized, kMelFmin..kMelFmax.
class MelFilterbank {
 public:
  MelFilterbank();
  // weights[m][bin], m in [0, kMelBins)
  const std::vector<std::vector<double>>& weights() const { return weights_; }
  std::vector<double> apply(const std::vector<double>& magnitudes) const;
  static double hz_to_mel(double hz);
  static double mel_to_hz(double mel);

 private:
  std::vector<std::vector<double>> weights_;
};

const MelFilterbank& mel_filterbank();

MelSpectrogram mel_spectrogram(const SpectralFrames& spec);
MfccSequence mfcc(const MelSpectrogram& mel);

// One F0 estimate per STFT frame; 0 marks unvoiced frames.
std::vector<double> extract_pitch(const AudioClip& clip);
// Per-frame L2 norm of the magnitude bins.
std::vector<double> extract_energy(const SpectralFrames& spec);

// Mean of each phoneme's frame span; zero-duration spans give 0.
std::vector<double> phoneme_average(const std::vector<double>& frame_values,
                                    const std::vector<int>& durations);
// Same, but averaging only voiced (nonzero) frames; fully unvoiced spans give 0.
std::vector<double> phoneme_average_voiced(const std::vector<double>& frame_values,
                                           const std::vector<int>& durations);

std::vector<double> hann_window(int size);

}  // namespace dstts
