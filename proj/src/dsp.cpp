#include "dstts/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dstts {

namespace {
constexpr double kPi = std::numbers::pi;

// Pitch search band and voicing decision.
constexpr double kPitchFmin = 50.0;
constexpr double kPitchFmax = 600.0;
constexpr double kVoicingThreshold = 0.3;
constexpr double kSilenceEnergy = 1e-8;
}  // namespace

int stft_frame_count(long long num_samples) {
  if (num_samples < kWindowSize) return 0;
  return static_cast<int>((num_samples - kWindowSize) / kHopSize) + 1;
}

std::vector<double> hann_window(int size) {
  std::vector<double> w(size);
  for (int n = 0; n < size; ++n)
    w[n] = 0.5 * (1.0 - std::cos(2.0 * kPi * n / size));
  return w;
}

void fft_inplace(std::vector<std::complex<double>>& buf, bool inverse) {
  const size_t n = buf.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a power of two");
  // bit reversal
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * kPi / static_cast<double>(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        std::complex<double> u = buf[i + j];
        std::complex<double> t = buf[i + j + len / 2] * w;
        buf[i + j] = u + t;
        buf[i + j + len / 2] = u - t;
        w *= wlen;
      }
    }
  }
  if (inverse)
    for (auto& x : buf) x /= static_cast<double>(n);
}

std::vector<std::vector<std::complex<double>>> stft_complex(
    const std::vector<double>& samples) {
  const int T = stft_frame_count(static_cast<long long>(samples.size()));
  if (T < 1) throw std::invalid_argument("stft: clip shorter than one window");
  static const std::vector<double> window = hann_window(kWindowSize);
  std::vector<std::vector<std::complex<double>>> out(T);
  std::vector<std::complex<double>> buf(kWindowSize);
  for (int t = 0; t < T; ++t) {
    const size_t start = static_cast<size_t>(t) * kHopSize;
    for (int n = 0; n < kWindowSize; ++n)
      buf[n] = std::complex<double>(samples[start + n] * window[n], 0.0);
    fft_inplace(buf, false);
    out[t].assign(buf.begin(), buf.begin() + kFftBins);
  }
  return out;
}

SpectralFrames stft_magnitude(const AudioClip& clip) {
  auto cpx = stft_complex(clip.samples);
  SpectralFrames spec;
  spec.frames.resize(cpx.size());
  for (size_t t = 0; t < cpx.size(); ++t) {
    spec.frames[t].resize(kFftBins);
    for (int k = 0; k < kFftBins; ++k) spec.frames[t][k] = std::abs(cpx[t][k]);
  }
  return spec;
}

double MelFilterbank::hz_to_mel(double hz) {
  return 2595.0 * std::log10(1.0 + hz / 700.0);
}

double MelFilterbank::mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

MelFilterbank::MelFilterbank() {
  const double mel_lo = hz_to_mel(kMelFmin);
  const double mel_hi = hz_to_mel(kMelFmax);
  std::vector<double> edges(kMelBins + 2);
  for (int i = 0; i < kMelBins + 2; ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (kMelBins + 1));
  weights_.assign(kMelBins, std::vector<double>(kFftBins, 0.0));
  for (int m = 0; m < kMelBins; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    const double norm = 2.0 / (right - left);
    for (int k = 0; k < kFftBins; ++k) {
      const double f = static_cast<double>(k) * kSampleRate / kWindowSize;
      double v = 0.0;
      if (f > left && f < center)
        v = (f - left) / (center - left);
      else if (f >= center && f < right)
        v = (right - f) / (right - center);
      weights_[m][k] = v * norm;
    }
  }
}

std::vector<double> MelFilterbank::apply(const std::vector<double>& magnitudes) const {
  if (magnitudes.size() != kFftBins)
    throw std::invalid_argument("mel filterbank: expected 513 bins");
  std::vector<double> out(kMelBins, 0.0);
  for (int m = 0; m < kMelBins; ++m) {
    double acc = 0.0;
    const auto& w = weights_[m];
    for (int k = 0; k < kFftBins; ++k) acc += w[k] * magnitudes[k];
    out[m] = acc;
  }
  return out;
}

const MelFilterbank& mel_filterbank() {
  static const MelFilterbank fb;
  return fb;
}

MelSpectrogram mel_spectrogram(const SpectralFrames& spec) {
  const MelFilterbank& fb = mel_filterbank();
  MelSpectrogram mel;
  mel.frames.resize(spec.frames.size());
  for (size_t t = 0; t < spec.frames.size(); ++t) {
    std::vector<double> m = fb.apply(spec.frames[t]);
    for (double& x : m) x = std::log(std::max(x, kLogFloor));
    mel.frames[t] = std::move(m);
  }
  return mel;
}

MfccSequence mfcc(const MelSpectrogram& mel) {
  // DCT-II basis over the 80 log-mel channels, first 20 rows.
  static const std::vector<std::vector<double>> basis = [] {
    std::vector<std::vector<double>> b(kMfccCoeffs, std::vector<double>(kMelBins));
    for (int j = 0; j < kMfccCoeffs; ++j)
      for (int k = 0; k < kMelBins; ++k)
        b[j][k] = std::cos(kPi * j * (2.0 * k + 1.0) / (2.0 * kMelBins));
    return b;
  }();
  MfccSequence out;
  out.frames.resize(mel.frames.size());
  for (size_t t = 0; t < mel.frames.size(); ++t) {
    const auto& x = mel.frames[t];
    if (x.size() != kMelBins) throw std::invalid_argument("mfcc: expected 80 channels");
    std::vector<double> c(kMfccCoeffs, 0.0);
    double norm2 = 0.0;
    for (int j = 0; j < kMfccCoeffs; ++j) {
      double acc = 0.0;
      for (int k = 0; k < kMelBins; ++k) acc += basis[j][k] * x[k];
      c[j] = acc;
      norm2 += acc * acc;
    }
    const double norm = std::sqrt(norm2);
    if (norm >= 1e-12)
      for (double& v : c) v /= norm;
    else
      std::fill(c.begin(), c.end(), 0.0);
    out.frames[t] = std::move(c);
  }
  return out;
}

std::vector<double> extract_pitch(const AudioClip& clip) {
  if (clip.sample_rate != kSampleRate)
    throw std::invalid_argument("extract_pitch: expected 16 kHz clip");
  const int T = stft_frame_count(static_cast<long long>(clip.samples.size()));
  if (T < 1) throw std::invalid_argument("extract_pitch: clip shorter than one window");
  const int lag_min = static_cast<int>(std::ceil(kSampleRate / kPitchFmax));
  const int lag_max = static_cast<int>(std::floor(kSampleRate / kPitchFmin));
  std::vector<double> f0(T, 0.0);
  std::vector<double> r(lag_max + 2, 0.0);
  for (int t = 0; t < T; ++t) {
    const double* x = clip.samples.data() + static_cast<size_t>(t) * kHopSize;
    double frame_energy = 0.0;
    for (int n = 0; n < kWindowSize; ++n) frame_energy += x[n] * x[n];
    if (frame_energy < kSilenceEnergy) continue;
    // normalized cross-correlation over the overlapping part of the window
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      double num = 0.0, e0 = 0.0, e1 = 0.0;
      const int n_max = kWindowSize - lag;
      for (int n = 0; n < n_max; ++n) {
        num += x[n] * x[n + lag];
        e0 += x[n] * x[n];
        e1 += x[n + lag] * x[n + lag];
      }
      const double den = std::sqrt(e0 * e1);
      r[lag] = den > 1e-12 ? num / den : 0.0;
    }
    double r_best = 0.0;
    for (int lag = lag_min; lag <= lag_max; ++lag) r_best = std::max(r_best, r[lag]);
    if (r_best < kVoicingThreshold) continue;
    // smallest local maximum close to the global best avoids octave errors
    int lag_pick = -1;
    for (int lag = lag_min; lag <= lag_max; ++lag) {
      const bool local_max = (lag == lag_min || r[lag] >= r[lag - 1]) &&
                             (lag == lag_max || r[lag] >= r[lag + 1]);
      if (local_max && r[lag] >= 0.9 * r_best) {
        lag_pick = lag;
        break;
      }
    }
    if (lag_pick < 0) continue;
    // parabolic refinement around the picked lag
    double lag_refined = lag_pick;
    if (lag_pick > lag_min && lag_pick < lag_max) {
      const double a = r[lag_pick - 1], b = r[lag_pick], c = r[lag_pick + 1];
      const double den = a - 2.0 * b + c;
      if (std::fabs(den) > 1e-12) {
        double d = 0.5 * (a - c) / den;
        d = std::clamp(d, -0.5, 0.5);
        lag_refined = lag_pick + d;
      }
    }
    f0[t] = kSampleRate / lag_refined;
  }
  return f0;
}

std::vector<double> extract_energy(const SpectralFrames& spec) {
  std::vector<double> e(spec.frames.size(), 0.0);
  for (size_t t = 0; t < spec.frames.size(); ++t) {
    double acc = 0.0;
    for (double m : spec.frames[t]) acc += m * m;
    e[t] = std::sqrt(acc);
  }
  return e;
}

namespace {
std::vector<double> phoneme_average_impl(const std::vector<double>& values,
                                         const std::vector<int>& durations,
                                         bool voiced_only) {
  long long total = 0;
  for (int d : durations) {
    if (d < 0) throw std::invalid_argument("phoneme_average: negative duration");
    total += d;
  }
  if (total != static_cast<long long>(values.size()))
    throw std::invalid_argument("phoneme_average: durations sum to " +
                                std::to_string(total) + " but " +
                                std::to_string(values.size()) + " frames given");
  std::vector<double> out(durations.size(), 0.0);
  size_t pos = 0;
  for (size_t i = 0; i < durations.size(); ++i) {
    double acc = 0.0;
    int count = 0;
    for (int n = 0; n < durations[i]; ++n, ++pos) {
      if (voiced_only && values[pos] == 0.0) continue;
      acc += values[pos];
      ++count;
    }
    out[i] = count > 0 ? acc / count : 0.0;
  }
  return out;
}
}  // namespace

std::vector<double> phoneme_average(const std::vector<double>& frame_values,
                                    const std::vector<int>& durations) {
  return phoneme_average_impl(frame_values, durations, false);
}

std::vector<double> phoneme_average_voiced(const std::vector<double>& frame_values,
                                           const std::vector<int>& durations) {
  return phoneme_average_impl(frame_values, durations, true);
}

}  // namespace dstts
