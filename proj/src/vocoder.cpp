#include "dstts/vocoder.hpp"

#include <cmath>
#include <stdexcept>

namespace dstts {

namespace {

// Multiplicative-update passes for min ||M s - m||^2 with s >= 0. Enough to
// bring the per-cell log round-trip error well under half a log unit.
constexpr int kNnlsIterations = 120;

}  // namespace

SpectralFrames invert_mel(const MelSpectrogram& mel) {
  const auto& w = mel_filterbank().weights();
  SpectralFrames out;
  out.frames.resize(mel.frames.size());
  std::vector<double> linear(kMelBins), u(kFftBins), v(kMelBins), wtv(kFftBins);
  for (size_t t = 0; t < mel.frames.size(); ++t) {
    if (mel.frames[t].size() != kMelBins)
      throw std::invalid_argument("invert_mel: expected 80 channels");
    for (int m = 0; m < kMelBins; ++m) linear[m] = std::exp(mel.frames[t][m]);
    // s0 = M^T m, then s <- s * (M^T m) / (M^T M s)
    std::fill(u.begin(), u.end(), 0.0);
    for (int m = 0; m < kMelBins; ++m)
      for (int k = 0; k < kFftBins; ++k) u[k] += w[m][k] * linear[m];
    std::vector<double> s = u;
    for (int it = 0; it < kNnlsIterations; ++it) {
      std::fill(v.begin(), v.end(), 0.0);
      for (int m = 0; m < kMelBins; ++m) {
        double acc = 0.0;
        for (int k = 0; k < kFftBins; ++k) acc += w[m][k] * s[k];
        v[m] = acc;
      }
      std::fill(wtv.begin(), wtv.end(), 0.0);
      for (int m = 0; m < kMelBins; ++m)
        for (int k = 0; k < kFftBins; ++k) wtv[k] += w[m][k] * v[m];
      for (int k = 0; k < kFftBins; ++k)
        s[k] = wtv[k] > 1e-30 ? s[k] * u[k] / wtv[k] : 0.0;
    }
    for (double& x : s) x = std::max(x, 0.0);
    out.frames[t] = std::move(s);
  }
  return out;
}

std::vector<double> istft(const std::vector<std::vector<std::complex<double>>>& frames) {
  const int T = static_cast<int>(frames.size());
  if (T < 1) throw std::invalid_argument("istft: no frames");
  static const std::vector<double> window = hann_window(kWindowSize);
  const long long n_samples = static_cast<long long>(T - 1) * kHopSize + kWindowSize;
  std::vector<double> acc(n_samples, 0.0), wsum(n_samples, 0.0);
  std::vector<std::complex<double>> buf(kWindowSize);
  for (int t = 0; t < T; ++t) {
    if (static_cast<int>(frames[t].size()) != kFftBins)
      throw std::invalid_argument("istft: expected 513 bins per frame");
    for (int k = 0; k < kFftBins; ++k) buf[k] = frames[t][k];
    for (int k = kFftBins; k < kWindowSize; ++k)
      buf[k] = std::conj(frames[t][kWindowSize - k]);
    fft_inplace(buf, true);
    const long long start = static_cast<long long>(t) * kHopSize;
    for (int n = 0; n < kWindowSize; ++n) {
      acc[start + n] += window[n] * buf[n].real();
      wsum[start + n] += window[n] * window[n];
    }
  }
  for (long long n = 0; n < n_samples; ++n)
    acc[n] = wsum[n] > 1e-8 ? acc[n] / wsum[n] : 0.0;
  return acc;
}

AudioClip griffin_lim(const SpectralFrames& spec, const GriffinLimConfig& cfg,
                      std::vector<double>* consistency_errors) {
  if (cfg.iterations < 1) throw std::invalid_argument("griffin_lim: iterations >= 1");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw std::invalid_argument("griffin_lim: momentum must be in [0,1)");
  const int T = spec.frame_count();
  if (T < 1) throw std::invalid_argument("griffin_lim: empty spectrogram");
  if (consistency_errors) consistency_errors->clear();

  double mag_norm = 0.0;
  for (const auto& frame : spec.frames)
    for (double m : frame) mag_norm += m * m;
  mag_norm = std::sqrt(mag_norm);

  using Cpx = std::complex<double>;
  std::vector<std::vector<Cpx>> phase(T, std::vector<Cpx>(kFftBins, Cpx(1.0, 0.0)));
  std::vector<std::vector<Cpx>> estimate(T, std::vector<Cpx>(kFftBins, Cpx(0.0, 0.0)));
  std::vector<std::vector<Cpx>> prev = estimate;
  std::vector<std::vector<Cpx>> s(T, std::vector<Cpx>(kFftBins));

  const double kick = cfg.momentum / (1.0 + cfg.momentum);
  for (int it = 0; it < cfg.iterations; ++it) {
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < kFftBins; ++k) s[t][k] = spec.frames[t][k] * phase[t][k];
    std::vector<double> x = istft(s);
    prev.swap(estimate);
    estimate = stft_complex(x);
    if (consistency_errors) {
      double err = 0.0;
      for (int t = 0; t < T; ++t)
        for (int k = 0; k < kFftBins; ++k) {
          const double d = spec.frames[t][k] - std::abs(estimate[t][k]);
          err += d * d;
        }
      consistency_errors->push_back(mag_norm > 0.0 ? std::sqrt(err) / mag_norm
                                                   : std::sqrt(err));
    }
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < kFftBins; ++k) {
        Cpx u = estimate[t][k] - kick * prev[t][k];
        const double a = std::abs(u);
        phase[t][k] = a > 1e-12 ? u / a : Cpx(1.0, 0.0);
      }
  }
  for (int t = 0; t < T; ++t)
    for (int k = 0; k < kFftBins; ++k) s[t][k] = spec.frames[t][k] * phase[t][k];

  AudioClip clip;
  clip.sample_rate = kSampleRate;
  clip.samples = istft(s);
  return clip;
}

}  // namespace dstts
