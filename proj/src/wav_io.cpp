#include "dstts/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace dstts {

namespace {

uint32_t read_u32(std::istream& s) {
  unsigned char b[4];
  s.read(reinterpret_cast<char*>(b), 4);
  return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
         (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& s) {
  unsigned char b[2];
  s.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& s, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  s.write(reinterpret_cast<char*>(b), 4);
}

void write_u16(std::ostream& s, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff)};
  s.write(reinterpret_cast<char*>(b), 2);
}

constexpr int kSincHalfWidth = 32;

}  // namespace

std::vector<double> resample(const std::vector<double>& in, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw std::invalid_argument("resample: bad rates");
  if (from_rate == to_rate) return in;
  const double ratio = static_cast<double>(from_rate) / to_rate;
  const long long out_len =
      std::llround(static_cast<double>(in.size()) * to_rate / from_rate);
  // Low-pass at the narrower Nyquist, expressed relative to the input rate.
  const double cutoff = std::min(1.0, static_cast<double>(to_rate) / from_rate);
  std::vector<double> out(static_cast<size_t>(out_len), 0.0);
  const double pi = std::numbers::pi;
  for (long long n = 0; n < out_len; ++n) {
    const double t = n * ratio;  // position in input samples
    const long long m0 = static_cast<long long>(std::floor(t)) - kSincHalfWidth + 1;
    const long long m1 = static_cast<long long>(std::floor(t)) + kSincHalfWidth;
    double acc = 0.0;
    for (long long m = std::max<long long>(0, m0);
         m <= std::min<long long>(static_cast<long long>(in.size()) - 1, m1); ++m) {
      const double u = t - static_cast<double>(m);
      double k;
      if (std::fabs(u) < 1e-12) {
        k = cutoff;
      } else {
        k = cutoff * std::sin(pi * cutoff * u) / (pi * cutoff * u);
      }
      // Hann taper over the kernel support
      const double w = 0.5 * (1.0 + std::cos(pi * u / kSincHalfWidth));
      acc += in[static_cast<size_t>(m)] * k * w;
    }
    out[static_cast<size_t>(n)] = acc;
  }
  return out;
}

AudioClip load_audio(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open WAV file: " + path);

  char riff[4], wave[4];
  f.read(riff, 4);
  read_u32(f);  // overall size, unused
  f.read(wave, 4);
  if (!f || std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(wave, "WAVE", 4) != 0)
    throw std::runtime_error("not a RIFF/WAVE file: " + path);

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  std::vector<int16_t> pcm;
  bool got_fmt = false, got_data = false;
  while (f && !(got_fmt && got_data)) {
    char id[4];
    f.read(id, 4);
    if (!f) break;
    uint32_t size = read_u32(f);
    if (std::memcmp(id, "fmt ", 4) == 0) {
      format = read_u16(f);
      channels = read_u16(f);
      rate = read_u32(f);
      read_u32(f);  // byte rate
      read_u16(f);  // block align
      bits = read_u16(f);
      if (size > 16) f.seekg(size - 16, std::ios::cur);
      got_fmt = true;
    } else if (std::memcmp(id, "data", 4) == 0) {
      if (!got_fmt) throw std::runtime_error("WAV data chunk before fmt: " + path);
      pcm.resize(size / 2);
      f.read(reinterpret_cast<char*>(pcm.data()), static_cast<std::streamsize>(pcm.size() * 2));
      if (!f) throw std::runtime_error("truncated WAV data: " + path);
      got_data = true;
    } else {
      f.seekg(size + (size & 1), std::ios::cur);
    }
  }
  if (!got_fmt || !got_data) throw std::runtime_error("missing WAV chunks: " + path);
  if (format != 1 || bits != 16)
    throw std::runtime_error("unsupported WAV encoding (want 16-bit PCM): " + path);
  if (channels != 1 && channels != 2)
    throw std::runtime_error("unsupported channel count " + std::to_string(channels) + ": " + path);
  if (pcm.empty() || pcm.size() < channels) throw std::runtime_error("empty audio: " + path);

  const size_t frames = pcm.size() / channels;
  std::vector<double> mono(frames);
  if (channels == 1) {
    for (size_t i = 0; i < frames; ++i) mono[i] = pcm[i] / 32768.0;
  } else {
    for (size_t i = 0; i < frames; ++i)
      mono[i] = (pcm[2 * i] / 32768.0 + pcm[2 * i + 1] / 32768.0) * 0.5;
  }

  AudioClip clip;
  clip.sample_rate = kSampleRate;
  clip.samples = resample(mono, static_cast<int>(rate), kSampleRate);
  for (double& s : clip.samples) s = std::clamp(s, -1.0, 1.0);
  return clip;
}

void write_wav(const std::string& path, const AudioClip& clip) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write WAV file: " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(clip.samples.size() * 2);
  f.write("RIFF", 4);
  write_u32(f, 36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  write_u32(f, 16);
  write_u16(f, 1);  // PCM
  write_u16(f, 1);  // mono
  write_u32(f, static_cast<uint32_t>(clip.sample_rate));
  write_u32(f, static_cast<uint32_t>(clip.sample_rate * 2));
  write_u16(f, 2);
  write_u16(f, 16);
  f.write("data", 4);
  write_u32(f, data_bytes);
  for (double s : clip.samples) {
    double x = std::clamp(s, -1.0, 1.0);
    int v = static_cast<int>(std::lround(x * 32767.0));
    write_u16(f, static_cast<uint16_t>(static_cast<int16_t>(v)));
  }
  if (!f) throw std::runtime_error("short write: " + path);
}

}  // namespace dstts
