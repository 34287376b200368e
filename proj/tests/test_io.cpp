#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>

#include "dstts/config.hpp"
#include "dstts/dataset.hpp"
#include "dstts/rng.hpp"
#include "dstts/tensor_file.hpp"
#include "dstts/wav_io.hpp"
#include "fixtures.hpp"

using namespace dstts;
using dstts::testing::temp_dir;

namespace {

void write_raw_wav(const std::string& path, uint16_t format, uint16_t channels,
                   uint32_t rate, uint16_t bits, const std::vector<int16_t>& pcm) {
  std::ofstream f(path, std::ios::binary);
  auto u32 = [&](uint32_t v) { f.write(reinterpret_cast<char*>(&v), 4); };
  auto u16 = [&](uint16_t v) { f.write(reinterpret_cast<char*>(&v), 2); };
  const uint32_t data_bytes = static_cast<uint32_t>(pcm.size() * 2);
  f.write("RIFF", 4);
  u32(36 + data_bytes);
  f.write("WAVE", 4);
  f.write("fmt ", 4);
  u32(16);
  u16(format);
  u16(channels);
  u32(rate);
  u32(rate * channels * 2);
  u16(static_cast<uint16_t>(channels * 2));
  u16(bits);
  f.write("data", 4);
  u32(data_bytes);
  f.write(reinterpret_cast<const char*>(pcm.data()), data_bytes);
}

}  // namespace

TEST_CASE("load_audio keeps 16 kHz input unchanged") {
  const std::string dir = temp_dir("wav_identity");
  AudioClip clip;
  clip.sample_rate = 16000;
  clip.samples.resize(16000);
  for (int i = 0; i < 16000; ++i)
    clip.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * 220.0 * i / 16000.0);
  write_wav(dir + "/a.wav", clip);
  AudioClip loaded = load_audio(dir + "/a.wav");
  REQUIRE(loaded.samples.size() == 16000);
  CHECK(loaded.sample_rate == 16000);
  // only 16-bit quantization between the two
  for (int i = 0; i < 16000; ++i)
    CHECK(loaded.samples[i] == doctest::Approx(clip.samples[i]).epsilon(2e-4));
}

TEST_CASE("load_audio resamples 48 kHz to 16 kHz preserving duration") {
  const std::string dir = temp_dir("wav_48k");
  AudioClip clip;
  clip.sample_rate = 48000;
  clip.samples.resize(48000);
  for (int i = 0; i < 48000; ++i)
    clip.samples[i] = 0.4 * std::sin(2.0 * std::numbers::pi * 440.0 * i / 48000.0);
  write_wav(dir + "/a.wav", clip);
  AudioClip loaded = load_audio(dir + "/a.wav");
  CHECK(std::llabs(static_cast<long long>(loaded.samples.size()) - 16000) <= 1);
  // the resampled tone keeps its frequency: count zero crossings
  int crossings = 0;
  for (size_t i = 1; i < loaded.samples.size(); ++i)
    if ((loaded.samples[i - 1] < 0) != (loaded.samples[i] < 0)) ++crossings;
  CHECK(crossings > 850);
  CHECK(crossings < 910);
}

TEST_CASE("stereo mixes down to the channel average") {
  const std::string dir = temp_dir("wav_stereo");
  std::vector<int16_t> pcm;
  for (int i = 0; i < 100; ++i) {
    pcm.push_back(static_cast<int16_t>(1000 + i));  // left
    pcm.push_back(static_cast<int16_t>(3000 - i));  // right
  }
  write_raw_wav(dir + "/st.wav", 1, 2, 16000, 16, pcm);
  AudioClip loaded = load_audio(dir + "/st.wav");
  REQUIRE(loaded.samples.size() == 100);
  for (int i = 0; i < 100; ++i) {
    const double want = ((1000.0 + i) / 32768.0 + (3000.0 - i) / 32768.0) * 0.5;
    CHECK(loaded.samples[i] == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("load_audio error paths") {
  const std::string dir = temp_dir("wav_errors");
  CHECK_THROWS(load_audio(dir + "/missing.wav"));
  write_raw_wav(dir + "/float.wav", 3, 1, 16000, 32, {0, 0});
  CHECK_THROWS_WITH_AS(load_audio(dir + "/float.wav"),
                       doctest::Contains("unsupported WAV encoding"), std::runtime_error);
  write_raw_wav(dir + "/empty.wav", 1, 1, 16000, 16, {});
  CHECK_THROWS_WITH_AS(load_audio(dir + "/empty.wav"), doctest::Contains("empty audio"),
                       std::runtime_error);
}

TEST_CASE("DSTT tensors round-trip assorted shapes") {
  const std::string dir = temp_dir("dstt");
  Rng rng(808);
  for (int trial = 0; trial < 8; ++trial) {
    std::vector<int> shape;
    const int rank = rng.uniform_int(1, 3);
    for (int r = 0; r < rank; ++r) shape.push_back(rng.uniform_int(1, 9));
    size_t numel = 1;
    for (int d : shape) numel *= static_cast<size_t>(d);
    std::vector<float> data(numel);
    for (float& v : data) v = static_cast<float>(rng.uniform(-10.0, 10.0));
    const std::string path = dir + "/t" + std::to_string(trial) + ".dstt";
    write_dstt(path, shape, data);
    TensorFile back = read_dstt(path);
    CHECK(back.shape == shape);
    CHECK(back.data == data);
  }
}

TEST_CASE("DSTT rejects malformed files") {
  const std::string dir = temp_dir("dstt_bad");
  std::ofstream(dir + "/bad.dstt") << "NOPE";
  CHECK_THROWS(read_dstt(dir + "/bad.dstt"));
  CHECK_THROWS(read_dstt(dir + "/missing.dstt"));
}

TEST_CASE("config round-trips byte-identically") {
  RunConfig c;
  c.model_dim = 64;
  c.dva_threshold = 90;
  c.lr = 3e-4;
  c.manifest = "/tmp/manifest.jsonl";
  c.no_mfcc = true;
  const std::string once = config_to_json(c);
  const std::string twice = config_to_json(config_from_json(once));
  CHECK(once == twice);
}

TEST_CASE("config validation rejects bad values") {
  RunConfig c;
  c.dva_threshold = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.no_dva_sp = c.no_dva_lp = true;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = RunConfig{};
  c.heads = 3;  // does not divide 256
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("stats and vocab files round-trip") {
  const std::string dir = temp_dir("statsvocab");
  CorpusStats s{180.5, 42.0, 3.25, 1.5};
  write_stats(dir + "/stats.json", s);
  CorpusStats back = read_stats(dir + "/stats.json");
  CHECK(back.pitch_mean == doctest::Approx(s.pitch_mean));
  CHECK(back.energy_std == doctest::Approx(s.energy_std));

  std::vector<std::string> vocab = {"<pad>", "AA", "B"};
  write_vocab(dir + "/vocab.json", vocab);
  CHECK(read_vocab(dir + "/vocab.json") == vocab);
  auto idx = vocab_index(vocab);
  CHECK(idx.at("<pad>") == 0);
  CHECK(idx.at("B") == 2);
}

TEST_CASE("duration reconciliation absorbs off-by-one only") {
  CHECK(reconcile_durations({3, 4}, 7) == std::vector<int>{3, 4});
  CHECK(reconcile_durations({3, 4}, 8) == std::vector<int>{3, 5});
  CHECK(reconcile_durations({3, 4}, 6) == std::vector<int>{3, 3});
  CHECK_THROWS(reconcile_durations({3, 4}, 10));
  CHECK_THROWS(reconcile_durations({3, 4}, 4));
}

TEST_CASE("manifest parsing") {
  const std::string dir = temp_dir("manifest");
  {
    std::ofstream f(dir + "/m.jsonl");
    f << R"({"id":"a","wav":"a.wav","phonemes":["AA","B"],"durations":[3,4]})" << "\n";
    f << R"({"id":"b","wav":"b.wav","phonemes":["K"],"durations":[7],"speaker":"s1"})" << "\n";
  }
  auto entries = read_manifest(dir + "/m.jsonl");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].phonemes == std::vector<std::string>{"AA", "B"});
  CHECK(entries[1].speaker == "s1");
  {
    std::ofstream f(dir + "/bad.jsonl");
    f << R"({"id":"a","wav":"a.wav","phonemes":["AA"],"durations":[3,4]})" << "\n";
  }
  CHECK_THROWS(read_manifest(dir + "/bad.jsonl"));
}
