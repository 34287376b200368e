#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dstts/style_encoder.hpp"
#include "fixtures.hpp"

using namespace dstts;

namespace {

Tensor random_mel(int frames, Rng& rng, double lo = -5.0, double hi = 5.0) {
  Tensor t({frames, kMelBins});
  for (double& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

Tensor random_mfcc(int frames, Rng& rng) {
  Tensor t({frames, kMfccCoeffs});
  for (int r = 0; r < frames; ++r) {
    double norm2 = 0.0;
    for (int c = 0; c < kMfccCoeffs; ++c) {
      const double v = rng.uniform(-1.0, 1.0);
      t.at(r, c) = v;
      norm2 += v * v;
    }
    for (int c = 0; c < kMfccCoeffs; ++c) t.at(r, c) /= std::sqrt(norm2);
  }
  return t;
}

}  // namespace

TEST_CASE("style vector dimensions are 128/128/256 at the default width") {
  ParameterStore store;
  DualStyleEncoder enc(store, "style", 128, 2, false, 42);
  Rng rng(1);
  Tape t;
  Var mel = t.constant(random_mel(12, rng));
  Var mfcc = t.constant(random_mfcc(12, rng));
  Var mel_part = enc.mel_enc.forward(t, mel);
  Var mfcc_part = enc.mfcc_enc.forward(t, mfcc);
  Var style = enc.forward(t, mel, mfcc);
  CHECK(t.value(mel_part).cols() == 128);
  CHECK(t.value(mfcc_part).cols() == 128);
  CHECK(t.value(style).cols() == 256);
  // concatenation order is mel first
  for (int j = 0; j < 128; ++j) {
    CHECK(t.value(style).at(0, j) == t.value(mel_part).at(0, j));
    CHECK(t.value(style).at(0, 128 + j) == t.value(mfcc_part).at(0, j));
  }
}

TEST_CASE("dimensional contract holds for any T >= 1") {
  ParameterStore store;
  DualStyleEncoder enc(store, "style", 16, 2, false, 3);
  Rng rng(2);
  for (int frames : {1, 2, 7, 33}) {
    Tape t;
    Var style = enc.forward(t, t.constant(random_mel(frames, rng)),
                            t.constant(random_mfcc(frames, rng)));
    CHECK(t.value(style).rows() == 1);
    CHECK(t.value(style).cols() == 32);
    CHECK(t.value(style).all_finite());
  }
}

TEST_CASE("mel part ignores the MFCC input bit-for-bit") {
  ParameterStore store;
  DualStyleEncoder enc(store, "style", 16, 2, false, 5);
  Rng rng(6);
  Tensor mel = random_mel(9, rng);
  Tensor mfcc1 = random_mfcc(9, rng);
  Tensor mfcc2 = random_mfcc(9, rng);
  Tape t1, t2;
  Var s1 = enc.forward(t1, t1.constant(mel), t1.constant(mfcc1));
  Var s2 = enc.forward(t2, t2.constant(mel), t2.constant(mfcc2));
  bool mfcc_part_differs = false;
  for (int j = 0; j < 16; ++j) {
    CHECK(t1.value(s1).at(0, j) == t2.value(s2).at(0, j));  // mel part identical
    if (t1.value(s1).at(0, 16 + j) != t2.value(s2).at(0, 16 + j)) mfcc_part_differs = true;
  }
  CHECK(mfcc_part_differs);
}

TEST_CASE("all-zero MFCC input with zero biases propagates to a zero vector") {
  ParameterStore store;
  MfccStyleEncoder enc(store, "mfcc", 16, 2, 7);
  // zero every bias, including the forget-gate bias initialized to 1
  for (auto& [name, p] : store.all())
    if (name.ends_with(".b"))
      for (double& x : p.value.data) x = 0.0;
  Tape t;
  Var out = enc.forward(t, t.constant(Tensor({6, kMfccCoeffs})));
  for (double v : t.value(out).data) CHECK(v == 0.0);
}

TEST_CASE("encoders are deterministic and finite on random inputs") {
  ParameterStore store;
  DualStyleEncoder enc(store, "style", 16, 2, false, 11);
  Rng rng(12);
  Tensor mel = random_mel(20, rng);
  Tensor mfcc = random_mfcc(20, rng);
  Tape t1, t2;
  Var a = enc.forward(t1, t1.constant(mel), t1.constant(mfcc));
  Var b = enc.forward(t2, t2.constant(mel), t2.constant(mfcc));
  CHECK(t1.value(a).data == t2.value(b).data);  // bit-identical
  CHECK(t1.value(a).all_finite());
}

TEST_CASE("mel encoder is order-sensitive under frame permutation") {
  ParameterStore store;
  MelStyleEncoder enc(store, "mel", 16, 2, 13);
  Rng rng(14);
  Tensor mel = random_mel(10, rng);
  Tensor permuted = mel;
  for (int j = 0; j < kMelBins; ++j) {
    std::swap(permuted.at(0, j), permuted.at(7, j));
    std::swap(permuted.at(2, j), permuted.at(5, j));
  }
  Tape t1, t2;
  Var a = enc.forward(t1, t1.constant(mel));
  Var b = enc.forward(t2, t2.constant(permuted));
  double diff = 0.0;
  for (int j = 0; j < 16; ++j)
    diff = std::max(diff, std::fabs(t1.value(a).at(0, j) - t2.value(b).at(0, j)));
  CHECK(diff > 1e-9);
}

TEST_CASE("mfcc encoder distinguishes T=1 from the frame repeated twice") {
  ParameterStore store;
  MfccStyleEncoder enc(store, "mfcc", 16, 2, 15);
  Rng rng(16);
  Tensor one = random_mfcc(1, rng);
  Tensor two({2, kMfccCoeffs});
  for (int j = 0; j < kMfccCoeffs; ++j) two.at(0, j) = two.at(1, j) = one.at(0, j);
  Tape t1, t2;
  Var a = enc.forward(t1, t1.constant(one));
  Var b = enc.forward(t2, t2.constant(two));
  double diff = 0.0;
  for (int j = 0; j < 16; ++j)
    diff = std::max(diff, std::fabs(t1.value(a).at(0, j) - t2.value(b).at(0, j)));
  CHECK(diff > 1e-9);
}

TEST_CASE("encoders reject empty input") {
  ParameterStore store;
  DualStyleEncoder enc(store, "style", 16, 2, false, 17);
  CHECK_THROWS_AS(mel_to_tensor(MelSpectrogram{}), std::invalid_argument);
  CHECK_THROWS_AS(mfcc_to_tensor(MfccSequence{}), std::invalid_argument);
}

TEST_CASE("no_mfcc ablation keeps the 2x width and reprojects the mel part") {
  ParameterStore store;
  DualStyleEncoder enc(store, "style", 16, 2, true, 19);
  CHECK(store.contains("style.mel_only_proj.w"));
  CHECK(!store.contains("style.mfcc.attn.wq.w"));
  Rng rng(20);
  Tensor mel = random_mel(8, rng);
  Tensor mfcc1 = random_mfcc(8, rng);
  Tensor mfcc2 = random_mfcc(8, rng);
  Tape t1, t2;
  Var a = enc.forward(t1, t1.constant(mel), t1.constant(mfcc1));
  Var b = enc.forward(t2, t2.constant(mel), t2.constant(mfcc2));
  CHECK(t1.value(a).cols() == 32);
  // with no MFCC encoder the whole vector ignores the MFCC input
  CHECK(t1.value(a).data == t2.value(b).data);
}
