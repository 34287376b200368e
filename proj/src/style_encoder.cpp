#include "dstts/style_encoder.hpp"

#include <stdexcept>

namespace dstts {

Tensor mel_to_tensor(const MelSpectrogram& mel) {
  if (mel.frames.empty()) throw std::invalid_argument("empty mel input");
  Tensor t({mel.frame_count(), kMelBins});
  for (int i = 0; i < mel.frame_count(); ++i)
    for (int j = 0; j < kMelBins; ++j) t.at(i, j) = mel.frames[i][j];
  return t;
}

Tensor mfcc_to_tensor(const MfccSequence& m) {
  if (m.frames.empty()) throw std::invalid_argument("empty MFCC input");
  Tensor t({m.frame_count(), kMfccCoeffs});
  for (int i = 0; i < m.frame_count(); ++i)
    for (int j = 0; j < kMfccCoeffs; ++j) t.at(i, j) = m.frames[i][j];
  return t;
}

MelStyleEncoder::MelStyleEncoder(ParameterStore& store, const std::string& prefix,
                                 int width_, int heads, uint64_t seed)
    : width(width_) {
  spectral1 = Linear(store, prefix + ".spectral1", kMelBins, width, seed);
  spectral2 = Linear(store, prefix + ".spectral2", width, width, seed);
  gate_conv = Conv1d(store, prefix + ".gate_conv", 5, width, 2 * width, seed);
  attn = MultiHeadAttention(store, prefix + ".attn", width, heads, seed);
  out_proj = Linear(store, prefix + ".out", width, width, seed);
}

Var MelStyleEncoder::forward(Tape& t, Var mel) const {
  if (t.value(mel).rows() < 1) throw std::invalid_argument("mel style encoder: empty input");
  Var x = t.relu_op(spectral1.forward(t, mel));
  x = t.relu_op(spectral2.forward(t, x));
  // gated temporal convolution with residual
  Var g = gate_conv.forward(t, x);
  Var lin = t.slice_cols(g, 0, width);
  Var gate = t.sigmoid_op(t.slice_cols(g, width, width));
  x = t.add(x, t.mul(lin, gate));
  x = t.add(x, attn.forward(t, x));
  Var pooled = t.mean_rows(x);
  return out_proj.forward(t, pooled);
}

MfccStyleEncoder::MfccStyleEncoder(ParameterStore& store, const std::string& prefix,
                                   int width_, int heads, uint64_t seed)
    : width(width_) {
  if (width % 2 != 0) throw std::invalid_argument("mfcc style encoder: width must be even");
  fwd = LstmDirection(store, prefix + ".fwd", kMfccCoeffs, width / 2, false, seed);
  bwd = LstmDirection(store, prefix + ".bwd", kMfccCoeffs, width / 2, true, seed);
  attn = MultiHeadAttention(store, prefix + ".attn", width, heads, seed);
}

Var MfccStyleEncoder::forward(Tape& t, Var mfcc) const {
  if (t.value(mfcc).rows() < 1)
    throw std::invalid_argument("mfcc style encoder: empty input");
  Var h = t.concat_cols(fwd.forward(t, mfcc), bwd.forward(t, mfcc));
  h = t.add(h, attn.forward(t, h));
  return t.mean_rows(h);
}

DualStyleEncoder::DualStyleEncoder(ParameterStore& store, const std::string& prefix,
                                   int width_, int heads, bool no_mfcc_, uint64_t seed)
    : no_mfcc(no_mfcc_), width(width_) {
  mel_enc = MelStyleEncoder(store, prefix + ".mel", width, heads, seed);
  if (no_mfcc)
    mel_only_proj = Linear(store, prefix + ".mel_only_proj", width, width, seed);
  else
    mfcc_enc = MfccStyleEncoder(store, prefix + ".mfcc", width, heads, seed);
}

Var DualStyleEncoder::forward(Tape& t, Var mel, Var mfcc) const {
  Var mel_part = mel_enc.forward(t, mel);
  Var second = no_mfcc ? mel_only_proj.forward(t, mel_part)
                       : mfcc_enc.forward(t, mfcc);
  return t.concat_cols(mel_part, second);
}

}  // namespace dstts
