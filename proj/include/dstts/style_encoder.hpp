#pragma once

#include "dstts/dsp.hpp"
#include "dstts/layers.hpp"

namespace dstts {

Tensor mel_to_tensor(const MelSpectrogram& mel);
Tensor mfcc_to_tensor(const MfccSequence& mfcc);

// Spectral transform -> gated temporal convolution with residual -> two-head
// self-attention with residual -> temporal mean pooling -> projection.
struct MelStyleEncoder {
  Linear spectral1, spectral2;
  Conv1d gate_conv;  // width -> 2*width, GLU
  MultiHeadAttention attn;
  Linear out_proj;
  int width = 0;

  MelStyleEncoder() = default;
  MelStyleEncoder(ParameterStore& store, const std::string& prefix, int width,
                  int heads, uint64_t seed);
  Var forward(Tape& t, Var mel) const;  // (T, 80) -> (1, width)
};

// Bidirectional recurrence -> two-head self-attention with residual ->
// temporal mean pooling. Pooled width is already `width`, so no projection.
struct MfccStyleEncoder {
  LstmDirection fwd, bwd;
  MultiHeadAttention attn;
  int width = 0;

  MfccStyleEncoder() = default;
  MfccStyleEncoder(ParameterStore& store, const std::string& prefix, int width,
                   int heads, uint64_t seed);
  Var forward(Tape& t, Var mfcc) const;  // (T, 20) -> (1, width)
};

// Concatenates [mel-style || mfcc-style] into the speaker style vector.
// In no_mfcc mode the second half is a learned projection of the first so
// downstream shapes stay fixed.
struct DualStyleEncoder {
  MelStyleEncoder mel_enc;
  MfccStyleEncoder mfcc_enc;
  Linear mel_only_proj;
  bool no_mfcc = false;
  int width = 0;

  DualStyleEncoder() = default;
  DualStyleEncoder(ParameterStore& store, const std::string& prefix, int width,
                   int heads, bool no_mfcc, uint64_t seed);
  Var forward(Tape& t, Var mel, Var mfcc) const;  // -> (1, 2*width)
  int style_dim() const { return 2 * width; }
};

}  // namespace dstts
