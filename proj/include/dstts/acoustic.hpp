#pragma once

#include "dstts/config.hpp"
#include "dstts/sgf.hpp"

namespace dstts {

// Self-attention and convolutional sublayers, each followed by a residual add
// and an SGF modulation in the normalization slot.
struct FftBlock {
  MultiHeadAttention attn;
  SgfLayer sgf_attn, sgf_conv;
  Conv1d conv_wide;    // kernel k, H -> F
  Conv1d conv_narrow;  // kernel 1, F -> H
  double dropout = 0.0;

  FftBlock() = default;
  FftBlock(ParameterStore& store, const std::string& prefix, int hidden,
           int style_dim, int heads, int filter, int kernel, double dropout,
           uint64_t seed);
  // training=true enables dropout driven by `rng`.
  Var forward(Tape& t, Var h, Var style, const std::vector<uint8_t>* keep,
              bool training, Rng& rng, AttentionCapture* capture = nullptr) const;
};

struct PhonemeEncoder {
  Parameter* embedding = nullptr;  // (vocab, H)
  std::vector<FftBlock> blocks;
  int hidden = 0;

  PhonemeEncoder() = default;
  PhonemeEncoder(ParameterStore& store, const std::string& prefix, int vocab,
                 const RunConfig& cfg, int style_dim, uint64_t seed);
  Var embed(Tape& t, const std::vector<int>& ids) const;
  Var forward(Tape& t, const std::vector<int>& ids, Var style,
              const std::vector<uint8_t>* keep, bool training, Rng& rng) const;
};

struct MelDecoder {
  std::vector<FftBlock> blocks;
  Linear out_proj;  // H -> 80
  int hidden = 0;

  MelDecoder() = default;
  MelDecoder(ParameterStore& store, const std::string& prefix, const RunConfig& cfg,
             int style_dim, uint64_t seed);
  // frames: (T, H) frame-level hidden sequence (post length regulation)
  Var forward(Tape& t, Var frames, Var style, const std::vector<uint8_t>* keep,
              bool training, Rng& rng) const;
};

}  // namespace dstts
