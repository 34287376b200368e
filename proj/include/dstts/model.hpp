#pragma once

#include <memory>

#include "dstts/acoustic.hpp"
#include "dstts/style_encoder.hpp"
#include "dstts/variance.hpp"

namespace dstts {

// One teacher-forcing-ready utterance: phoneme ids, per-phoneme supervision,
// and the acoustic features of the same clip (which also serve as the style
// reference during training).
struct TrainItem {
  std::string id;
  std::vector<int> phoneme_ids;
  std::vector<int> durations;          // sums to mel frame count
  std::vector<double> pitch_std;       // standardized, per phoneme
  std::vector<double> energy_std;      // standardized, per phoneme
  Tensor mel;                          // (T, 80)
  Tensor mfcc;                         // (T, 20)
};

struct ForwardOutput {
  Var mel;  // (T, 80)
  VariancePredictions predictions;
  std::vector<int> durations_used;
  Var style;
};

class DsTtsModel {
 public:
  DsTtsModel(const RunConfig& cfg, int vocab_size);

  const RunConfig& config() const { return cfg_; }
  int vocab_size() const { return vocab_size_; }
  ParameterStore& params() { return store_; }
  const ParameterStore& params() const { return store_; }

  DualStyleEncoder& style_encoder() { return style_enc_; }
  PhonemeEncoder& phoneme_encoder() { return encoder_; }
  MelDecoder& decoder() { return decoder_; }
  VarianceAdaptor& adaptor() { return adaptor_; }

  Var style(Tape& t, const Tensor& mel, const Tensor& mfcc) const;
  // Style vector as plain values (inference convenience).
  Tensor style_values(const Tensor& mel, const Tensor& mfcc) const;

  ForwardOutput forward_teacher(Tape& t, const TrainItem& item, bool training,
                                Rng& rng) const;
  ForwardOutput forward_infer(Tape& t, const std::vector<int>& phoneme_ids,
                              Var style_vec) const;

 private:
  RunConfig cfg_;
  int vocab_size_ = 0;
  ParameterStore store_;
  DualStyleEncoder style_enc_;
  PhonemeEncoder encoder_;
  MelDecoder decoder_;
  VarianceAdaptor adaptor_;
};

}  // namespace dstts
