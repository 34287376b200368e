#include "dstts/model.hpp"

#include <stdexcept>

namespace dstts {

DsTtsModel::DsTtsModel(const RunConfig& cfg, int vocab_size)
    : cfg_(cfg), vocab_size_(vocab_size) {
  cfg_.validate();
  if (vocab_size < 2) throw std::invalid_argument("model: vocabulary too small");
  const uint64_t seed = cfg_.seed;
  const int style_dim = 2 * cfg_.style_width;
  style_enc_ = DualStyleEncoder(store_, "style", cfg_.style_width, cfg_.heads,
                                cfg_.no_mfcc, seed);
  encoder_ = PhonemeEncoder(store_, "enc", vocab_size, cfg_, style_dim, seed);
  decoder_ = MelDecoder(store_, "dec", cfg_, style_dim, seed);
  adaptor_ = VarianceAdaptor(store_, "dva", cfg_, seed);
}

Var DsTtsModel::style(Tape& t, const Tensor& mel, const Tensor& mfcc) const {
  Var mel_var = t.constant(mel);
  Var mfcc_var = t.constant(mfcc);
  return style_enc_.forward(t, mel_var, mfcc_var);
}

Tensor DsTtsModel::style_values(const Tensor& mel, const Tensor& mfcc) const {
  Tape t;
  return t.value(style(t, mel, mfcc));
}

ForwardOutput DsTtsModel::forward_teacher(Tape& t, const TrainItem& item, bool training,
                                          Rng& rng) const {
  if (item.phoneme_ids.empty()) throw std::invalid_argument("forward: empty phonemes");
  if (item.durations.size() != item.phoneme_ids.size())
    throw std::invalid_argument("forward: durations length mismatch");
  ForwardOutput out;
  out.style = style(t, item.mel, item.mfcc);
  Var enc = encoder_.forward(t, item.phoneme_ids, out.style, nullptr, training, rng);
  AdaptorTargets targets{item.durations, item.pitch_std, item.energy_std};
  AdaptorOutput a = adaptor_.forward_teacher(t, enc, targets, training, rng);
  out.predictions = a.predictions;
  out.durations_used = a.durations_used;
  out.mel = decoder_.forward(t, a.frames, out.style, nullptr, training, rng);
  return out;
}

ForwardOutput DsTtsModel::forward_infer(Tape& t, const std::vector<int>& phoneme_ids,
                                        Var style_vec) const {
  if (phoneme_ids.empty()) throw std::invalid_argument("forward: empty phonemes");
  Rng rng(0);  // inference runs without dropout
  ForwardOutput out;
  out.style = style_vec;
  Var enc = encoder_.forward(t, phoneme_ids, style_vec, nullptr, false, rng);
  AdaptorOutput a = adaptor_.forward_infer(t, enc);
  out.predictions = a.predictions;
  out.durations_used = a.durations_used;
  out.mel = decoder_.forward(t, a.frames, style_vec, nullptr, false, rng);
  return out;
}

}  // namespace dstts
