#include "dstts/acoustic.hpp"

#include <stdexcept>

#include "dstts/dsp.hpp"

namespace dstts {

FftBlock::FftBlock(ParameterStore& store, const std::string& prefix, int hidden,
                   int style_dim, int heads, int filter, int kernel, double dropout_,
                   uint64_t seed)
    : dropout(dropout_) {
  attn = MultiHeadAttention(store, prefix + ".attn", hidden, heads, seed);
  sgf_attn = SgfLayer(store, prefix + ".sgf_attn", style_dim, hidden, seed);
  sgf_conv = SgfLayer(store, prefix + ".sgf_conv", style_dim, hidden, seed);
  conv_wide = Conv1d(store, prefix + ".conv_wide", kernel, hidden, filter, seed);
  conv_narrow = Conv1d(store, prefix + ".conv_narrow", 1, filter, hidden, seed);
}

Var FftBlock::forward(Tape& t, Var h, Var style, const std::vector<uint8_t>* keep,
                      bool training, Rng& rng, AttentionCapture* capture) const {
  Var a = attn.forward(t, h, keep, capture);
  if (training) a = t.dropout(a, dropout, rng);
  Var x = sgf_attn.modulate(t, t.add(h, a), style);
  if (keep) x = apply_row_mask(t, x, *keep);
  Var c = conv_narrow.forward(t, t.relu_op(conv_wide.forward(t, x)));
  if (training) c = t.dropout(c, dropout, rng);
  Var out = sgf_conv.modulate(t, t.add(x, c), style);
  if (keep) out = apply_row_mask(t, out, *keep);
  return out;
}

PhonemeEncoder::PhonemeEncoder(ParameterStore& store, const std::string& prefix,
                               int vocab, const RunConfig& cfg, int style_dim,
                               uint64_t seed)
    : hidden(cfg.model_dim) {
  embedding = &store.create(prefix + ".embedding", {vocab, hidden},
                            ParameterStore::Init::UniformFanIn, seed, hidden);
  for (int i = 0; i < cfg.enc_blocks; ++i)
    blocks.emplace_back(store, prefix + ".block" + std::to_string(i), hidden,
                        style_dim, cfg.heads, cfg.conv_filter, cfg.conv_kernel,
                        cfg.dropout, seed);
}

Var PhonemeEncoder::embed(Tape& t, const std::vector<int>& ids) const {
  Var e = t.embed(t.param(*embedding), ids);
  Tensor pe = positional_encoding(static_cast<int>(ids.size()), hidden);
  return t.add(e, t.constant(std::move(pe)));
}

Var PhonemeEncoder::forward(Tape& t, const std::vector<int>& ids, Var style,
                            const std::vector<uint8_t>* keep, bool training,
                            Rng& rng) const {
  if (ids.empty()) throw std::invalid_argument("phoneme encoder: empty sequence");
  Var h = embed(t, ids);
  if (keep) h = apply_row_mask(t, h, *keep);
  for (const FftBlock& b : blocks) h = b.forward(t, h, style, keep, training, rng);
  return h;
}

MelDecoder::MelDecoder(ParameterStore& store, const std::string& prefix,
                       const RunConfig& cfg, int style_dim, uint64_t seed)
    : hidden(cfg.model_dim) {
  for (int i = 0; i < cfg.dec_blocks; ++i)
    blocks.emplace_back(store, prefix + ".block" + std::to_string(i), hidden,
                        style_dim, cfg.heads, cfg.conv_filter, cfg.conv_kernel,
                        cfg.dropout, seed);
  out_proj = Linear(store, prefix + ".proj", hidden, kMelBins, seed);
}

Var MelDecoder::forward(Tape& t, Var frames, Var style,
                        const std::vector<uint8_t>* keep, bool training,
                        Rng& rng) const {
  Var h = t.add(frames, t.constant(positional_encoding(t.value(frames).rows(), hidden)));
  if (keep) h = apply_row_mask(t, h, *keep);
  for (const FftBlock& b : blocks) h = b.forward(t, h, style, keep, training, rng);
  return out_proj.forward(t, h);
}

}  // namespace dstts
