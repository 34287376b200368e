#include "dstts/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace dstts {

Tensor positional_encoding(int length, int dim) {
  Tensor pe({length, dim});
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
      pe.at(pos, i) = std::sin(pos * freq);
      if (i + 1 < dim) pe.at(pos, i + 1) = std::cos(pos * freq);
    }
  }
  return pe;
}

Linear::Linear(ParameterStore& store, const std::string& prefix, int in, int out,
               uint64_t seed) {
  w = &store.create(prefix + ".w", {in, out}, ParameterStore::Init::UniformFanIn, seed, in);
  b = &store.create(prefix + ".b", {1, out}, ParameterStore::Init::Zeros, seed);
}

Var Linear::forward(Tape& t, Var x) const {
  return t.add_row(t.matmul(x, t.param(*w)), t.param(*b));
}

Conv1d::Conv1d(ParameterStore& store, const std::string& prefix, int kernel, int in,
               int out, uint64_t seed) {
  w = &store.create(prefix + ".w", {kernel, in, out}, ParameterStore::Init::UniformFanIn,
                    seed, kernel * in);
  b = &store.create(prefix + ".b", {1, out}, ParameterStore::Init::Zeros, seed);
}

Var Conv1d::forward(Tape& t, Var x) const {
  return t.conv1d(x, t.param(*w), t.param(*b));
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& prefix, int dim) {
  gain = &store.create(prefix + ".g", {1, dim}, ParameterStore::Init::Ones, 0);
  bias = &store.create(prefix + ".b", {1, dim}, ParameterStore::Init::Zeros, 0);
}

Var LayerNorm::forward(Tape& t, Var x) const {
  Var y = t.normalize_rows(x, 1e-8);
  return t.add_row(t.mul_row(y, t.param(*gain)), t.param(*bias));
}

MultiHeadAttention::MultiHeadAttention(ParameterStore& store, const std::string& prefix,
                                       int dim_, int heads_, uint64_t seed)
    : heads(heads_), dim(dim_) {
  if (dim % heads != 0) throw std::invalid_argument("attention: heads must divide dim");
  wq = Linear(store, prefix + ".wq", dim, dim, seed);
  wk = Linear(store, prefix + ".wk", dim, dim, seed);
  wv = Linear(store, prefix + ".wv", dim, dim, seed);
  wo = Linear(store, prefix + ".wo", dim, dim, seed);
}

Var MultiHeadAttention::forward(Tape& t, Var x, const std::vector<uint8_t>* keep,
                                AttentionCapture* capture) const {
  const int T = t.value(x).rows();
  const int dh = dim / heads;
  Var q = wq.forward(t, x);
  Var k = wk.forward(t, x);
  Var v = wv.forward(t, x);

  std::optional<Tensor> mask;
  if (keep) {
    if (static_cast<int>(keep->size()) != T)
      throw std::invalid_argument("attention: mask length mismatch");
    mask = Tensor({T, T});
    for (int i = 0; i < T; ++i)
      for (int j = 0; j < T; ++j) mask->at(i, j) = (*keep)[j] ? 0.0 : -1e9;
  }

  Var ctx{};
  for (int h = 0; h < heads; ++h) {
    Var qh = t.slice_cols(q, h * dh, dh);
    Var kh = t.slice_cols(k, h * dh, dh);
    Var vh = t.slice_cols(v, h * dh, dh);
    Var scores = t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    Var probs = t.softmax_rows(scores, mask ? &*mask : nullptr);
    if (capture) capture->head_weights.push_back(t.value(probs));
    Var ctx_h = t.matmul(probs, vh);
    ctx = h == 0 ? ctx_h : t.concat_cols(ctx, ctx_h);
  }
  Var out = wo.forward(t, ctx);
  if (keep) out = apply_row_mask(t, out, *keep);
  return out;
}

LstmDirection::LstmDirection(ParameterStore& store, const std::string& prefix, int in,
                             int hidden_, bool reverse_, uint64_t seed)
    : hidden(hidden_), reverse(reverse_) {
  w_ih = &store.create(prefix + ".w_ih", {in, 4 * hidden},
                       ParameterStore::Init::UniformFanIn, seed, in);
  w_hh = &store.create(prefix + ".w_hh", {hidden, 4 * hidden},
                       ParameterStore::Init::UniformFanIn, seed, hidden);
  b = &store.create(prefix + ".b", {1, 4 * hidden}, ParameterStore::Init::Zeros, seed);
  for (int j = hidden; j < 2 * hidden; ++j) b->value.at(0, j) = 1.0;  // forget gate
}

Var LstmDirection::forward(Tape& t, Var x) const {
  Var input = reverse ? t.reverse_rows(x) : x;
  const int T = t.value(input).rows();
  Var wih = t.param(*w_ih);
  Var whh = t.param(*w_hh);
  Var bias = t.param(*b);
  Var h_prev = t.constant(Tensor({1, hidden}));
  Var c_prev = t.constant(Tensor({1, hidden}));
  std::vector<Var> outputs;
  outputs.reserve(T);
  for (int step = 0; step < T; ++step) {
    Var xt = t.row(input, step);
    Var z = t.add_row(t.add(t.matmul(xt, wih), t.matmul(h_prev, whh)), bias);
    Var ig = t.sigmoid_op(t.slice_cols(z, 0, hidden));
    Var fg = t.sigmoid_op(t.slice_cols(z, hidden, hidden));
    Var gg = t.tanh_op(t.slice_cols(z, 2 * hidden, hidden));
    Var og = t.sigmoid_op(t.slice_cols(z, 3 * hidden, hidden));
    Var c = t.add(t.mul(fg, c_prev), t.mul(ig, gg));
    Var h = t.mul(og, t.tanh_op(c));
    outputs.push_back(h);
    h_prev = h;
    c_prev = c;
  }
  Var stacked = t.stack_rows(outputs);
  return reverse ? t.reverse_rows(stacked) : stacked;
}

Var apply_row_mask(Tape& t, Var x, const std::vector<uint8_t>& keep) {
  const Tensor& xv = t.value(x);
  if (static_cast<int>(keep.size()) != xv.rows())
    throw std::invalid_argument("apply_row_mask: length mismatch");
  Tensor m(xv.shape);
  for (int i = 0; i < xv.rows(); ++i)
    for (int j = 0; j < xv.cols(); ++j) m.at(i, j) = keep[i] ? 1.0 : 0.0;
  return t.mul_const(x, m);
}

}  // namespace dstts
