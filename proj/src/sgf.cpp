#include "dstts/sgf.hpp"

#include <stdexcept>

namespace dstts {

SgfLayer::SgfLayer(ParameterStore& store, const std::string& prefix, int style_dim,
                   int hidden_, uint64_t seed)
    : hidden(hidden_) {
  proj_gamma = Linear(store, prefix + ".gamma", style_dim, hidden, seed);
  proj_beta = Linear(store, prefix + ".beta", style_dim, hidden, seed);
  proj_eta = Linear(store, prefix + ".eta", style_dim, hidden, seed);
  proj_delta = Linear(store, prefix + ".delta", style_dim, hidden, seed);
  for (double& x : proj_delta.b->value.data) x = 1.0;
}

SgfLayer::Projections SgfLayer::project(Tape& t, Var style) const {
  Projections p;
  p.gamma = t.tanh_op(proj_gamma.forward(t, style));
  p.beta = t.tanh_op(proj_beta.forward(t, style));
  p.eta = t.tanh_op(proj_eta.forward(t, style));
  p.delta = t.sigmoid_op(proj_delta.forward(t, style));
  return p;
}

Var SgfLayer::modulate(Tape& t, Var h, Var style) const {
  Var y = t.normalize_rows(h, kSgfNormEps);
  Projections p = project(t, style);
  Var one = t.constant(Tensor::full({1, hidden}, 1.0));
  Var inv_delta = t.sub(one, p.delta);
  Var gamma_eff = t.add(t.mul(p.gamma, p.delta), t.mul(p.eta, inv_delta));
  Var beta_eff = t.add(t.mul(p.beta, p.delta), t.mul(p.eta, inv_delta));
  return t.add_row(t.mul_row(y, gamma_eff), beta_eff);
}

void SgfLayer::zero_projection_weights() {
  for (Linear* l : {&proj_gamma, &proj_beta, &proj_eta, &proj_delta})
    for (double& x : l->w->value.data) x = 0.0;
}

std::vector<double> sgf_normalize(const std::vector<double>& h) {
  if (h.empty()) throw std::invalid_argument("sgf_normalize: empty vector");
  Tape t;
  Var x = t.constant(Tensor::row_vector(h));
  Var y = t.normalize_rows(x, kSgfNormEps);
  return t.value(y).data;
}

void sgf_blend(const std::vector<double>& gamma, const std::vector<double>& beta,
               const std::vector<double>& eta, const std::vector<double>& delta,
               std::vector<double>& gamma_eff, std::vector<double>& beta_eff) {
  const size_t n = gamma.size();
  if (beta.size() != n || eta.size() != n || delta.size() != n)
    throw std::invalid_argument("sgf_blend: length mismatch");
  gamma_eff.resize(n);
  beta_eff.resize(n);
  for (size_t i = 0; i < n; ++i) {
    gamma_eff[i] = gamma[i] * delta[i] + eta[i] * (1.0 - delta[i]);
    beta_eff[i] = beta[i] * delta[i] + eta[i] * (1.0 - delta[i]);
  }
}

}  // namespace dstts
