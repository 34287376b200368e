#pragma once

#include <vector>

#include "dstts/layers.hpp"

namespace dstts {

constexpr double kSgfNormEps = 1e-8;

// Style Gating-FiLM. Hidden features are standardized per time step, the
// style vector is projected to four modulation parameters, and a gate blends
// the scale/shift pair toward the auxiliary parameter:
//   gamma_eff = gamma * delta + eta * (1 - delta)
//   beta_eff  = beta  * delta + eta * (1 - delta)
//   out       = gamma_eff * normalize(h) + beta_eff
struct SgfLayer {
  Linear proj_gamma, proj_beta, proj_eta, proj_delta;
  int hidden = 0;

  SgfLayer() = default;
  SgfLayer(ParameterStore& store, const std::string& prefix, int style_dim,
           int hidden, uint64_t seed);

  struct Projections {
    Var gamma, beta, eta, delta;  // each (1, H)
  };
  Projections project(Tape& t, Var style) const;
  // style: (1, style_dim); h: (T, H)
  Var modulate(Tape& t, Var h, Var style) const;

  // Sets all four projection weight matrices to zero, keeping the stated
  // biases (delta 1, others 0). Used to reproduce the documented
  // zero-output initialization state.
  void zero_projection_weights();
};

// Plain-vector entry points used by tests and standalone checks; they run a
// throwaway tape so there is exactly one implementation of the math.
std::vector<double> sgf_normalize(const std::vector<double>& h);
void sgf_blend(const std::vector<double>& gamma, const std::vector<double>& beta,
               const std::vector<double>& eta, const std::vector<double>& delta,
               std::vector<double>& gamma_eff, std::vector<double>& beta_eff);

}  // namespace dstts
