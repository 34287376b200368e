#pragma once

#include "dstts/model.hpp"

namespace dstts {

// Four-term objective. `total` is always the fold-left sum
// ((l_rec + l_d) + l_e) + l_p so the additivity contract is bit-exact.
struct LossBreakdown {
  double l_rec = 0.0;
  double l_d = 0.0;
  double l_e = 0.0;
  double l_p = 0.0;
  double total = 0.0;

  static double fold(double rec, double d, double e, double p) {
    return ((rec + d) + e) + p;
  }
};

// Plain reference implementations (throw on length/shape mismatch).
double mse(const std::vector<double>& z, const std::vector<double>& z_prime);
double mel_mae(const Tensor& pred, const Tensor& target);

struct LossVars {
  Var l_rec, l_d, l_e, l_p, total;
};

// Teacher-forced losses for one utterance: mel MAE plus MSE on
// log(1+duration), standardized pitch, standardized energy.
LossVars compute_losses(Tape& t, const ForwardOutput& out, const TrainItem& item);

LossBreakdown loss_values(const Tape& t, const LossVars& v);

}  // namespace dstts
