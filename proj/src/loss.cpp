#include "dstts/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace dstts {

double mse(const std::vector<double>& z, const std::vector<double>& z_prime) {
  if (z.size() != z_prime.size()) throw std::invalid_argument("mse: length mismatch");
  if (z.empty()) throw std::invalid_argument("mse: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    const double d = z[i] - z_prime[i];
    acc += d * d;
  }
  return acc / static_cast<double>(z.size());
}

double mel_mae(const Tensor& pred, const Tensor& target) {
  if (!pred.same_shape(target))
    throw std::invalid_argument("mel_mae: shape mismatch " + pred.shape_str() + " vs " +
                                target.shape_str());
  if (pred.size() == 0) throw std::invalid_argument("mel_mae: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < pred.data.size(); ++i)
    acc += std::fabs(pred.data[i] - target.data[i]);
  return acc / static_cast<double>(pred.size());
}

LossVars compute_losses(Tape& t, const ForwardOutput& out, const TrainItem& item) {
  const size_t P = item.durations.size();
  Tensor log_dur({static_cast<int>(P), 1});
  for (size_t i = 0; i < P; ++i)
    log_dur.data[i] = std::log1p(static_cast<double>(item.durations[i]));
  Tensor pitch({static_cast<int>(P), 1});
  for (size_t i = 0; i < P; ++i) pitch.data[i] = item.pitch_std[i];
  Tensor energy({static_cast<int>(P), 1});
  for (size_t i = 0; i < P; ++i) energy.data[i] = item.energy_std[i];

  LossVars v;
  v.l_rec = t.mae_loss(out.mel, item.mel);
  v.l_d = t.mse_loss(out.predictions.log_duration, log_dur);
  v.l_e = t.mse_loss(out.predictions.energy, energy);
  v.l_p = t.mse_loss(out.predictions.pitch, pitch);
  v.total = t.add(t.add(t.add(v.l_rec, v.l_d), v.l_e), v.l_p);
  return v;
}

LossBreakdown loss_values(const Tape& t, const LossVars& v) {
  LossBreakdown b;
  b.l_rec = t.scalar(v.l_rec);
  b.l_d = t.scalar(v.l_d);
  b.l_e = t.scalar(v.l_e);
  b.l_p = t.scalar(v.l_p);
  b.total = LossBreakdown::fold(b.l_rec, b.l_d, b.l_e, b.l_p);
  return b;
}

}  // namespace dstts
