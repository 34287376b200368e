#include "dstts/train.hpp"

#include <cmath>
#include <stdexcept>

namespace dstts {

namespace {

struct BatchLossVars {
  Var l_rec, l_d, l_e, l_p, total;
};

BatchLossVars batch_forward(Tape& t, DsTtsModel& model,
                            const std::vector<TrainItem>& batch, bool training,
                            long long step_index) {
  if (batch.empty()) throw std::invalid_argument("train: empty batch");
  Rng rng(mix_seed(model.config().seed + static_cast<uint64_t>(step_index), "dropout"));
  BatchLossVars acc;
  for (size_t i = 0; i < batch.size(); ++i) {
    ForwardOutput out = model.forward_teacher(t, batch[i], training, rng);
    LossVars v = compute_losses(t, out, batch[i]);
    if (i == 0) {
      acc.l_rec = v.l_rec;
      acc.l_d = v.l_d;
      acc.l_e = v.l_e;
      acc.l_p = v.l_p;
    } else {
      acc.l_rec = t.add(acc.l_rec, v.l_rec);
      acc.l_d = t.add(acc.l_d, v.l_d);
      acc.l_e = t.add(acc.l_e, v.l_e);
      acc.l_p = t.add(acc.l_p, v.l_p);
    }
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  acc.l_rec = t.scale(acc.l_rec, inv);
  acc.l_d = t.scale(acc.l_d, inv);
  acc.l_e = t.scale(acc.l_e, inv);
  acc.l_p = t.scale(acc.l_p, inv);
  acc.total = t.add(t.add(t.add(acc.l_rec, acc.l_d), acc.l_e), acc.l_p);
  return acc;
}

LossBreakdown values_of(const Tape& t, const BatchLossVars& v) {
  LossBreakdown b;
  b.l_rec = t.scalar(v.l_rec);
  b.l_d = t.scalar(v.l_d);
  b.l_e = t.scalar(v.l_e);
  b.l_p = t.scalar(v.l_p);
  b.total = LossBreakdown::fold(b.l_rec, b.l_d, b.l_e, b.l_p);
  return b;
}

}  // namespace

LossBreakdown batch_loss(DsTtsModel& model, const std::vector<TrainItem>& batch,
                         bool training, long long step_index, bool accumulate_grads) {
  Tape t;
  BatchLossVars v = batch_forward(t, model, batch, training, step_index);
  if (accumulate_grads) {
    model.params().zero_grads();
    t.backward(v.total);
  }
  return values_of(t, v);
}

LossBreakdown train_step(DsTtsModel& model, const std::vector<TrainItem>& batch,
                         Adam& optimizer, double lr, long long step_index) {
  LossBreakdown loss = batch_loss(model, batch, true, step_index, true);
  if (!std::isfinite(loss.total))
    throw NumericalError("non-finite loss at step " + std::to_string(step_index));
  optimizer.step(model.params(), lr);
  return loss;
}

GradCheckResult finite_difference_check(ParameterStore& store,
                                        const std::function<double()>& loss_fn,
                                        const GradCheckOptions& opts) {
  GradCheckResult result;
  for (auto& [name, p] : store.all()) {
    const long long n = p.value.size();
    std::vector<long long> indices;
    if (n <= opts.samples_per_tensor) {
      for (long long i = 0; i < n; ++i) indices.push_back(i);
    } else {
      Rng rng(mix_seed(opts.sample_seed, name));
      for (int i = 0; i < opts.samples_per_tensor; ++i)
        indices.push_back(static_cast<long long>(rng.next_u64() % static_cast<uint64_t>(n)));
    }
    const double corrupt = (name == opts.corrupt_tensor) ? 2.0 : 1.0;
    for (long long idx : indices) {
      const double saved = p.value.data[idx];
      p.value.data[idx] = saved + opts.step;
      const double up = loss_fn();
      p.value.data[idx] = saved - opts.step;
      const double down = loss_fn();
      p.value.data[idx] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double analytic = p.grad.data[idx] * corrupt;
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), opts.floor});
      const double rel = std::fabs(analytic - numeric) / denom;
      ++result.checked_entries;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_tensor = name;
      }
    }
  }
  return result;
}

GradCheckResult grad_check(DsTtsModel& model, const std::vector<TrainItem>& batch,
                           const GradCheckOptions& opts) {
  // Dropout off so the finite-difference landscape matches the analytic pass.
  batch_loss(model, batch, false, 0, true);
  auto loss_fn = [&]() { return batch_loss(model, batch, false, 0, false).total; };
  return finite_difference_check(model.params(), loss_fn, opts);
}

RunConfig tiny_config() {
  RunConfig cfg;
  cfg.model_dim = 16;
  cfg.style_width = 8;
  cfg.enc_blocks = 2;
  cfg.dec_blocks = 2;
  cfg.heads = 2;
  cfg.conv_filter = 32;
  cfg.conv_kernel = 9;
  cfg.predictor_kernel = 3;
  cfg.dropout = 0.1;
  cfg.predictor_dropout = 0.5;
  cfg.batch = 2;
  return cfg;
}

std::vector<TrainItem> synthetic_batch(int vocab_size, int count, uint64_t seed) {
  std::vector<TrainItem> items;
  Rng rng(mix_seed(seed, "synthetic-batch"));
  for (int u = 0; u < count; ++u) {
    TrainItem item;
    item.id = "synthetic-" + std::to_string(u);
    const int phonemes = rng.uniform_int(4, 7);
    int frames = 0;
    for (int i = 0; i < phonemes; ++i) {
      item.phoneme_ids.push_back(rng.uniform_int(1, vocab_size - 1));
      const int d = rng.uniform_int(1, 4);
      item.durations.push_back(d);
      frames += d;
      item.pitch_std.push_back(rng.uniform(-1.5, 1.5));
      item.energy_std.push_back(rng.uniform(-1.5, 1.5));
    }
    item.mel = Tensor({frames, 80});
    for (double& x : item.mel.data) x = rng.uniform(-6.0, 1.0);
    item.mfcc = Tensor({frames, 20});
    for (int r = 0; r < frames; ++r) {
      double norm2 = 0.0;
      for (int c = 0; c < 20; ++c) {
        const double v = rng.uniform(-1.0, 1.0);
        item.mfcc.at(r, c) = v;
        norm2 += v * v;
      }
      const double inv = 1.0 / std::sqrt(norm2);
      for (int c = 0; c < 20; ++c) item.mfcc.at(r, c) *= inv;
    }
    items.push_back(std::move(item));
  }
  return items;
}

}  // namespace dstts
