#pragma once

#include <functional>

#include "dstts/adam.hpp"
#include "dstts/loss.hpp"

namespace dstts {

// One optimization step over a batch of utterances. Loss components are
// averaged across the batch; the returned breakdown is the pre-step loss.
// Throws NumericalError on a non-finite loss.
LossBreakdown train_step(DsTtsModel& model, const std::vector<TrainItem>& batch,
                         Adam& optimizer, double lr, long long step_index);

// Batch loss without an optimizer update. When `accumulate_grads` is set the
// parameter gradients are left populated (zeroed first).
LossBreakdown batch_loss(DsTtsModel& model, const std::vector<TrainItem>& batch,
                         bool training, long long step_index, bool accumulate_grads);

struct GradCheckOptions {
  double step = 1e-5;
  int samples_per_tensor = 32;
  // Relative error floor: |a-n| / max(|a|, |n|, floor). The floor keeps
  // finite-difference noise on near-zero gradients from dominating.
  double floor = 1e-5;
  uint64_t sample_seed = 2024;
  // Multiplies the analytic gradient of one tensor by 2 (fault injection).
  std::string corrupt_tensor;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_tensor;
  long long checked_entries = 0;
};

// Compares the analytic gradients in `store` (populated by the caller)
// against central finite differences of `loss_fn`, sampling up to
// `samples_per_tensor` entries of every tensor.
GradCheckResult finite_difference_check(ParameterStore& store,
                                        const std::function<double()>& loss_fn,
                                        const GradCheckOptions& opts = {});

// Full-model gradient check: analytic gradients of the batch loss vs central
// finite differences, dropout disabled.
GradCheckResult grad_check(DsTtsModel& model, const std::vector<TrainItem>& batch,
                           const GradCheckOptions& opts = {});

// Small configuration for gradient checking (H=16, 2+2 blocks, vocab 5).
RunConfig tiny_config();

// Deterministic synthetic utterances with plausible feature ranges, used by
// the gradient-check harness and smoke tests.
std::vector<TrainItem> synthetic_batch(int vocab_size, int count, uint64_t seed);

}  // namespace dstts
