#pragma once

#include "dstts/config.hpp"
#include "dstts/layers.hpp"

namespace dstts {

enum class Branch { Short, Long };

struct RoutingDecision {
  Branch branch = Branch::Short;
  int sequence_length = 0;
  int threshold = 0;
};

const char* branch_name(Branch b);

// Short iff length <= threshold.
RoutingDecision route(int length, int threshold);

enum class VarianceKind { Duration, Pitch, Energy };
const char* variance_kind_name(VarianceKind k);

// Two convolution stages (ReLU, per-step normalization, dropout) and an
// output head: a linear layer on the long branch, a convolution on the short
// branch.
struct VariancePredictor {
  Conv1d conv1, conv2;
  LayerNorm norm1, norm2;
  Linear linear_head;  // long branch
  Conv1d conv_head;    // short branch
  Branch branch = Branch::Short;
  double dropout = 0.5;

  VariancePredictor() = default;
  VariancePredictor(ParameterStore& store, const std::string& prefix, int hidden,
                    int kernel, double dropout, Branch branch, uint64_t seed);
  Var forward(Tape& t, Var h, bool training, Rng& rng) const;  // (T,H) -> (T,1)
};

// Repeats row i durations[i] times, preserving order.
Var length_regulate(Tape& t, Var hidden, const std::vector<int>& durations);

// hidden + pitch * w_p + b_p + energy * w_e + b_e, per frame.
struct VarianceInjector {
  Parameter* pitch_w = nullptr;   // (1, H)
  Parameter* pitch_b = nullptr;   // (1, H)
  Parameter* energy_w = nullptr;  // (1, H)
  Parameter* energy_b = nullptr;  // (1, H)

  VarianceInjector() = default;
  VarianceInjector(ParameterStore& store, const std::string& prefix, int hidden,
                   uint64_t seed);
  // pitch/energy: (T,1) columns (Var or constant via tape.constant)
  Var forward(Tape& t, Var hidden, Var pitch, Var energy) const;
};

struct VariancePredictions {
  Var log_duration;  // (P,1)
  Var pitch;         // (P,1) standardized
  Var energy;        // (P,1) standardized
  RoutingDecision decision;
};

struct AdaptorTargets {
  std::vector<int> durations;   // frames per phoneme
  std::vector<double> pitch;    // standardized, per phoneme
  std::vector<double> energy;   // standardized, per phoneme
};

struct AdaptorOutput {
  Var frames;  // (sum durations, H)
  VariancePredictions predictions;
  std::vector<int> durations_used;
};

// Routed duration/pitch/energy prediction, length regulation, and prosody
// re-injection. Six predictor instances exist by default; ablation flags drop
// one branch and route every sequence to the other.
struct VarianceAdaptor {
  std::vector<VariancePredictor> predictors;  // indexed by kind*2 + branch
  VarianceInjector injector;
  int threshold = 85;
  bool no_sp = false;
  bool no_lp = false;

  VarianceAdaptor() = default;
  VarianceAdaptor(ParameterStore& store, const std::string& prefix,
                  const RunConfig& cfg, uint64_t seed);

  RoutingDecision decide(int length) const;
  const VariancePredictor& predictor(VarianceKind kind, Branch branch) const;
  VariancePredictions predict(Tape& t, Var hidden, bool training, Rng& rng) const;

  // Teacher forcing: regulate with target durations and inject target
  // pitch/energy; predictions are returned for the loss terms.
  AdaptorOutput forward_teacher(Tape& t, Var hidden, const AdaptorTargets& targets,
                                bool training, Rng& rng) const;
  // Inference: durations round(exp(pred)-1) clamped to >= 1; predicted
  // pitch/energy broadcast across each phoneme's frames.
  AdaptorOutput forward_infer(Tape& t, Var hidden) const;
};

}  // namespace dstts
