#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "dstts/autodiff.hpp"

namespace dstts {

// Raised when training hits a non-finite loss or gradient; the CLI maps it
// to exit code 2.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
};

// Bias-corrected Adam over a ParameterStore; moment buffers are keyed by
// parameter name.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update from the gradients currently held in `store`.
  // Throws NumericalError on a non-finite gradient.
  void step(ParameterStore& store, double lr);

  long long step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    Tensor m, v;
  };
  AdamConfig cfg_;
  std::map<std::string, Moments> state_;
  long long t_ = 0;
};

}  // namespace dstts
