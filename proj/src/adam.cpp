#include "dstts/adam.hpp"

#include <cmath>

namespace dstts {

void Adam::step(ParameterStore& store, double lr) {
  for (auto& [name, p] : store.all())
    for (double g : p.grad.data)
      if (!std::isfinite(g))
        throw NumericalError("non-finite gradient in parameter " + name);

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, p] : store.all()) {
    Moments& mo = state_[name];
    if (mo.m.size() != p.value.size()) {
      mo.m = Tensor(p.value.shape);
      mo.v = Tensor(p.value.shape);
    }
    for (size_t i = 0; i < p.value.data.size(); ++i) {
      const double g = p.grad.data[i];
      mo.m.data[i] = cfg_.beta1 * mo.m.data[i] + (1.0 - cfg_.beta1) * g;
      mo.v.data[i] = cfg_.beta2 * mo.v.data[i] + (1.0 - cfg_.beta2) * g * g;
      const double m_hat = mo.m.data[i] / bc1;
      const double v_hat = mo.v.data[i] / bc2;
      p.value.data[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
    }
  }
}

}  // namespace dstts
