#include "dstts/variance.hpp"

#include <cmath>
#include <stdexcept>

namespace dstts {

const char* branch_name(Branch b) { return b == Branch::Short ? "Short" : "Long"; }

const char* variance_kind_name(VarianceKind k) {
  switch (k) {
    case VarianceKind::Duration: return "duration";
    case VarianceKind::Pitch: return "pitch";
    case VarianceKind::Energy: return "energy";
  }
  return "?";
}

RoutingDecision route(int length, int threshold) {
  if (length < 1) throw std::invalid_argument("route: length must be >= 1");
  if (threshold < 1) throw std::invalid_argument("route: threshold must be >= 1");
  RoutingDecision d;
  d.sequence_length = length;
  d.threshold = threshold;
  d.branch = length <= threshold ? Branch::Short : Branch::Long;
  return d;
}

VariancePredictor::VariancePredictor(ParameterStore& store, const std::string& prefix,
                                     int hidden, int kernel, double dropout_,
                                     Branch branch_, uint64_t seed)
    : branch(branch_), dropout(dropout_) {
  conv1 = Conv1d(store, prefix + ".conv1", kernel, hidden, hidden, seed);
  conv2 = Conv1d(store, prefix + ".conv2", kernel, hidden, hidden, seed);
  norm1 = LayerNorm(store, prefix + ".norm1", hidden);
  norm2 = LayerNorm(store, prefix + ".norm2", hidden);
  if (branch == Branch::Long)
    linear_head = Linear(store, prefix + ".head", hidden, 1, seed);
  else
    conv_head = Conv1d(store, prefix + ".head", kernel, hidden, 1, seed);
}

Var VariancePredictor::forward(Tape& t, Var h, bool training, Rng& rng) const {
  Var x = norm1.forward(t, t.relu_op(conv1.forward(t, h)));
  if (training) x = t.dropout(x, dropout, rng);
  x = norm2.forward(t, t.relu_op(conv2.forward(t, x)));
  if (training) x = t.dropout(x, dropout, rng);
  return branch == Branch::Long ? linear_head.forward(t, x) : conv_head.forward(t, x);
}

Var length_regulate(Tape& t, Var hidden, const std::vector<int>& durations) {
  if (static_cast<int>(durations.size()) != t.value(hidden).rows())
    throw std::invalid_argument("length_regulate: durations length mismatch");
  return t.repeat_rows(hidden, durations);
}

VarianceInjector::VarianceInjector(ParameterStore& store, const std::string& prefix,
                                   int hidden, uint64_t seed) {
  pitch_w = &store.create(prefix + ".pitch.w", {1, hidden},
                          ParameterStore::Init::UniformFanIn, seed, 1);
  pitch_b = &store.create(prefix + ".pitch.b", {1, hidden}, ParameterStore::Init::Zeros, seed);
  energy_w = &store.create(prefix + ".energy.w", {1, hidden},
                           ParameterStore::Init::UniformFanIn, seed, 1);
  energy_b = &store.create(prefix + ".energy.b", {1, hidden}, ParameterStore::Init::Zeros, seed);
}

Var VarianceInjector::forward(Tape& t, Var hidden, Var pitch, Var energy) const {
  const Tensor& hv = t.value(hidden);
  if (t.value(pitch).rows() != hv.rows() || t.value(energy).rows() != hv.rows())
    throw std::invalid_argument("variance injection: length mismatch");
  Var p = t.add_row(t.matmul(pitch, t.param(*pitch_w)), t.param(*pitch_b));
  Var e = t.add_row(t.matmul(energy, t.param(*energy_w)), t.param(*energy_b));
  return t.add(t.add(hidden, p), e);
}

VarianceAdaptor::VarianceAdaptor(ParameterStore& store, const std::string& prefix,
                                 const RunConfig& cfg, uint64_t seed)
    : threshold(cfg.dva_threshold), no_sp(cfg.no_dva_sp), no_lp(cfg.no_dva_lp) {
  predictors.resize(6);
  for (VarianceKind kind : {VarianceKind::Duration, VarianceKind::Pitch, VarianceKind::Energy}) {
    for (Branch branch : {Branch::Short, Branch::Long}) {
      if ((branch == Branch::Short && no_sp) || (branch == Branch::Long && no_lp))
        continue;  // ablated branch: no parameters exist
      const std::string name = prefix + "." + variance_kind_name(kind) + "." +
                               (branch == Branch::Short ? "short" : "long");
      const int idx = static_cast<int>(kind) * 2 + (branch == Branch::Long ? 1 : 0);
      predictors[idx] = VariancePredictor(store, name, cfg.model_dim,
                                          cfg.predictor_kernel, cfg.predictor_dropout,
                                          branch, seed);
    }
  }
  injector = VarianceInjector(store, prefix + ".inject", cfg.model_dim, seed);
}

RoutingDecision VarianceAdaptor::decide(int length) const {
  RoutingDecision d = route(length, threshold);
  if (no_sp) d.branch = Branch::Long;
  if (no_lp) d.branch = Branch::Short;
  return d;
}

const VariancePredictor& VarianceAdaptor::predictor(VarianceKind kind, Branch branch) const {
  const int idx = static_cast<int>(kind) * 2 + (branch == Branch::Long ? 1 : 0);
  const VariancePredictor& p = predictors[idx];
  if (!p.conv1.w) throw std::logic_error("variance predictor branch was removed by ablation");
  return p;
}

VariancePredictions VarianceAdaptor::predict(Tape& t, Var hidden, bool training,
                                             Rng& rng) const {
  VariancePredictions out;
  out.decision = decide(t.value(hidden).rows());
  out.log_duration =
      predictor(VarianceKind::Duration, out.decision.branch).forward(t, hidden, training, rng);
  out.pitch =
      predictor(VarianceKind::Pitch, out.decision.branch).forward(t, hidden, training, rng);
  out.energy =
      predictor(VarianceKind::Energy, out.decision.branch).forward(t, hidden, training, rng);
  return out;
}

namespace {
Tensor column(const std::vector<double>& v) {
  Tensor t({static_cast<int>(v.size()), 1});
  for (size_t i = 0; i < v.size(); ++i) t.data[i] = v[i];
  return t;
}

std::vector<double> expand_by_duration(const std::vector<double>& per_phoneme,
                                       const std::vector<int>& durations) {
  std::vector<double> out;
  for (size_t i = 0; i < durations.size(); ++i)
    out.insert(out.end(), durations[i], per_phoneme[i]);
  return out;
}
}  // namespace

AdaptorOutput VarianceAdaptor::forward_teacher(Tape& t, Var hidden,
                                               const AdaptorTargets& targets,
                                               bool training, Rng& rng) const {
  const size_t P = targets.durations.size();
  if (targets.pitch.size() != P || targets.energy.size() != P)
    throw std::invalid_argument("adaptor: target lengths disagree");
  AdaptorOutput out;
  out.predictions = predict(t, hidden, training, rng);
  out.durations_used = targets.durations;
  Var frames = length_regulate(t, hidden, targets.durations);
  Var pitch = t.constant(column(expand_by_duration(targets.pitch, targets.durations)));
  Var energy = t.constant(column(expand_by_duration(targets.energy, targets.durations)));
  out.frames = injector.forward(t, frames, pitch, energy);
  return out;
}

AdaptorOutput VarianceAdaptor::forward_infer(Tape& t, Var hidden) const {
  Rng unused(0);
  AdaptorOutput out;
  out.predictions = predict(t, hidden, false, unused);
  const Tensor& logd = t.value(out.predictions.log_duration);
  std::vector<int> durations(logd.rows());
  for (int i = 0; i < logd.rows(); ++i) {
    long long d = std::llround(std::exp(logd.at(i, 0)) - 1.0);
    durations[i] = static_cast<int>(std::max<long long>(1, d));
  }
  out.durations_used = durations;
  Var frames = length_regulate(t, hidden, durations);
  // predicted per-phoneme prosody broadcast across each phoneme's frames
  const Tensor& pv = t.value(out.predictions.pitch);
  const Tensor& ev = t.value(out.predictions.energy);
  std::vector<double> pitch(pv.data), energy(ev.data);
  Var pitch_col = t.constant(column(expand_by_duration(pitch, durations)));
  Var energy_col = t.constant(column(expand_by_duration(energy, durations)));
  out.frames = injector.forward(t, frames, pitch_col, energy_col);
  return out;
}

}  // namespace dstts
