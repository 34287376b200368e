#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "dstts/checkpoint.hpp"
#include "dstts/train.hpp"
#include "fixtures.hpp"

using namespace dstts;
using dstts::testing::temp_dir;

namespace {

RunConfig quiet_tiny() {
  RunConfig cfg = tiny_config();
  cfg.dropout = 0.0;
  cfg.predictor_dropout = 0.0;
  return cfg;
}

}  // namespace

TEST_CASE("mse hand examples") {
  CHECK(mse({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(mse({1, 2, 3}, {1, 1, 1}) == doctest::Approx(5.0 / 3.0).epsilon(1e-12));
  CHECK(mse({1, 2, 3}, {1, 1, 1}) == mse({1, 1, 1}, {1, 2, 3}));
  CHECK_THROWS_AS(mse({1, 2}, {1}), std::invalid_argument);
  CHECK_THROWS_AS(mse({}, {}), std::invalid_argument);
}

TEST_CASE("mel_mae hand examples") {
  Tensor a({1, 2}), b({1, 2});
  a.data = {0, 1};
  b.data = {1, 1};
  CHECK(mel_mae(a, b) == doctest::Approx(0.5));
  CHECK(mel_mae(a, a) == 0.0);
  Tensor c({2, 3});
  for (double& x : c.data) x = 1.0;
  Tensor d = c;
  for (double& x : d.data) x += 0.5;
  CHECK(mel_mae(c, d) == doctest::Approx(0.5));
  Tensor e({3, 1});
  CHECK_THROWS_AS(mel_mae(c, e), std::invalid_argument);
}

TEST_CASE("loss composition is non-negative, additive, and componentwise isolated") {
  RunConfig cfg = quiet_tiny();
  cfg.seed = 31;
  DsTtsModel model(cfg, 5);
  std::vector<TrainItem> batch = synthetic_batch(5, 1, 32);
  Rng rng(0);
  Tape t;
  ForwardOutput out = model.forward_teacher(t, batch[0], false, rng);
  LossVars v = compute_losses(t, out, batch[0]);
  LossBreakdown b = loss_values(t, v);
  CHECK(b.l_rec >= 0.0);
  CHECK(b.l_d >= 0.0);
  CHECK(b.l_e >= 0.0);
  CHECK(b.l_p >= 0.0);
  // bit-exact fold in the fixed order
  CHECK(b.total == ((b.l_rec + b.l_d) + b.l_e) + b.l_p);
  CHECK(t.scalar(v.total) == b.total);

  // zeroing the pitch prediction changes only l_p
  ForwardOutput out2 = out;
  out2.predictions.pitch =
      t.constant(Tensor(t.value(out.predictions.pitch).shape));
  LossBreakdown b2 = loss_values(t, compute_losses(t, out2, batch[0]));
  CHECK(b2.l_rec == b.l_rec);
  CHECK(b2.l_d == b.l_d);
  CHECK(b2.l_e == b.l_e);
  CHECK(b2.l_p != b.l_p);
}

TEST_CASE("perfect predictions give exactly zero loss") {
  RunConfig cfg = quiet_tiny();
  DsTtsModel model(cfg, 5);
  std::vector<TrainItem> batch = synthetic_batch(5, 1, 33);
  TrainItem& item = batch[0];
  Rng rng(0);
  Tape t;
  ForwardOutput out = model.forward_teacher(t, item, false, rng);
  // overwrite the predictions and mel with the targets themselves
  Tensor log_dur({static_cast<int>(item.durations.size()), 1});
  for (size_t i = 0; i < item.durations.size(); ++i)
    log_dur.data[i] = std::log1p(static_cast<double>(item.durations[i]));
  Tensor pitch({static_cast<int>(item.pitch_std.size()), 1});
  for (size_t i = 0; i < item.pitch_std.size(); ++i) pitch.data[i] = item.pitch_std[i];
  Tensor energy({static_cast<int>(item.energy_std.size()), 1});
  for (size_t i = 0; i < item.energy_std.size(); ++i) energy.data[i] = item.energy_std[i];
  out.mel = t.constant(item.mel);
  out.predictions.log_duration = t.constant(log_dur);
  out.predictions.pitch = t.constant(pitch);
  out.predictions.energy = t.constant(energy);
  // constants carry no gradient, so evaluate values only
  Tensor mel_pred = t.value(out.mel);
  CHECK(mel_mae(mel_pred, item.mel) == 0.0);
  LossBreakdown b;
  b.l_rec = mel_mae(mel_pred, item.mel);
  b.l_d = mse(std::vector<double>(log_dur.data), std::vector<double>(log_dur.data));
  b.total = LossBreakdown::fold(b.l_rec, b.l_d, 0.0, 0.0);
  CHECK(b.total == 0.0);
}

TEST_CASE("adam single-step oracle and fixed point") {
  ParameterStore store;
  Parameter& p = store.create("p", {1, 1}, ParameterStore::Init::Zeros, 0);
  Adam adam;
  p.grad.data[0] = 1.0;
  adam.step(store, 1e-3);
  // oracle: m=0.1, v=0.02, m_hat=1, v_hat=1, p = -lr/(1+eps)
  const double want = -1e-3 / (1.0 + 1e-9);
  CHECK(std::fabs(p.value.data[0] - want) < 1e-15);
  CHECK(std::fabs(p.value.data[0] - (-1e-3)) < 1e-9);
  CHECK(adam.step_count() == 1);

  // zero gradient from a fresh state leaves the parameter unchanged
  ParameterStore store2;
  Parameter& q = store2.create("q", {1, 1}, ParameterStore::Init::Zeros, 0);
  q.value.data[0] = 0.75;
  Adam adam2;
  adam2.step(store2, 1e-3);
  CHECK(q.value.data[0] == 0.75);
  CHECK(adam2.step_count() == 1);
}

TEST_CASE("first adam update opposes the gradient sign") {
  for (double g : {4.0, -0.3, 1e-4}) {
    ParameterStore store;
    Parameter& p = store.create("p", {1, 1}, ParameterStore::Init::Zeros, 0);
    p.grad.data[0] = g;
    Adam adam;
    adam.step(store, 1e-3);
    CHECK(p.value.data[0] * g < 0.0);
    CHECK(std::fabs(p.value.data[0]) == doctest::Approx(1e-3).epsilon(1e-4));
  }
}

TEST_CASE("adam rejects non-finite gradients") {
  ParameterStore store;
  Parameter& p = store.create("p", {1, 1}, ParameterStore::Init::Zeros, 0);
  p.grad.data[0] = std::nan("");
  Adam adam;
  CHECK_THROWS_AS(adam.step(store, 1e-3), NumericalError);
}

TEST_CASE("seeded runs give bit-identical loss trajectories") {
  RunConfig cfg = tiny_config();  // dropout active: exercises the seeded masks
  cfg.seed = 77;
  std::vector<TrainItem> batch = synthetic_batch(5, 2, 78);
  std::vector<double> first, second;
  for (int run = 0; run < 2; ++run) {
    DsTtsModel model(cfg, 5);
    Adam adam;
    auto& sink = run == 0 ? first : second;
    for (int step = 1; step <= 5; ++step)
      sink.push_back(train_step(model, batch, adam, 1e-3, step).total);
  }
  CHECK(first == second);
}

TEST_CASE("second step improves on the first for nearly all seeds") {
  // dropout off: consecutive steps must see the same loss surface for the
  // comparison to measure the optimizer
  int improved = 0;
  const int trials = 20;
  for (int seed = 1; seed <= trials; ++seed) {
    RunConfig cfg = quiet_tiny();
    cfg.seed = static_cast<unsigned long long>(seed);
    DsTtsModel model(cfg, 5);
    std::vector<TrainItem> batch = synthetic_batch(5, 2, 1000 + seed);
    Adam adam;
    const double l1 = train_step(model, batch, adam, 1e-4, 1).total;
    const double l2 = train_step(model, batch, adam, 1e-4, 2).total;
    if (l2 < l1) ++improved;
  }
  CHECK(improved >= 19);
}

TEST_CASE("full-model gradient check stays within 1e-4") {
  RunConfig cfg = tiny_config();
  cfg.seed = 5;
  DsTtsModel model(cfg, 5);
  std::vector<TrainItem> batch = synthetic_batch(5, 2, 6);
  GradCheckOptions opts;
  opts.samples_per_tensor = 8;  // the acceptance suite runs the full 32
  GradCheckResult r = grad_check(model, batch, opts);
  INFO("worst tensor: ", r.worst_tensor);
  CHECK(r.max_rel_error <= 1e-4);
}

TEST_CASE("linear-only submodel gradient check is near machine precision") {
  ParameterStore store;
  store.create("w", {6, 4}, ParameterStore::Init::UniformFanIn, 1);
  store.create("b", {1, 4}, ParameterStore::Init::UniformFanIn, 2, 1);
  Rng rng(3);
  Tensor input({5, 6}), target({5, 4});
  for (double& x : input.data) x = rng.uniform(-1, 1);
  for (double& x : target.data) x = rng.uniform(-1, 1);
  auto build = [&](Tape& t) {
    Var y = t.add_row(t.matmul(t.constant(input), t.param(store.at("w"))),
                      t.param(store.at("b")));
    return t.mse_loss(y, target);
  };
  store.zero_grads();
  {
    Tape t;
    t.backward(build(t));
  }
  auto loss_fn = [&]() {
    Tape t;
    return t.scalar(build(t));
  };
  GradCheckResult r = finite_difference_check(store, loss_fn);
  CHECK(r.max_rel_error <= 1e-7);
}

TEST_CASE("a corrupted gradient is loudly detected") {
  RunConfig cfg = quiet_tiny();
  cfg.seed = 9;
  DsTtsModel model(cfg, 5);
  std::vector<TrainItem> batch = synthetic_batch(5, 1, 10);
  GradCheckOptions opts;
  opts.samples_per_tensor = 16;
  opts.corrupt_tensor = "dec.proj.w";
  batch_loss(model, batch, false, 0, true);
  auto loss_fn = [&]() { return batch_loss(model, batch, false, 0, false).total; };
  GradCheckResult r = finite_difference_check(model.params(), loss_fn, opts);
  CHECK(r.max_rel_error > 0.1);
  CHECK(r.worst_tensor == "dec.proj.w");
}

TEST_CASE("checkpoint round-trips bit-identically") {
  RunConfig cfg = quiet_tiny();
  cfg.seed = 13;
  cfg.no_mfcc = true;  // the header must record ablation flags
  DsTtsModel model(cfg, 5);
  std::vector<TrainItem> batch = synthetic_batch(5, 2, 14);
  Adam adam;
  for (int step = 1; step <= 3; ++step) train_step(model, batch, adam, 1e-3, step);

  const std::string dir = temp_dir("checkpoint");
  const std::string path1 = dir + "/a.dsck";
  const std::string path2 = dir + "/b.dsck";
  save_checkpoint(path1, model, {"<pad>", "A", "B", "C", "D"});

  LoadedCheckpoint first = load_checkpoint(path1);
  CHECK(first.model->config().no_mfcc);
  CHECK(first.vocab_symbols.size() == 5);
  save_checkpoint(path2, *first.model, first.vocab_symbols);

  auto read_bytes = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(read_bytes(path1) == read_bytes(path2));  // f32 payload is a fixed point

  LoadedCheckpoint second = load_checkpoint(path2);
  Rng r1(0), r2(0);
  Tape t1, t2;
  ForwardOutput o1 = first.model->forward_teacher(t1, batch[0], false, r1);
  ForwardOutput o2 = second.model->forward_teacher(t2, batch[0], false, r2);
  CHECK(t1.value(o1.mel).data == t2.value(o2.mel).data);
}

TEST_CASE("train_step aborts on non-finite loss") {
  RunConfig cfg = quiet_tiny();
  DsTtsModel model(cfg, 5);
  std::vector<TrainItem> batch = synthetic_batch(5, 1, 15);
  batch[0].mel.data[0] = std::numeric_limits<double>::quiet_NaN();
  Adam adam;
  CHECK_THROWS_AS(train_step(model, batch, adam, 1e-3, 1), NumericalError);
}
