#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dstts/sgf.hpp"
#include "dstts/train.hpp"

using namespace dstts;

namespace {

// Oracle: direct evaluation of the stated formulas, independent of the tape.
std::vector<double> normalize_oracle(const std::vector<double>& h) {
  const double n = static_cast<double>(h.size());
  double mu = 0.0;
  for (double x : h) mu += x;
  mu /= n;
  double var = 0.0;
  for (double x : h) var += (x - mu) * (x - mu);
  var /= n;
  const double sigma = std::sqrt(var + 1e-8);
  std::vector<double> y(h.size());
  for (size_t i = 0; i < h.size(); ++i) y[i] = (h[i] - mu) / sigma;
  return y;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -2.0, double hi = 2.0) {
  Tensor t(std::move(shape));
  for (double& x : t.data) x = rng.uniform(lo, hi);
  return t;
}

struct SgfFixture {
  ParameterStore store;
  SgfLayer layer;
  SgfFixture(int style_dim, int hidden, uint64_t seed)
      : layer(store, "sgf", style_dim, hidden, seed) {}
};

}  // namespace

TEST_CASE("normalize matches the hand-derived [1,2,3] vector") {
  const std::vector<double> y = sgf_normalize({1.0, 2.0, 3.0});
  const std::vector<double> want = normalize_oracle({1.0, 2.0, 3.0});
  // frozen oracle values: mu=2, sigma=sqrt(2/3) -> +-1.2247448...
  CHECK(want[0] == doctest::Approx(-1.2247448).epsilon(1e-6));
  CHECK(want[1] == doctest::Approx(0.0));
  CHECK(want[2] == doctest::Approx(1.2247448).epsilon(1e-6));
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(want[i]).epsilon(1e-9));
}

TEST_CASE("normalize of a constant vector is exactly zero") {
  for (double c : {-4.0, 0.0, 7.5}) {
    const std::vector<double> y = sgf_normalize({c, c, c, c});
    for (double v : y) CHECK(v == 0.0);
  }
}

TEST_CASE("normalize is shift and positive-scale invariant") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> h(16);
    for (double& x : h) x = rng.uniform(-3.0, 3.0);
    const double a = rng.uniform(0.1, 5.0);
    const double c = rng.uniform(-10.0, 10.0);
    std::vector<double> h2(16);
    for (int i = 0; i < 16; ++i) h2[i] = a * h[i] + c;
    const std::vector<double> y1 = sgf_normalize(h);
    const std::vector<double> y2 = sgf_normalize(h2);
    for (int i = 0; i < 16; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-5));
  }
}

TEST_CASE("projection ranges: delta in (0,1), gamma in (-1,1)") {
  SgfFixture f(16, 8, 3);
  Tape t;
  Rng rng(4);
  Var style = t.constant(random_tensor({1, 16}, rng, -5.0, 5.0));
  auto p = f.layer.project(t, style);
  for (double v : t.value(p.delta).data) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  for (double v : t.value(p.gamma).data) {
    CHECK(v > -1.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("zero weights with stated biases give zero projections and delta = logistic(1)") {
  SgfFixture f(16, 8, 5);
  f.layer.zero_projection_weights();
  Tape t;
  Rng rng(6);
  Var style = t.constant(random_tensor({1, 16}, rng, -5.0, 5.0));
  auto p = f.layer.project(t, style);
  const double want_delta = logistic(1.0);  // 0.7310585786300049
  CHECK(want_delta == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  for (double v : t.value(p.gamma).data) CHECK(v == 0.0);
  for (double v : t.value(p.beta).data) CHECK(v == 0.0);
  for (double v : t.value(p.eta).data) CHECK(v == 0.0);
  for (double v : t.value(p.delta).data) CHECK(v == doctest::Approx(want_delta).epsilon(1e-12));

  // the modulated output is exactly zero for any h
  Var h = t.constant(random_tensor({5, 8}, rng, -4.0, 4.0));
  Var out = f.layer.modulate(t, h, style);
  for (double v : t.value(out).data) CHECK(v == 0.0);
}

TEST_CASE("blend matches the derived numeric example") {
  const double delta = logistic(1.0);
  std::vector<double> gamma_eff, beta_eff;
  sgf_blend({0.5}, {-0.2}, {0.1}, {delta}, gamma_eff, beta_eff);
  // oracle: 0.5*d + 0.1*(1-d) and -0.2*d + 0.1*(1-d) with d = logistic(1)
  const double want_gamma = 0.5 * delta + 0.1 * (1.0 - delta);   // 0.39242343...
  const double want_beta = -0.2 * delta + 0.1 * (1.0 - delta);   // -0.11931757...
  CHECK(want_gamma == doctest::Approx(0.3924234314).epsilon(1e-9));
  CHECK(want_beta == doctest::Approx(-0.1193175736).epsilon(1e-9));
  CHECK(gamma_eff[0] == doctest::Approx(want_gamma).epsilon(1e-6));
  CHECK(beta_eff[0] == doctest::Approx(want_beta).epsilon(1e-6));
}

TEST_CASE("blend endpoints") {
  std::vector<double> gamma_eff, beta_eff;
  sgf_blend({0.4}, {-0.3}, {0.25}, {1.0}, gamma_eff, beta_eff);
  CHECK(gamma_eff[0] == doctest::Approx(0.4));
  CHECK(beta_eff[0] == doctest::Approx(-0.3));
  sgf_blend({0.4}, {-0.3}, {0.25}, {0.0}, gamma_eff, beta_eff);
  CHECK(gamma_eff[0] == doctest::Approx(0.25));
  CHECK(beta_eff[0] == doctest::Approx(0.25));
}

TEST_CASE("modulate matches the composed derived example") {
  // h = [1,2,3], gamma_eff/beta_eff from the blend example, uniform over H
  const double delta = logistic(1.0);
  const double gamma_eff = 0.5 * delta + 0.1 * (1.0 - delta);
  const double beta_eff = -0.2 * delta + 0.1 * (1.0 - delta);
  const std::vector<double> y = normalize_oracle({1.0, 2.0, 3.0});
  std::vector<double> want(3);
  for (int i = 0; i < 3; ++i) want[i] = gamma_eff * y[i] + beta_eff;
  // frozen: [-0.5999371, -0.1193176, 0.3613020] within 1e-6
  CHECK(want[0] == doctest::Approx(-0.5999371).epsilon(1e-5));
  CHECK(want[1] == doctest::Approx(-0.1193176).epsilon(1e-5));
  CHECK(want[2] == doctest::Approx(0.3613020).epsilon(1e-5));

  // drive the layer to those exact projections: zero weights, then biases
  // arctanh(0.5), arctanh(-0.2), arctanh(0.1); delta bias stays 1.
  SgfFixture f(4, 3, 7);
  f.layer.zero_projection_weights();
  for (double& b : f.layer.proj_gamma.b->value.data) b = std::atanh(0.5);
  for (double& b : f.layer.proj_beta.b->value.data) b = std::atanh(-0.2);
  for (double& b : f.layer.proj_eta.b->value.data) b = std::atanh(0.1);
  Tape t;
  Var style = t.constant(Tensor::full({1, 4}, 0.37));
  Tensor h({1, 3});
  h.data = {1.0, 2.0, 3.0};
  Var out = f.layer.modulate(t, t.constant(h), style);
  for (int i = 0; i < 3; ++i)
    CHECK(t.value(out).at(0, i) == doctest::Approx(want[i]).epsilon(1e-6));
}

TEST_CASE("endpoint identities on random tensors") {
  Rng rng(8);
  for (double forced : {40.0, -40.0}) {  // logistic(+-40) is 1/0 to double precision
    SgfFixture f(12, 6, 9);
    for (double& x : f.layer.proj_delta.w->value.data) x = 0.0;
    for (double& b : f.layer.proj_delta.b->value.data) b = forced;
    Tape t;
    Var style = t.constant(random_tensor({1, 12}, rng));
    Var h = t.constant(random_tensor({4, 6}, rng, -3.0, 3.0));
    auto p = f.layer.project(t, style);
    Var out = f.layer.modulate(t, h, style);
    Var y = t.normalize_rows(h, kSgfNormEps);
    const Tensor& yv = t.value(y);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 6; ++j) {
        double want;
        if (forced > 0)  // delta -> 1: classic FiLM with (gamma, beta)
          want = t.value(p.gamma).at(0, j) * yv.at(i, j) + t.value(p.beta).at(0, j);
        else  // delta -> 0: eta * y + eta
          want = t.value(p.eta).at(0, j) * yv.at(i, j) + t.value(p.eta).at(0, j);
        CHECK(t.value(out).at(i, j) == doctest::Approx(want).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("full layer is shift and positive-scale invariant in h") {
  SgfFixture f(10, 5, 11);
  Rng rng(12);
  Tensor style = random_tensor({1, 10}, rng);
  Tensor h = random_tensor({3, 5}, rng);
  Tensor h2 = h;
  const double a = 2.6, c = -3.1;
  for (double& x : h2.data) x = a * x + c;
  Tape t1, t2;
  Var o1 = f.layer.modulate(t1, t1.constant(h), t1.constant(style));
  Var o2 = f.layer.modulate(t2, t2.constant(h2), t2.constant(style));
  for (size_t i = 0; i < t1.value(o1).data.size(); ++i)
    CHECK(t2.value(o2).data[i] == doctest::Approx(t1.value(o1).data[i]).epsilon(1e-5));
}

TEST_CASE("output range bound |out| <= |gamma_eff|*|y| + 1") {
  SgfFixture f(10, 5, 13);
  Rng rng(14);
  Tape t;
  Var style = t.constant(random_tensor({1, 10}, rng, -4.0, 4.0));
  Var h = t.constant(random_tensor({6, 5}, rng, -5.0, 5.0));
  auto p = f.layer.project(t, style);
  Var one = t.constant(Tensor::full({1, 5}, 1.0));
  Var inv = t.sub(one, p.delta);
  Var gamma_eff = t.add(t.mul(p.gamma, p.delta), t.mul(p.eta, inv));
  Var y = t.normalize_rows(h, kSgfNormEps);
  Var out = f.layer.modulate(t, h, style);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 5; ++j) {
      const double bound =
          std::fabs(t.value(gamma_eff).at(0, j)) * std::fabs(t.value(y).at(i, j)) + 1.0;
      CHECK(std::fabs(t.value(out).at(i, j)) <= bound + 1e-12);
    }
}

TEST_CASE("analytic gradients of modulate match finite differences") {
  ParameterStore store;
  store.create("h", {4, 6}, ParameterStore::Init::UniformFanIn, 21);
  store.create("style", {1, 12}, ParameterStore::Init::UniformFanIn, 22);
  SgfLayer layer(store, "sgf", 12, 6, 23);
  Rng rng(24);
  Tensor target = random_tensor({4, 6}, rng);
  store.zero_grads();
  auto build = [&](Tape& t) {
    Var h = t.param(store.at("h"));
    Var style = t.param(store.at("style"));
    return t.mse_loss(layer.modulate(t, h, style), target);
  };
  {
    Tape t;
    t.backward(build(t));
  }
  auto loss_fn = [&]() {
    Tape t;
    return t.scalar(build(t));
  };
  GradCheckOptions opts;
  opts.samples_per_tensor = 48;
  GradCheckResult r = finite_difference_check(store, loss_fn, opts);
  CHECK(r.max_rel_error < 1e-4);
}
