#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "mrad/modulation.hpp"

using namespace mrad;

namespace {

BaselineStats make_baseline(Matrix mu, Matrix sigma, double eps) {
  BaselineStats b;
  b.mu = std::move(mu);
  b.sigma = std::move(sigma);
  b.n_samples = 2;
  b.epsilon = eps;
  return b;
}

}  // namespace

TEST_CASE("fit_baseline: mean and population std") {
  const std::vector<Matrix> w{Matrix(1, 1, std::vector<double>{2}), Matrix(1, 1, std::vector<double>{4})};
  const auto b = fit_baseline(w);
  CHECK(b.mu(0, 0) == 3.0);
  CHECK(b.sigma(0, 0) == 1.0);
  CHECK(b.n_samples == 2);

  const Matrix x(2, 3, std::vector<double>{1, 2, 3, 4, 5, 6});
  const std::vector<Matrix> same{x, x};
  const auto z = fit_baseline(same);
  CHECK(z.mu == x);
  CHECK(z.sigma == Matrix(2, 3));
}

TEST_CASE("fit_baseline errors") {
  const std::vector<Matrix> one{Matrix(2, 2)};
  CHECK_THROWS_AS(fit_baseline(one), DataError);
  const std::vector<Matrix> mixed{Matrix(2, 2), Matrix(2, 3)};
  CHECK_THROWS_AS(fit_baseline(mixed), DataError);
  const std::vector<Matrix> ok{Matrix(2, 2), Matrix(2, 2)};
  CHECK_THROWS_AS(fit_baseline(ok, 0.0), ConfigError);
}

TEST_CASE("fit_baseline is permutation invariant") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  std::vector<Matrix> w;
  for (int i = 0; i < 40; ++i) {
    Matrix m(3, 5);
    for (double& v : m.data()) v = u(gen);
    w.push_back(m);
  }
  const auto a = fit_baseline(w);
  std::shuffle(w.begin(), w.end(), gen);
  CHECK(fit_baseline(w) == a);
}

TEST_CASE("deviation_score examples") {
  const auto b = make_baseline(Matrix(1, 1, 3.0), Matrix(1, 1, 1.0), 1e-8);
  CHECK(deviation_score(Matrix(1, 1, 7.0), b)(0, 0) == doctest::Approx(4.0).epsilon(1e-7));
  CHECK(deviation_score(Matrix(1, 1, 3.0), b)(0, 0) == 0.0);
  const auto z = make_baseline(Matrix(1, 1, 2.0), Matrix(1, 1, 0.0), 0.01);
  CHECK(deviation_score(Matrix(1, 1, 3.0), z)(0, 0) == doctest::Approx(100.0));
  CHECK_THROWS_AS(deviation_score(Matrix(2, 1), b), ShapeError);
}

TEST_CASE("modulation_weights examples") {
  CHECK(modulation_weights(Matrix(2, 2), {0.3, 1.0, 2.0}) == Matrix(2, 2, 0.3));
  CHECK(modulation_weights(Matrix(1, 1, 4.0), {0.5, 0.5, 2.0})(0, 0) == 3.0);
  CHECK(modulation_weights(Matrix(1, 1, 2.0), {0.5, 1.0, 2.0})(0, 0) == 3.0);
  CHECK_THROWS_AS(ModulationConfig({1.0, 1.0, 2.0}).validate(), ConfigError);
  CHECK_THROWS_AS(ModulationConfig({0.5, 0.0, 2.0}).validate(), ConfigError);
  CHECK_THROWS_AS(ModulationConfig({0.5, 1.0, -1.0}).validate(), ConfigError);
}

TEST_CASE("modulate examples") {
  const Matrix x(2, 2, std::vector<double>{5, 1, 2, 3});
  CHECK(modulate(x, Matrix(2, 2, 1.0)) == x);
  Matrix m(2, 2, 1.0);
  m(0, 0) = 0.3;
  CHECK(modulate(x, m)(0, 0) == doctest::Approx(1.5));
  CHECK(modulate(Matrix(2, 2), m) == Matrix(2, 2));
  CHECK_THROWS_AS(modulate(x, Matrix(1, 2)), ShapeError);
}

TEST_CASE("piecewise law, boundary and monotonicity on random cells") {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const ModulationConfig cfg{0.05 + 0.9 * u(gen), 0.1 + 3 * u(gen), 4 * u(gen)};
    Matrix delta(10, 10);
    for (double& v : delta.data()) v = 8 * u(gen);
    delta(0, 0) = cfg.tau;
    const Matrix m = modulation_weights(delta, cfg);
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double w = m.data()[i];
      CHECK((w == cfg.beta || w >= 1 + cfg.lambda * cfg.tau));
    }
    CHECK(m(0, 0) == 1 + cfg.lambda * cfg.tau);
    Matrix bigger = delta;
    for (double& v : bigger.data()) v += (v >= cfg.tau ? 1.0 : 0.0);
    const Matrix m2 = modulation_weights(bigger, cfg);
    for (std::size_t i = 0; i < m.size(); ++i) CHECK(m2.data()[i] >= m.data()[i]);
  }
}

TEST_CASE("apply_modulation composes the three steps") {
  const auto b = make_baseline(Matrix(1, 2, std::vector<double>{1, 1}), Matrix(1, 2, 1.0), 1e-6);
  const Matrix x(1, 2, std::vector<double>{1, 9});
  const Matrix out = apply_modulation(x, b, {0.5, 1.0, 2.0});
  CHECK(out(0, 0) == 0.5);
  CHECK(out(0, 1) == doctest::Approx(9 * (1 + 8 / (1 + 1e-6))));
}

TEST_CASE("baseline json round trip") {
  const std::vector<Matrix> w{Matrix(2, 2, std::vector<double>{0.1, 2, 3, 4}),
                              Matrix(2, 2, std::vector<double>{1.0 / 3, 5, 6, 7})};
  const auto b = fit_baseline(w, 1e-6);
  CHECK(BaselineStats::from_json(b.to_json()) == b);
  CHECK_THROWS_AS(BaselineStats::from_json("{}"), DataError);
}

TEST_CASE("tune_tau") {
  std::vector<LabeledWindow> both(2);
  both[1].label = Label::Abnormal;
  const std::vector<double> single{1.5};
  CHECK(tune_tau(both, single, [](double) { return 0.3; }) == 1.5);

  const std::vector<double> grid{3, 1, 2};
  CHECK(tune_tau(both, grid, [](double t) { return t == 2 ? 0.9 : 0.5; }) == 2);
  CHECK(tune_tau(both, grid, [](double t) { return t >= 2 ? 0.8 : 0.1; }) == 2);
  CHECK(tune_tau(both, grid, [](double) { return 0.4; }) == 1);

  const std::vector<double> empty;
  CHECK_THROWS_AS(tune_tau(both, empty, [](double) { return 0.0; }), ConfigError);
  std::vector<LabeledWindow> normal_only(3);
  CHECK_THROWS_AS(tune_tau(normal_only, grid, [](double) { return 0.0; }), DataError);
}
