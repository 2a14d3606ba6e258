#include <random>

#include "optsurr/comparators.hpp"
#include "optsurr/simulate.hpp"
#include "test_support.hpp"

using namespace optsurr;

namespace {
// Treatment coefficient of y ~ 1 + a + s from the normal equations, solved by Cramer's rule.
double adjusted_coefficient(const TrialDataset& d) {
  double m[3][3] = {}, v[3] = {};
  for (std::size_t i = 0; i < d.n(); ++i) {
    const double x[3] = {1.0, static_cast<double>(d.a()[i]), d.s()[i]};
    for (int r = 0; r < 3; ++r) {
      v[r] += x[r] * d.y()[i];
      for (int c = 0; c < 3; ++c) m[r][c] += x[r] * x[c];
    }
  }
  auto det = [](double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  double m1[3][3];
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m1[r][c] = c == 1 ? v[r] : m[r][c];
  return det(m1) / det(m);
}
}  // namespace

TEST_CASE("outcome used as its own surrogate explains everything") {
  const auto sim = generate(make_setting(1, 0.8522), 800, 1);
  std::vector<double> y(sim.data.y().begin(), sim.data.y().end());
  std::vector<double> s = y;
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = y[i];
  const TrialDataset d(y, s, std::vector<int>(sim.data.a().begin(), sim.data.a().end()));
  const auto f = pte_freedman(d);
  CHECK(std::abs(f.beta_a_adjusted) < 1e-10);
  CHECK(f.pte_f == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("least squares coefficients match the normal equations") {
  const auto sim = generate(make_setting(3, 3.4), 1500, 2);
  const auto f = pte_freedman(sim.data);
  const auto te_delta = [&] {
    double s1 = 0, s0 = 0;
    for (std::size_t i = 0; i < sim.data.n(); ++i) (sim.data.a()[i] ? s1 : s0) += sim.data.y()[i];
    return s1 / sim.data.n1() - s0 / sim.data.n0();
  }();
  CHECK(f.beta_a_marginal == doctest::Approx(te_delta).epsilon(1e-10));
  CHECK(f.beta_a_adjusted == doctest::Approx(adjusted_coefficient(sim.data)).epsilon(1e-8));
  CHECK(f.pte_f == doctest::Approx(1 - f.beta_a_adjusted / f.beta_a_marginal).epsilon(1e-12));
}

TEST_CASE("independent surrogate explains nothing") {
  Rng rng(3);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution coin(0.5);
  std::vector<double> y, s;
  std::vector<int> a;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(coin(rng));
    y.push_back(0.5 * a.back() + nd(rng));
    s.push_back(nd(rng));
  }
  CHECK(std::abs(pte_freedman(TrialDataset(y, s, a)).pte_f) < 0.05);
}

TEST_CASE("affine changes of the surrogate leave PTE_F unchanged") {
  const auto sim = generate(make_setting(1, 0.8522), 1000, 4);
  std::vector<double> s2;
  for (double v : sim.data.s()) s2.push_back(-3.0 * v + 11.0);
  const TrialDataset d2(std::vector<double>(sim.data.y().begin(), sim.data.y().end()), s2,
                        std::vector<int>(sim.data.a().begin(), sim.data.a().end()));
  CHECK(pte_freedman(d2).pte_f == doctest::Approx(pte_freedman(sim.data).pte_f).epsilon(1e-9));
}

TEST_CASE("rank-deficient designs and null marginal effects") {
  const TrialDataset constant_s({1, 0, 1, 0}, {2, 2, 2, 2}, {1, 1, 0, 0});
  CHECK_ERROR(ErrorCode::SingularDesign, pte_freedman(constant_s));
  const TrialDataset s_is_a({1, 0, 1, 0}, {1, 1, 0, 0}, {1, 1, 0, 0});
  CHECK_ERROR(ErrorCode::SingularDesign, pte_freedman(s_is_a));
  const TrialDataset no_effect({1, 0, 1, 0}, {1, 2, 3, 5}, {1, 1, 0, 0});
  CHECK_ERROR(ErrorCode::NullMarginalEffect, pte_freedman(no_effect));
}

TEST_CASE("registry holds the built-in comparator and accepts plug-ins") {
  ComparatorRegistry reg;
  REQUIRE(reg.entries().count("pte_f") == 1);
  reg.add("zero", [](const TrialDataset&) { return 0.0; });
  CHECK(reg.entries().size() == 2);
  const auto sim = generate(make_setting(1, 0.8522), 500, 5);
  CHECK(reg.entries().at("pte_f")(sim.data) == doctest::Approx(pte_freedman(sim.data).pte_f));
}
