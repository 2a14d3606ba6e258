#include "optsurr/effects.hpp"
#include "optsurr/power.hpp"
#include "optsurr/simulate.hpp"
#include "test_support.hpp"

using namespace optsurr;

namespace {
double setting_t(int id) {
  switch (id) {
    case 1: return 0.8522;
    case 2: return 0.235;
    case 3: return 3.4;
    default: return 1.0;
  }
}
}  // namespace

TEST_CASE("setting 1 treated surrogate has mean shape times scale") {
  const auto sim = generate(make_setting(1, 0.8522), 200000, 1, true);
  const double m = testing::mean(sim.s1), se = testing::sd(sim.s1) / std::sqrt(200000.0);
  CHECK(std::abs(m - 4.0) < 3 * se);
  CHECK(std::abs(testing::mean(sim.s0) - 4.5) < 3 * testing::sd(sim.s0) / std::sqrt(200000.0));
}

TEST_CASE("threshold settings produce binary outcomes") {
  for (int id = 1; id <= 4; ++id) {
    const auto sim = generate(make_setting(id, setting_t(id)), 500, id);
    for (double y : sim.data.y()) CHECK((y == 0.0 || y == 1.0));
  }
}

TEST_CASE("setting 5 arm means from the Gaussian-quadratic identity") {
  auto ident = [](double a, double mu, double var) {
    return std::pow(1 + 2 * a * var, -0.5) * std::exp(-a * mu * mu / (1 + 2 * a * var));
  };
  const double mu1 = std::exp(-1.0) * ident(0.1, 5, 2), mu0 = std::exp(-4.0) * ident(0.1, 5, 1);
  CHECK(mu1 == doctest::Approx(0.05216).epsilon(1e-3));
  CHECK(mu0 == doctest::Approx(0.002081).epsilon(1e-3));
  const auto truth = analytic_truth(make_setting(5));
  CHECK(truth.mu1 == doctest::Approx(mu1).epsilon(1e-7));
  CHECK(truth.mu0 == doctest::Approx(mu0).epsilon(1e-6));
  CHECK(truth.delta == doctest::Approx(0.0501).epsilon(2e-3));

  const std::size_t n = 1000000;
  const auto sim = generate(make_setting(5), n, 9, true);
  const double m1 = testing::mean(sim.y1), m0 = testing::mean(sim.y0);
  CHECK(std::abs(m1 - mu1) < 3 * std::sqrt(mu1 * (1 - mu1) / n));
  CHECK(std::abs(m0 - mu0) < 3 * std::sqrt(mu0 * (1 - mu0) / n));
}

TEST_CASE("setting 5 potential surrogates are correlated") {
  const auto sim = generate(make_setting(5), 100000, 2, true);
  const double m0 = testing::mean(sim.s0), m1 = testing::mean(sim.s1);
  double c = 0;
  for (std::size_t i = 0; i < sim.s0.size(); ++i) c += (sim.s0[i] - m0) * (sim.s1[i] - m1);
  c /= static_cast<double>(sim.s0.size() - 1);
  CHECK(c == doctest::Approx(1.0).epsilon(0.03));
  CHECK(testing::sd(sim.s1) == doctest::Approx(std::sqrt(2.0)).epsilon(0.02));
}

TEST_CASE("same seed, same data; different seed, different data") {
  const auto st = make_setting(3, 3.4);
  const auto a = generate(st, 300, 5), b = generate(st, 300, 5), c = generate(st, 300, 6);
  CHECK(std::equal(a.data.s().begin(), a.data.s().end(), b.data.s().begin()));
  CHECK(std::equal(a.data.y().begin(), a.data.y().end(), b.data.y().begin()));
  CHECK_FALSE(std::equal(a.data.s().begin(), a.data.s().end(), c.data.s().begin()));
}

TEST_CASE("settings exercise the intended branches") {
  CHECK(analytic_truth(make_setting(1, 0.8522)).orientation == Orientation::d0_empty);
  CHECK(analytic_truth(make_setting(4)).orientation == Orientation::d0_above);
  // conditional mean of the treated arm in setting 2 rises and falls
  const auto st2 = make_setting(2, 0.235);
  CHECK(st2.conditional_mean(1, 1.0) > st2.conditional_mean(1, 3.0));
  CHECK(st2.conditional_mean(1, 8.0) < st2.conditional_mean(1, 5.0) + 1.0);
  bool up = false, down = false;
  for (double s = 0.5; s < 15; s += 0.25) {
    const double d = st2.conditional_mean(1, s + 0.25) - st2.conditional_mean(1, s);
    up |= d > 1e-6;
    down |= d < -1e-6;
  }
  CHECK(up);
  CHECK(down);
  // arm-1 support straddles arm 0 in setting 3; setting 4 has arm-0 mass above the overlap
  const auto p3 = estimate_partition(generate(make_setting(3, setting_t(3)), 2000, 13).data, 0.0);
  CHECK(p3.orientation == Orientation::d0_empty);
  CHECK(p3.d1_lower);
  CHECK(p3.d1_upper);
  const auto p4 = estimate_partition(generate(make_setting(4, setting_t(4)), 2000, 14).data, 0.0);
  CHECK(p4.orientation == Orientation::d0_above);
}

TEST_CASE("perfect surrogate truth") {
  const auto t = analytic_truth(perfect_surrogate_setting());
  CHECK(t.pte == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(t.delta == doctest::Approx(1.0).epsilon(1e-6));
  // Var Y = Var S + 1 = 2 per arm, Var g = Var S = 1 per arm
  CHECK(t.sigma == doctest::Approx(std::sqrt(8.0)).epsilon(1e-5));
  CHECK(t.sigma_g == doctest::Approx(2.0).epsilon(1e-5));
  for (std::size_t j = 0; j < t.n_bars.size(); ++j) {
    const double n = static_cast<double>(t.n_bars[j]);
    CHECK(t.rp[j] == doctest::Approx(relative_power(t.delta / t.sigma_g, t.delta / t.sigma, n, n)).epsilon(1e-10));
  }
}

TEST_CASE("setting 1 calibration recovers the tabulated PTE") {
  const double t = calibrate_t(make_setting(1), table_pte(1), 0.01, 20.0, 4001);
  CHECK(t == doctest::Approx(0.8522).epsilon(2e-3));
  TruthOptions o;
  o.grid_points = 4001;
  CHECK(analytic_truth(make_setting(1, t), o).pte == doctest::Approx(0.657).epsilon(1e-3));
}

TEST_CASE("surrogate effect never exceeds the outcome effect on analytic curves") {
  for (int id = 1; id <= 5; ++id) {
    CAPTURE(id);
    TruthOptions o;
    o.grid_points = 4001;
    const auto t = analytic_truth(make_setting(id, setting_t(id)), o);
    const double sign = t.delta >= 0 ? 1.0 : -1.0;
    CHECK(sign * (t.delta - t.delta_g) >= -1e-8);
    CHECK(t.oracle_gap < 1e-6);
  }
}

TEST_CASE("quadrature truth agrees with a large Monte-Carlo sample") {
  const auto t = monte_carlo_truth(make_setting(4), 200000, 4001, {50, 100, 150}, 3);
  CHECK(t.mc_draws == 200000);
  CHECK(std::abs(t.mc_delta - t.delta) < 4 * t.mc_delta_se);
  CHECK(std::abs(t.mc_delta_g - t.delta_g) < 4 * t.mc_delta_g_se);
  CHECK_ERROR(ErrorCode::InvalidParameters, monte_carlo_truth(make_setting(4), 1000));
}

TEST_CASE("invalid settings are rejected") {
  auto st = make_setting(1, 0.8522);
  st.law1 = SurrogateLaw::gamma(-1, 2);
  CHECK_ERROR(ErrorCode::InvalidParameters, st.validate());
  CHECK_ERROR(ErrorCode::InvalidParameters, make_setting(9));
  CHECK_ERROR(ErrorCode::InvalidParameters, table_pte(5));
}

TEST_CASE("a small study produces a well-formed summary") {
  AnalysisConfig cfg;
  cfg.resample_count = 20;
  cfg.grid_points = 128;
  const auto st = make_setting(4);
  TruthOptions o;
  o.grid_points = 2001;
  const auto truth = analytic_truth(st, o);
  const auto s = run_study(st, 4, 800, cfg, truth);
  CHECK(s.reps == 4);
  CHECK(s.replicates.size() == 4);
  CHECK(s.orientation_counts.at("d0_above") == 4);
  for (const auto& r : s.rows) {
    CAPTURE(r.estimand);
    CHECK(r.ese >= 0.0);
    if (!std::isnan(r.cp)) {
      CHECK(r.cp >= 0.0);
      CHECK(r.cp <= 1.0);
    }
  }
  const auto md = to_markdown(s);
  CHECK(md.find("| Est") != std::string::npos);
  CHECK(md.find("RP(50)") != std::string::npos);
  const auto again = run_study(st, 4, 800, cfg, truth);
  CHECK(again.replicates[2].pte == s.replicates[2].pte);
  CHECK_ERROR(ErrorCode::InvalidParameters, run_study(st, 0, 800, cfg, truth));
}
