// Acceptance checks, one PASS/FAIL line per criterion.
//
//   acceptance                 run every criterion
//   acceptance --criterion N   run criterion N only

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "optsurr/effects.hpp"
#include "optsurr/errors.hpp"
#include "optsurr/power.hpp"
#include "optsurr/resample.hpp"
#include "optsurr/simulate.hpp"
#include "optsurr/transform.hpp"
#include "oracles.hpp"

using namespace optsurr;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const StudyRow& row(const StudySummary& s, const std::string& name) {
  for (const auto& r : s.rows) {
    if (r.estimand == name) return r;
  }
  throw Error(ErrorCode::InvalidParameters, "study has no row " + name);
}

struct AnalyticCase {
  std::string name;
  SupportPartition partition;
  CurveSet curves;
};

AnalyticCase analytic_case(const std::string& name, const SimulationSetting& st, std::size_t points) {
  AnalyticCase c{name, make_partition(st.law0.support(1e-10), st.law1.support(1e-10)), {}};
  const auto grid = make_grid(c.partition, points);
  c.curves = make_curves(
      grid, c.partition, [&](double s) { return st.conditional_mean(0, s); },
      [&](double s) { return st.conditional_mean(1, s); }, [&](double s) { return st.law0.pdf(s); },
      [&](double s) { return st.law1.pdf(s); }, 0.0);
  return c;
}

AnalyticCase uniform_toy(std::size_t points) {
  AnalyticCase c{"uniform toy", make_partition({0.0, 1.0}, {0.0, 1.0}), {}};
  const auto grid = make_grid(c.partition, points);
  c.curves = make_curves(
      grid, c.partition, [](double s) { return s; }, [](double s) { return s + 1.0; }, [](double) { return 1.0; },
      [](double) { return 1.0; }, 0.0);
  return c;
}

double setting1_t() {
  static const double t = calibrate_t(make_setting(1), table_pte(1));
  return t;
}

void criterion1(Outcome& out) {
  std::vector<AnalyticCase> cases;
  cases.push_back(analytic_case("setting 1", make_setting(1, setting1_t()), 2048));
  cases.push_back(analytic_case("setting 4", make_setting(4), 2048));
  cases.push_back(uniform_toy(2048));
  for (const auto& c : cases) {
    const auto t0 = Clock::now();
    const auto closed = build_transform(c.partition, c.curves);
    const auto oracle = oracle_gopt(c.curves.grid, c.curves.m0, c.curves.m1, c.curves.f0, c.curves.f1, c.partition);
    const double elapsed = seconds_since(t0);
    const double gap = testing::sup_abs_diff(closed.g_values, oracle.g);
    out.detail << c.name << ": sup|diff|=" << gap << " in " << elapsed << " s; ";
    out.require(gap < 1e-6, c.name + " sup-norm");
    out.require(elapsed < 1.0, c.name + " runtime");
  }
}

// m0 = m1 = identity on bounded supports: D_0 below the overlap and D_1 above it in every sample.
SimulationSetting bounded_perfect_surrogate() {
  auto st = perfect_surrogate_setting();
  st.law0 = SurrogateLaw::uniform(0.0, 2.0);
  st.law1 = SurrogateLaw::uniform(0.5, 3.0);
  return st;
}

void criterion2(Outcome& out) {
  const auto st = bounded_perfect_surrogate();
  AnalysisConfig cfg;
  const std::size_t reps = 100;
  std::vector<double> pte, lambda_2000;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto data = generate(st, 2000, derive_seed(202, streams::datasets, r)).data;
    lambda_2000.push_back(fit_transform(data, cfg).lambda);
    CvOptions opt;
    opt.perturb = false;
    const auto cv = cv_estimate(data, make_cv_plan(data, cfg.cv_folds, derive_seed(202, streams::folds, r)), cfg, opt);
    if (cv.pte) pte.push_back(cv.pte->point);
  }
  std::vector<double> lambda_500;
  for (std::size_t r = 0; r < 40; ++r) {
    const auto data = generate(st, 500, derive_seed(205, streams::datasets, r)).data;
    lambda_500.push_back(fit_transform(data, cfg).lambda);
  }
  auto mean_abs = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s / static_cast<double>(v.size());
  };
  const double pte_mean = testing::mean(pte);
  out.detail << "mean PTE_CV=" << pte_mean << " over " << pte.size() << " reps; mean lambda=" << testing::mean(lambda_2000)
             << ", mean |lambda| n=500: " << mean_abs(lambda_500) << ", n=2000: " << mean_abs(lambda_2000) << "; ";
  out.require(pte.size() == reps, "PTE defined in every replicate");
  out.require(std::abs(pte_mean - 1.0) <= 0.05, "PTE within 0.05 of 1");
  out.require(mean_abs(lambda_2000) < mean_abs(lambda_500), "|lambda| shrinks with n");
  out.require(std::abs(testing::mean(lambda_2000)) < 0.05, "lambda near 0 at n=2000");
}

void criterion3(Outcome& out) {
  const auto st = make_setting(1, setting1_t());
  AnalysisConfig cfg;
  std::size_t ok = 0;
  double worst = 0.0;
  for (std::size_t r = 0; r < 100; ++r) {
    const auto data = generate(st, 2000, derive_seed(303, streams::datasets, r)).data;
    const auto g = fit_transform(data, cfg);
    const auto gv = transform_values(data, g);
    std::vector<double> y0;
    double resid = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (data.a()[i] != 0) continue;
      y0.push_back(data.y()[i]);
      if (std::isnan(gv[i])) continue;
      resid += data.y()[i] - gv[i];
      ++count;
    }
    const double ratio = std::abs(resid / static_cast<double>(count)) / testing::sd(y0);
    worst = std::max(worst, ratio);
    if (ratio <= 0.02) ++ok;
  }
  out.detail << ok << "/100 replicates within 0.02 sd(Y|A=0); worst ratio " << worst << "; ";
  out.require(ok >= 95, "at least 95 of 100");
}

void criterion4(Outcome& out) {
  const double t = setting1_t();
  const auto st = make_setting(1, t);
  const auto truth = monte_carlo_truth(st, 1000000);
  const double mc_pte = truth.mc_delta_g / truth.mc_delta;
  out.detail << "t=" << t << ", Monte-Carlo PTE " << mc_pte << " (quadrature " << truth.pte << "); ";
  out.require(std::abs(mc_pte - 0.657) <= 0.01, "Monte-Carlo truth within 0.01 of 0.657");

  AnalysisConfig cfg;
  cfg.seed = 4004;
  StudyOptions opt;
  opt.comparators = false;
  const auto study = run_study(st, 100, 2000, cfg, truth, opt);
  const auto& p = row(study, "PTE");
  const auto& rp = row(study, "RP(50)");
  out.detail << "PTE est=" << p.est << " bias=" << p.est - p.truth << " ESE=" << p.ese << " ASE=" << p.ase
             << " CP=" << p.cp << "; RP(50) est=" << rp.est << " truth=" << rp.truth << "; " << study.runtime_seconds
             << " s; ";
  out.require(study.failures == 0, "no failed replicates");
  out.require(std::abs(p.est - p.truth) < 0.03, "PTE bias below 0.03");
  out.require(std::abs(p.ase / p.ese - 1.0) <= 0.20, "ASE within 20% of ESE");
  out.require(p.cp >= 0.90 && p.cp <= 0.99, "CP in [0.90, 0.99]");
  out.require(std::abs(rp.est / rp.truth - 1.0) <= 0.15, "RP(50) within 15% of truth");
}

void criterion5(Outcome& out) {
  for (int id : {2, 3}) {
    const double t = calibrate_t(make_setting(id), table_pte(id));
    const auto st = make_setting(id, t);
    const auto truth = monte_carlo_truth(st, 1000000);
    const double mc_pte = truth.mc_delta_g / truth.mc_delta;
    AnalysisConfig cfg;
    cfg.seed = 5000 + static_cast<std::uint64_t>(id);
    StudyOptions opt;
    opt.perturb = false;
    const auto study = run_study(st, 100, 2000, cfg, truth, opt);
    const auto& p = row(study, "PTE");
    const auto& f = row(study, "PTE_F");
    const std::string tag = "setting " + std::to_string(id);
    out.detail << tag << ": t=" << t << " true PTE=" << truth.pte << " (MC " << mc_pte << ") est=" << p.est
               << " PTE_F=" << f.est << "; ";
    out.require(p.est > 0.0, tag + " PTE positive");
    out.require(std::abs(p.est - truth.pte) <= 0.07, tag + " PTE within 0.07 of truth");
    if (id == 2) out.require(f.est <= 0.08, tag + " PTE_F at most 0.08");
    if (id == 3) out.require(f.est < 0.0, tag + " PTE_F negative");
  }
}

void criterion6(Outcome& out) {
  const auto st = make_setting(1, setting1_t());
  const std::size_t reps = 200;
  std::vector<double> delta, pert, infl;
  for (std::size_t r = 0; r < reps; ++r) {
    const auto data = generate(st, 2000, derive_seed(606, streams::datasets, r)).data;
    const auto te = treatment_effect(data);
    const auto rs = perturb_estimate(
        data, [&](std::span<const double> w) { return arm_contrast(data.y(), data.a(), w).delta; },
        {WeightLaw::exponential_mean_one, 500, derive_seed(606, streams::perturbation, r)});
    delta.push_back(te.delta);
    pert.push_back(rs.se);
    infl.push_back(std::sqrt(te.sigma2 / static_cast<double>(data.n())));
  }
  const double emp = testing::sd(delta);
  const double mp = testing::mean(pert), mi = testing::mean(infl);
  double worst = 0.0;
  for (std::size_t r = 0; r < reps; ++r) worst = std::max(worst, std::abs(pert[r] / infl[r] - 1.0));
  out.detail << "first replicate perturbation SE " << pert[0] << " vs influence " << infl[0] << "; means " << mp << " / "
             << mi << "; worst per-replicate gap " << worst << "; empirical SE " << emp << "; ";
  out.require(std::abs(pert[0] / infl[0] - 1.0) <= 0.10, "single-dataset SEs within 10%");
  out.require(std::abs(mp / mi - 1.0) <= 0.10, "mean SEs within 10%");
  out.require(std::abs(mp / emp - 1.0) <= 0.15, "perturbation SE within 15% of empirical");
  out.require(std::abs(mi / emp - 1.0) <= 0.15, "influence SE within 15% of empirical");
}

void criterion7(Outcome& out) {
  const double z = testing::big_normal_quantile(0.975);
  const double p = power(0.28, 100);
  const double p_oracle = testing::big_normal_cdf(std::sqrt(100.0) * 0.28 - 1.96);
  out.detail << "power(0.28, 100)=" << p << " oracle " << p_oracle << "; ";
  out.require(std::abs(p - 0.7995) <= 1e-4, "power rounds to 0.7995");
  out.require(std::abs(p - p_oracle) <= 1e-4, "power matches oracle");

  const std::size_t n = solve_sample_size(0.3, 0.2, 100, 1.0);
  const double target = testing::big_normal_cdf(std::sqrt(100.0) * 0.2 - 1.96);
  std::size_t n_oracle = 1;
  while (testing::big_normal_cdf(std::sqrt(static_cast<double>(n_oracle)) * 0.3 - 1.96) < target) ++n_oracle;
  out.detail << "n*=" << n << " oracle " << n_oracle << "; z(0.975) oracle " << z << "; ";
  out.require(n == 45, "n* equals 45");
  out.require(n == n_oracle, "n* matches oracle");
  out.require(std::abs(normal_quantile(0.975) - z) <= 1e-4, "quantile matches oracle");
}

void criterion8(Outcome& out) {
  const auto data = generate(perfect_surrogate_setting(), 2000, 808).data;
  AnalysisConfig cfg;
  cfg.seed = 808;
  const auto cv = cv_estimate(data, make_cv_plan(data, cfg.cv_folds, cfg.seed), cfg);
  double rp50 = std::nan("");
  for (const auto& r : cv.rp) {
    if (r.n_bar == 50) rp50 = r.report.point;
  }
  out.detail << "RP(50)=" << rp50 << "; ";
  out.require(rp50 > 1.0, "RP(50) above 1");
  try {
    const auto d = design_from_surface(cv.surface, 50, 1.0, 0.05, 100000);
    const double at = cv.surface.lower_bound(static_cast<double>(d.n_star), 50.0, 0.05);
    const double below = cv.surface.lower_bound(static_cast<double>(d.n_star - 1), 50.0, 0.05);
    out.detail << "n*=" << d.n_star << " lower bound " << at << " at n*, " << below << " at n*-1; ";
    out.require(at >= 1.0, "lower bound reaches kappa at n*");
    out.require(d.n_star > 1 && below < 1.0, "lower bound below kappa at n*-1");
  } catch (const Error& e) {
    out.require(false, std::string("design failed: ") + e.what());
  }
}

void criterion9(Outcome& out) {
  const auto t0 = Clock::now();
  const auto st = make_setting(1, setting1_t());
  const auto data = generate(st, 2000, 909).data;
  AnalysisConfig cfg;
  cfg.resample_count = 100;

  const auto te = treatment_effect(data);
  const auto g = fit_transform(data, cfg);
  const auto eff = estimate_effects(data, g);
  double c_y = 0.0, c_g = 0.0;
  for (double v : te.psi) c_y += v;
  for (double v : eff.psi_g) c_g += v;
  out.detail << "influence sums " << c_y << ", " << c_g << "; ";
  out.require(std::abs(c_y) < 1e-9 && std::abs(c_g) < 1e-9, "influence values centred");

  const auto diag = check_conditions(data, transform_values(data, g), cfg);
  bool monotone = true;
  for (const auto* curve : {&diag.s0, &diag.s1}) {
    for (std::size_t k = 1; k < curve->size(); ++k) monotone &= (*curve)[k] <= (*curve)[k - 1];
  }
  out.require(monotone, "survival curves non-increasing");

  const auto again = generate(st, 2000, 909).data;
  bool same_data = std::ranges::equal(again.y(), data.y()) && std::ranges::equal(again.s(), data.s()) &&
                   std::ranges::equal(again.a(), data.a());
  const auto plan = make_cv_plan(data, 2, 909);
  const auto cv1 = cv_estimate(data, plan, cfg);
  const auto cv2 = cv_estimate(data, make_cv_plan(data, 2, 909), cfg);
  bool same_cv = cv1.rp.size() == cv2.rp.size();
  for (std::size_t j = 0; same_cv && j < cv1.rp.size(); ++j) {
    same_cv = cv1.rp[j].report.point == cv2.rp[j].report.point && cv1.rp[j].report.se == cv2.rp[j].report.se;
  }
  out.require(same_data, "seeded data reproducible");
  out.require(same_cv, "seeded CV estimates reproducible");

  bool sealed = true;
  for (std::size_t k = 0; k < plan.K(); ++k) {
    std::vector<double> y(data.y().begin(), data.y().end()), s(data.s().begin(), data.s().end());
    for (auto i : plan.complement(k)) {
      y[i] = 1e6;
      s[i] = 3.0 * s[i] + 50.0;
    }
    const TrialDataset poisoned(y, s, std::vector<int>(data.a().begin(), data.a().end()));
    sealed &= fit_fold_transform(data, plan, k, cfg).g_values == fit_fold_transform(poisoned, plan, k, cfg).g_values;
  }
  out.require(sealed, "held-out records never reach the fold fit");
  out.detail << "invariants checked in " << seconds_since(t0) << " s; ";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  int only = 0;
  app.add_option("--criterion", only, "run one criterion (1-9)")->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);

  const std::map<int, std::function<void(Outcome&)>> criteria = {
      {1, criterion1}, {2, criterion2}, {3, criterion3}, {4, criterion4}, {5, criterion5},
      {6, criterion6}, {7, criterion7}, {8, criterion8}, {9, criterion9}};
  bool all = true;
  for (const auto& [id, run] : criteria) {
    if (only && id != only) continue;
    Outcome out;
    const auto t0 = Clock::now();
    try {
      run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    std::printf("criterion %d: %s (%.1f s) %s\n", id, out.pass ? "PASS" : "FAIL", seconds_since(t0),
                out.detail.str().c_str());
    std::fflush(stdout);
    all &= out.pass;
  }
  return all ? 0 : 1;
}
