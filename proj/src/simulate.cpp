#include "optsurr/simulate.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/gamma.hpp>
#include <boost/math/distributions/normal.hpp>

#include "optsurr/comparators.hpp"
#include "optsurr/errors.hpp"
#include "optsurr/kernel.hpp"
#include "optsurr/power.hpp"
#include "optsurr/resample.hpp"

namespace optsurr {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

double SurrogateLaw::pdf(double s) const {
  switch (kind) {
    case Kind::gamma:
      return s <= 0.0 ? 0.0 : boost::math::pdf(boost::math::gamma_distribution<double>(p1, p2), s);
    case Kind::uniform:
      return (s >= p1 && s <= p2) ? 1.0 / (p2 - p1) : 0.0;
    case Kind::normal:
      return boost::math::pdf(boost::math::normal_distribution<double>(p1, p2), s);
  }
  return 0.0;
}

double SurrogateLaw::quantile(double p) const {
  switch (kind) {
    case Kind::gamma:
      return boost::math::quantile(boost::math::gamma_distribution<double>(p1, p2), p);
    case Kind::uniform:
      return p1 + p * (p2 - p1);
    case Kind::normal:
      return boost::math::quantile(boost::math::normal_distribution<double>(p1, p2), p);
  }
  return 0.0;
}

double SurrogateLaw::sample(Rng& rng) const {
  switch (kind) {
    case Kind::gamma: return std::gamma_distribution<double>(p1, p2)(rng);
    case Kind::uniform: return std::uniform_real_distribution<double>(p1, p2)(rng);
    case Kind::normal: return std::normal_distribution<double>(p1, p2)(rng);
  }
  return 0.0;
}

Interval SurrogateLaw::support(double tail) const {
  if (kind == Kind::uniform) return {p1, p2};
  return {quantile(tail), quantile(1.0 - tail)};
}

double SimulationSetting::conditional_mean(int arm, double s) const {
  const auto& link = arm == 1 ? link1 : link0;
  if (family != OutcomeFamily::exponential_threshold) return link(s);
  const double den = arm == 1 ? alpha1 + beta1 * link(s) : alpha0 + beta0 * link(s);
  if (den > 0.0) return std::exp(-t * den);
  return den == 0.0 ? 1.0 : 0.0;
}

double SimulationSetting::conditional_variance(int arm, double s) const {
  if (family == OutcomeFamily::gaussian) return noise_sd * noise_sd;
  const double m = conditional_mean(arm, s);
  return m * (1.0 - m);
}

void SimulationSetting::validate() const {
  auto check_law = [](const SurrogateLaw& law) {
    const bool ok = law.kind == SurrogateLaw::Kind::uniform ? law.p1 < law.p2 : (law.p1 > 0.0 || law.kind == SurrogateLaw::Kind::normal) && law.p2 > 0.0;
    if (!ok) throw Error(ErrorCode::InvalidParameters, "invalid surrogate law parameters");
  };
  check_law(law0);
  check_law(law1);
  if (!link0 || !link1) throw Error(ErrorCode::InvalidParameters, "setting needs both link functions");
  if (uses_threshold() && !(t > 0.0)) throw Error(ErrorCode::InvalidParameters, "threshold t must be positive");
  if (covariance) {
    if (law0.kind != SurrogateLaw::Kind::normal || law1.kind != SurrogateLaw::Kind::normal) {
      throw Error(ErrorCode::InvalidParameters, "correlated surrogates need normal laws");
    }
    if (*covariance * *covariance >= law0.p2 * law0.p2 * law1.p2 * law1.p2) {
      throw Error(ErrorCode::InvalidParameters, "covariance is not positive definite");
    }
  }
  if (family == OutcomeFamily::gaussian && !(noise_sd >= 0.0)) {
    throw Error(ErrorCode::InvalidParameters, "noise sd must be nonnegative");
  }
}

SimulationSetting make_setting(int id, double t) {
  SimulationSetting s;
  s.id = std::to_string(id);
  s.t = t;
  const auto identity = [](double x) { return x; };
  switch (id) {
    case 1:
      s.law1 = SurrogateLaw::gamma(2, 2);
      s.law0 = SurrogateLaw::gamma(9, 0.5);
      s.link1 = s.link0 = identity;
      break;
    case 2:
      s.law1 = SurrogateLaw::gamma(2, 2);
      s.law0 = SurrogateLaw::gamma(9, 0.5);
      s.link1 = [](double x) { return x - 3.0 * std::log(x); };
      s.link0 = [](double) { return 3.0; };
      break;
    case 3:
      s.law1 = SurrogateLaw::gamma(5, 1);
      s.law0 = SurrogateLaw::gamma(9, 0.5);
      s.link1 = [](double x) { return x / 2.0; };
      s.link0 = [](double x) { return 9.0 / 11.0 + x; };
      break;
    case 4:
      s.law1 = SurrogateLaw::uniform(1, 3);
      s.law0 = SurrogateLaw::uniform(2, 4);
      s.link1 = s.link0 = identity;
      break;
    case 5:
      s.law1 = SurrogateLaw::normal(5, std::sqrt(2.0));
      s.law0 = SurrogateLaw::normal(5, 1);
      s.covariance = 1.0;
      s.family = OutcomeFamily::bernoulli_exp;
      s.link1 = [](double x) { return std::exp(-1.0 - 0.1 * x * x); };
      s.link0 = [](double x) { return std::exp(-4.0 - 0.1 * x * x); };
      break;
    default:
      throw Error(ErrorCode::InvalidParameters, "unknown setting id " + std::to_string(id));
  }
  return s;
}

SimulationSetting perfect_surrogate_setting() {
  SimulationSetting s;
  s.id = "custom";
  s.law1 = SurrogateLaw::normal(1, 1);
  s.law0 = SurrogateLaw::normal(0, 1);
  s.family = OutcomeFamily::gaussian;
  s.link0 = s.link1 = [](double x) { return x; };
  s.noise_sd = 1.0;
  return s;
}

double table_pte(int id) {
  switch (id) {
    case 1: return 0.657;
    case 2: return 0.188;
    case 3: return 0.095;
    case 4: return 0.772;
    default: throw Error(ErrorCode::InvalidParameters, "no tabulated PTE for setting " + std::to_string(id));
  }
}

namespace {
double draw_outcome(const SimulationSetting& st, int arm, double s, Rng& rng) {
  switch (st.family) {
    case OutcomeFamily::exponential_threshold: {
      const double e = std::exponential_distribution<double>(1.0)(rng);
      const double den = arm == 1 ? st.alpha1 + st.beta1 * st.link1(s) : st.alpha0 + st.beta0 * st.link0(s);
      if (den > 0.0) return e > st.t * den ? 1.0 : 0.0;
      return den == 0.0 ? 1.0 : 0.0;
    }
    case OutcomeFamily::bernoulli_exp:
      return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < st.conditional_mean(arm, s) ? 1.0 : 0.0;
    case OutcomeFamily::gaussian:
      return st.conditional_mean(arm, s) + st.noise_sd * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  return 0.0;
}

void draw_surrogates(const SimulationSetting& st, Rng& rng, double& s0, double& s1) {
  if (st.covariance) {
    std::normal_distribution<double> z(0.0, 1.0);
    const double z0 = z(rng), z1 = z(rng);
    const double sd0 = st.law0.p2, sd1 = st.law1.p2, cov = *st.covariance;
    s0 = st.law0.p1 + sd0 * z0;
    s1 = st.law1.p1 + (cov / sd0) * z0 + std::sqrt(sd1 * sd1 - cov * cov / (sd0 * sd0)) * z1;
    return;
  }
  s0 = st.law0.sample(rng);
  s1 = st.law1.sample(rng);
}
}  // namespace

SimulatedData generate(const SimulationSetting& setting, std::size_t n, std::uint64_t seed, bool keep) {
  setting.validate();
  if (n < 4) throw Error(ErrorCode::InvalidParameters, "n must be at least 4");
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> y(n), s(n);
  std::vector<int> a(n);
  SimulatedData out;
  if (keep) {
    out.s0.resize(n);
    out.s1.resize(n);
    out.y0.resize(n);
    out.y1.resize(n);
  }
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = coin(rng) ? 1 : 0;
    double s0, s1;
    draw_surrogates(setting, rng, s0, s1);
    const double y0 = draw_outcome(setting, 0, s0, rng);
    const double y1 = draw_outcome(setting, 1, s1, rng);
    s[i] = a[i] ? s1 : s0;
    y[i] = a[i] ? y1 : y0;
    if (keep) {
      out.s0[i] = s0;
      out.s1[i] = s1;
      out.y0[i] = y0;
      out.y1[i] = y1;
    }
  }
  out.data = TrialDataset(std::move(y), std::move(s), std::move(a));
  return out;
}

Truth analytic_truth(const SimulationSetting& setting, const TruthOptions& opt) {
  setting.validate();
  const SupportPartition part = make_partition(setting.law0.support(), setting.law1.support());
  const auto grid = make_grid(part, opt.grid_points);
  const auto w = trapezoid_weights(grid);
  const std::size_t n = grid.size();
  std::vector<double> m0(n), m1(n), f0(n), f1(n);
  for (std::size_t j = 0; j < n; ++j) {
    m0[j] = setting.conditional_mean(0, grid[j]);
    m1[j] = setting.conditional_mean(1, grid[j]);
    f0[j] = setting.law0.pdf(grid[j]);
    f1[j] = setting.law1.pdf(grid[j]);
  }
  const TransformEstimate closed = build_transform(
      part, make_curves(grid, part, [&](double x) { return setting.conditional_mean(0, x); },
                        [&](double x) { return setting.conditional_mean(1, x); },
                        [&](double x) { return setting.law0.pdf(x); }, [&](double x) { return setting.law1.pdf(x); }, 0.0));

  Truth truth;
  truth.orientation = part.orientation;
  std::vector<double> g = closed.g_values;
  truth.lambda = closed.lambda;
  truth.c = closed.c;
  if (opt.use_oracle) {
    const OracleSolution oracle = oracle_gopt(grid, m0, m1, f0, f1, part);
    for (std::size_t j = 0; j < n; ++j) truth.oracle_gap = std::max(truth.oracle_gap, std::abs(oracle.g[j] - g[j]));
    g = oracle.g;
    truth.lambda = oracle.multiplier;
    truth.c = oracle.c;
  }

  double mass[2] = {0, 0}, mu[2] = {0, 0}, mg[2] = {0, 0}, ev[2] = {0, 0};
  for (std::size_t j = 0; j < n; ++j) {
    const Region r = classify(grid[j], part);
    if (r != Region::d_0) {
      mass[1] += w[j] * f1[j];
      mu[1] += w[j] * f1[j] * m1[j];
      mg[1] += w[j] * f1[j] * g[j];
      ev[1] += w[j] * f1[j] * setting.conditional_variance(1, grid[j]);
    }
    if (r != Region::d_1) {
      mass[0] += w[j] * f0[j];
      mu[0] += w[j] * f0[j] * m0[j];
      mg[0] += w[j] * f0[j] * g[j];
      ev[0] += w[j] * f0[j] * setting.conditional_variance(0, grid[j]);
    }
  }
  for (int a = 0; a < 2; ++a) {
    mu[a] /= mass[a];
    mg[a] /= mass[a];
    ev[a] /= mass[a];
  }
  double vy[2] = {0, 0}, vg[2] = {0, 0};
  for (std::size_t j = 0; j < n; ++j) {
    const Region r = classify(grid[j], part);
    if (r != Region::d_0) {
      vy[1] += w[j] * f1[j] * (m1[j] - mu[1]) * (m1[j] - mu[1]);
      vg[1] += w[j] * f1[j] * (g[j] - mg[1]) * (g[j] - mg[1]);
    }
    if (r != Region::d_1) {
      vy[0] += w[j] * f0[j] * (m0[j] - mu[0]) * (m0[j] - mu[0]);
      vg[0] += w[j] * f0[j] * (g[j] - mg[0]) * (g[j] - mg[0]);
    }
  }
  for (int a = 0; a < 2; ++a) {
    vy[a] = vy[a] / mass[a] + ev[a];  // total variance of Y^(a)
    vg[a] /= mass[a];
  }
  truth.mu0 = mu[0];
  truth.mu1 = mu[1];
  truth.delta = mu[1] - mu[0];
  truth.delta_g = mg[1] - mg[0];
  truth.pte = truth.delta_g / truth.delta;
  // balanced randomisation: Var(estimate) * n = Var_1 / 0.5 + Var_0 / 0.5
  truth.sigma = std::sqrt(2.0 * (vy[0] + vy[1]));
  truth.sigma_g = std::sqrt(2.0 * (vg[0] + vg[1]));
  truth.n_bars = opt.n_bars;
  for (auto nb : opt.n_bars) {
    const auto x = static_cast<double>(nb);
    truth.rp.push_back(relative_power(truth.effect_g(), truth.effect_y(), x, x, opt.z));
  }

  if (opt.mc_draws > 0) {
    Rng rng(opt.seed);
    const std::size_t N = opt.mc_draws;
    auto g_at = [&](double s) {
      if (s <= grid.front()) return g.front();
      if (s >= grid.back()) return g.back();
      const auto it = std::upper_bound(grid.begin(), grid.end(), s);
      const auto j = static_cast<std::size_t>(it - grid.begin()) - 1;
      return g[j] + (s - grid[j]) / (grid[j + 1] - grid[j]) * (g[j + 1] - g[j]);
    };
    double sd = 0, sdd = 0, sg = 0, sgg = 0;
    for (std::size_t i = 0; i < N; ++i) {
      double s0, s1;
      draw_surrogates(setting, rng, s0, s1);
      const double d = draw_outcome(setting, 1, s1, rng) - draw_outcome(setting, 0, s0, rng);
      const double dg = g_at(s1) - g_at(s0);
      sd += d;
      sdd += d * d;
      sg += dg;
      sgg += dg * dg;
    }
    const auto nn = static_cast<double>(N);
    truth.mc_draws = N;
    truth.mc_delta = sd / nn;
    truth.mc_delta_se = std::sqrt((sdd / nn - truth.mc_delta * truth.mc_delta) / nn);
    truth.mc_delta_g = sg / nn;
    truth.mc_delta_g_se = std::sqrt((sgg / nn - truth.mc_delta_g * truth.mc_delta_g) / nn);
  }
  return truth;
}

Truth monte_carlo_truth(const SimulationSetting& setting, std::size_t N, std::size_t grid_points,
                        const std::vector<std::size_t>& n_bars, std::uint64_t seed) {
  if (N < 100000) throw Error(ErrorCode::InvalidParameters, "N must be at least 1e5");
  TruthOptions opt;
  opt.grid_points = grid_points;
  opt.n_bars = n_bars;
  opt.mc_draws = N;
  opt.seed = seed;
  return analytic_truth(setting, opt);
}

double calibrate_t(const SimulationSetting& setting, double target, double t_lo, double t_hi,
                   std::size_t grid_points) {
  if (!setting.uses_threshold()) throw Error(ErrorCode::InvalidParameters, "setting has no threshold t");
  if (!(t_lo > 0.0 && t_lo < t_hi)) throw Error(ErrorCode::InvalidParameters, "invalid t range");
  TruthOptions opt;
  opt.grid_points = grid_points;
  opt.use_oracle = false;
  opt.n_bars = {};
  auto excess = [&](double t) {
    SimulationSetting s = setting;
    s.t = t;
    return analytic_truth(s, opt).pte - target;
  };
  constexpr int kScan = 80;
  double a = t_lo, fa = excess(a);
  for (int i = 1; i <= kScan; ++i) {
    double b = t_lo * std::pow(t_hi / t_lo, static_cast<double>(i) / kScan);
    const double fb = excess(b);
    if (fa == 0.0) return a;
    if ((fa < 0.0) != (fb < 0.0)) {
      for (int it = 0; it < 100 && (b - a) > 1e-12 * b; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = excess(mid);
        if ((fm < 0.0) == (fa < 0.0)) { a = mid; fa = fm; } else { b = mid; }
      }
      return 0.5 * (a + b);
    }
    a = b;
    fa = fb;
  }
  throw Error(ErrorCode::InfeasibleTarget, "true PTE never crosses " + std::to_string(target) + " for t in range");
}

namespace {
StudyRow make_row(const std::string& name, double truth, const std::vector<double>& est,
                  const std::vector<double>& se, bool with_se) {
  StudyRow row;
  row.estimand = name;
  row.truth = truth;
  std::vector<double> e, s;
  for (std::size_t i = 0; i < est.size(); ++i) {
    if (std::isnan(est[i])) continue;
    e.push_back(est[i]);
    if (with_se) s.push_back(se[i]);
  }
  row.count = e.size();
  if (e.empty()) {
    row.est = row.ese = row.ase = row.cp = kNaN;
    return row;
  }
  row.est = std::accumulate(e.begin(), e.end(), 0.0) / static_cast<double>(e.size());
  row.ese = e.size() >= 2 ? sample_sd(e) : 0.0;
  row.ase = row.cp = kNaN;
  if (with_se) {
    row.ase = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    if (!std::isnan(truth)) {
      std::size_t hit = 0;
      const double z = normal_quantile(0.975);
      for (std::size_t i = 0; i < e.size(); ++i) hit += std::abs(e[i] - truth) <= z * s[i];
      row.cp = static_cast<double>(hit) / static_cast<double>(e.size());
    }
  }
  return row;
}
}  // namespace

StudySummary run_study(const SimulationSetting& setting, std::size_t reps, std::size_t n, const AnalysisConfig& cfg,
                       const Truth& truth, const StudyOptions& options) {
  if (reps == 0) throw Error(ErrorCode::InvalidParameters, "reps must be positive");
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  StudySummary summary;
  summary.setting = setting.id;
  summary.t = setting.t;
  summary.reps = reps;
  summary.n = n;
  const double allowed = 0.02 * static_cast<double>(reps);

  for (std::size_t r = 0; r < reps; ++r) {
    ReplicateRecord rec;
    rec.index = r;
    try {
      const SimulatedData sim = generate(setting, n, derive_seed(cfg.seed, streams::datasets, r));
      AnalysisConfig rc = cfg;
      rc.seed = derive_seed(cfg.seed, streams::perturbation, r);
      rec.orientation = estimate_partition(sim.data, cfg.support_trim).orientation;
      const CvPlan plan = make_cv_plan(sim.data, cfg.cv_folds, rc.seed);
      CvOptions co;
      co.perturb = options.perturb;
      const CvResult cv = cv_estimate(sim.data, plan, rc, co);
      rec.pte = cv.pte ? cv.pte->point : kNaN;
      rec.pte_se = cv.pte ? cv.pte->se : kNaN;
      for (const auto& row : cv.rp) {
        rec.rp.push_back(row.report.point);
        rec.rp_se.push_back(row.report.se);
      }
      rec.pte_f = kNaN;
      if (options.comparators) {
        try {
          rec.pte_f = pte_freedman(sim.data).pte_f;
        } catch (const Error&) {
        }
      }
    } catch (const Error& e) {
      ++summary.failures;
      summary.notes.push_back("replicate " + std::to_string(r) + " failed: " + e.what());
      if (static_cast<double>(summary.failures) > allowed) {
        throw Error(ErrorCode::StudyFailure, std::to_string(summary.failures) + " of " + std::to_string(reps) +
                                                 " replicates failed; last: " + e.what());
      }
      continue;
    }
    summary.orientation_counts[orientation_name(rec.orientation)]++;
    summary.replicates.push_back(std::move(rec));
  }

  auto collect = [&](auto getter) {
    std::vector<double> v;
    for (const auto& rec : summary.replicates) v.push_back(getter(rec));
    return v;
  };
  summary.rows.push_back(make_row("PTE", truth.pte, collect([](const ReplicateRecord& r) { return r.pte; }),
                                  collect([](const ReplicateRecord& r) { return r.pte_se; }), options.perturb));
  for (std::size_t j = 0; j < cfg.n_bars.size(); ++j) {
    double t = kNaN;
    for (std::size_t q = 0; q < truth.n_bars.size(); ++q) {
      if (truth.n_bars[q] == cfg.n_bars[j]) t = truth.rp[q];
    }
    summary.rows.push_back(make_row("RP(" + std::to_string(cfg.n_bars[j]) + ")", t,
                                    collect([j](const ReplicateRecord& r) { return r.rp[j]; }),
                                    collect([j](const ReplicateRecord& r) { return r.rp_se[j]; }), options.perturb));
  }
  if (options.comparators) {
    summary.rows.push_back(make_row("PTE_F", kNaN, collect([](const ReplicateRecord& r) { return r.pte_f; }), {},
                                    false));
    summary.notes.push_back("PTE_F uses linear least squares for both fits");
  }
  const bool d0_hit = summary.orientation_counts.count("d0_above") + summary.orientation_counts.count("d0_below") > 0;
  if (d0_hit) summary.notes.push_back("nonempty D0 branch exercised in some replicates");
  summary.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

std::string to_markdown(const StudySummary& s) {
  std::ostringstream out;
  auto num = [](double v) {
    if (std::isnan(v)) return std::string("-");
    std::ostringstream o;
    o << std::fixed << std::setprecision(3) << v;
    return o.str();
  };
  out << "Setting " << s.setting << ", n = " << s.n << ", " << s.reps << " replications";
  if (s.t > 0.0) out << ", t = " << std::setprecision(6) << s.t;
  out << "\n\n| Estimand | True | Est | ESE | ASE | CP |\n|---|---|---|---|---|---|\n";
  for (const auto& r : s.rows) {
    out << "| " << r.estimand << " | " << num(r.truth) << " | " << num(r.est) << " | " << num(r.ese) << " | "
        << num(r.ase) << " | " << num(r.cp) << " |\n";
  }
  out << "\nPartition orientation:";
  for (const auto& [k, v] : s.orientation_counts) out << ' ' << k << '=' << v;
  out << "\nFailures: " << s.failures << ", runtime " << std::fixed << std::setprecision(1) << s.runtime_seconds
      << " s\n";
  for (const auto& note : s.notes) out << "\n- " << note;
  out << '\n';
  return out.str();
}

}  // namespace optsurr
