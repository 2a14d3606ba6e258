#include "optsurr/effects.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "optsurr/errors.hpp"
#include "optsurr/kernel.hpp"

namespace optsurr {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

ArmContrast arm_contrast(std::span<const double> values, std::span<const int> arms,
                         std::span<const double> weights, std::span<const unsigned char> include) {
  const std::size_t n = values.size();
  double wsum[2] = {0.0, 0.0}, vsum[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < n; ++i) {
    if (!include.empty() && !include[i]) continue;
    const double w = weights.empty() ? 1.0 : weights[i];
    wsum[arms[i]] += w;
    vsum[arms[i]] += w * values[i];
  }
  if (!(wsum[0] > 0.0) || !(wsum[1] > 0.0)) {
    throw Error(ErrorCode::InvalidParameters, "an arm has no weight in the contrast");
  }
  ArmContrast out;
  out.mu0 = vsum[0] / wsum[0];
  out.mu1 = vsum[1] / wsum[1];
  out.delta = out.mu1 - out.mu0;
  const double total = wsum[0] + wsum[1];
  const double mu[2] = {out.mu0, out.mu1};
  out.psi.assign(n, 0.0);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!include.empty() && !include[i]) continue;
    const int a = arms[i];
    const double w = weights.empty() ? 1.0 : weights[i];
    const double p = (total / wsum[a]) * (values[i] - mu[a]) * (a == 1 ? 1.0 : -1.0);
    out.psi[i] = p;
    ss += w * p * p;
  }
  out.sigma2 = ss / total;
  return out;
}

ArmContrast treatment_effect(const TrialDataset& data) { return arm_contrast(data.y(), data.a()); }

namespace {
SurrogateContrast finish_surrogate(const TrialDataset& data, const std::vector<double>& gv,
                                   const std::vector<unsigned char>& include, std::size_t excluded,
                                   double cap) {
  if (static_cast<double>(excluded) > cap * static_cast<double>(data.n())) {
    throw Error(ErrorCode::TooManyExcluded, std::to_string(excluded) + " of " + std::to_string(data.n()) +
                                                " subjects fall outside the transform support");
  }
  return {arm_contrast(gv, data.a(), {}, include), excluded};
}
}  // namespace

SurrogateContrast surrogate_effect(const TrialDataset& data, const TransformEstimate& g, double cap) {
  GridInterpolator interp(g.curves.grid, data.s());
  std::vector<double> gv(data.n(), 0.0);
  std::vector<unsigned char> include(data.n(), 1);
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (interp.inside(i)) gv[i] = interp.value(g.g_values, i); else include[i] = 0;
  }
  return finish_surrogate(data, gv, include, interp.outside_count(), cap);
}

SurrogateContrast surrogate_effect(const TrialDataset& data, const std::function<double(double)>& g,
                                   double cap) {
  std::vector<double> gv(data.n(), 0.0);
  std::vector<unsigned char> include(data.n(), 1);
  std::size_t excluded = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    try {
      gv[i] = g(data.s()[i]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::OutOfSupport) throw;
      include[i] = 0;
      ++excluded;
    }
  }
  return finish_surrogate(data, gv, include, excluded, cap);
}

EffectEstimate estimate_effects(const TrialDataset& data, const TransformEstimate& g, double cap) {
  const ArmContrast y = treatment_effect(data);
  SurrogateContrast s = surrogate_effect(data, g, cap);
  EffectEstimate e;
  e.delta = y.delta;
  e.sigma2 = y.sigma2;
  e.psi = y.psi;
  e.mu0 = y.mu0;
  e.mu1 = y.mu1;
  e.delta_g = s.contrast.delta;
  e.sigma2_g = s.contrast.sigma2;
  e.psi_g = std::move(s.contrast.psi);
  e.mu_g0 = s.contrast.mu0;
  e.mu_g1 = s.contrast.mu1;
  e.excluded = s.excluded;
  return e;
}

double pte(double delta_g, double delta) {
  if (delta == 0.0) throw Error(ErrorCode::NullPrimaryEffect, "primary effect is exactly zero");
  return delta_g / delta;
}

double guarded_pte(double delta_g, double delta, double sigma2, std::size_t n, double threshold) {
  const double se = std::sqrt(sigma2 / static_cast<double>(n));
  if (!(std::abs(delta) >= threshold * se) || delta == 0.0) {
    throw Error(ErrorCode::NullPrimaryEffect, "|delta|/se = " + std::to_string(std::abs(delta) / se) +
                                                  " is below " + std::to_string(threshold));
  }
  return delta_g / delta;
}

SurrogacyDiagnostics check_conditions(const TrialDataset& data, std::span<const double> g_values,
                                      const AnalysisConfig& cfg, std::size_t u_points, double band_se) {
  std::vector<double> gv[2], yv[2];
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (std::isnan(g_values[i])) continue;
    gv[data.a()[i]].push_back(g_values[i]);
    yv[data.a()[i]].push_back(data.y()[i]);
  }
  for (int a = 0; a < 2; ++a) {
    if (gv[a].size() < 2) throw Error(ErrorCode::InvalidParameters, "too few transformed values in an arm");
  }

  SurrogacyDiagnostics d;
  const double lo = std::max(quantile(gv[0], 0.025), quantile(gv[1], 0.025));
  const double hi = std::min(quantile(gv[0], 0.975), quantile(gv[1], 0.975));
  const bool overlap = lo < hi;
  const double ulo = overlap ? lo : std::min(quantile(gv[0], 0.025), quantile(gv[1], 0.025));
  const double uhi = overlap ? hi : std::max(quantile(gv[0], 0.975), quantile(gv[1], 0.975));
  const std::size_t m = std::max<std::size_t>(u_points, 2);
  d.u_grid.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    d.u_grid[k] = ulo + (uhi - ulo) * static_cast<double>(k) / static_cast<double>(m - 1);
  }

  std::vector<double> sorted[2] = {gv[0], gv[1]};
  for (auto& v : sorted) std::sort(v.begin(), v.end());
  auto survival = [&](int a, double u) {
    const auto& v = sorted[a];
    return static_cast<double>(v.end() - std::upper_bound(v.begin(), v.end(), u)) / static_cast<double>(v.size());
  };

  double h[2];
  for (int a = 0; a < 2; ++a) {
    try {
      h[a] = select_bandwidth(gv[a], cfg);
    } catch (const Error&) {
      h[a] = 1.0;  // a constant transform: any bandwidth gives the arm mean
    }
  }
  // Nadaraya-Watson mean with its sandwich variance sum k^2 (y - m)^2 / (sum k)^2.
  auto regress = [&](int a, double u, double& mean, double& var) {
    double sk = 0.0, sky = 0.0;
    for (std::size_t i = 0; i < gv[a].size(); ++i) {
      const double k = gaussian_kernel((gv[a][i] - u) / h[a]);
      sk += k;
      sky += k * yv[a][i];
    }
    if (!(sk > 1e-300)) { mean = var = kNaN; return; }
    mean = sky / sk;
    double sv = 0.0;
    for (std::size_t i = 0; i < gv[a].size(); ++i) {
      const double k = gaussian_kernel((gv[a][i] - u) / h[a]);
      sv += k * k * (yv[a][i] - mean) * (yv[a][i] - mean);
    }
    var = sv / (sk * sk);
  };

  const double n0 = static_cast<double>(gv[0].size()), n1 = static_cast<double>(gv[1].size());
  d.c1.max_gap = d.c2.max_gap = -std::numeric_limits<double>::infinity();
  d.s0.resize(m);
  d.s1.resize(m);
  d.m0.assign(m, kNaN);
  d.m1.assign(m, kNaN);
  bool any_m = false;
  for (std::size_t k = 0; k < m; ++k) {
    const double u = d.u_grid[k];
    d.s0[k] = survival(0, u);
    d.s1[k] = survival(1, u);
    const double se = std::sqrt(d.s1[k] * (1 - d.s1[k]) / n1 + d.s0[k] * (1 - d.s0[k]) / n0);
    const double gap = d.s0[k] - d.s1[k];
    d.c1.max_gap = std::max(d.c1.max_gap, gap);
    d.c1.max_violation = std::max(d.c1.max_violation, gap - band_se * se);
    if (!overlap) continue;
    double v0, v1;
    regress(0, u, d.m0[k], v0);
    regress(1, u, d.m1[k], v1);
    if (std::isnan(d.m0[k]) || std::isnan(d.m1[k])) continue;
    any_m = true;
    const double mgap = d.m0[k] - d.m1[k];
    d.c2.max_gap = std::max(d.c2.max_gap, mgap);
    const double rounding = 64.0 * std::numeric_limits<double>::epsilon() * (std::abs(d.m0[k]) + std::abs(d.m1[k]));
    d.c2.max_violation = std::max(d.c2.max_violation, mgap - band_se * std::sqrt(v0 + v1) - rounding);
  }
  if (!any_m) d.c2.max_gap = 0.0;
  d.c1.holds = d.c1.max_violation <= 0.0;
  d.c2.holds = d.c2.max_violation <= 0.0;
  return d;
}

ReferenceDistribution reference_distribution(const CurveSet& curves, const SupportPartition& partition) {
  const LambdaC lc = solve_lambda_c(curves, partition);
  const auto& grid = curves.grid;
  const auto w = trapezoid_weights(grid);
  const std::size_t n = grid.size();

  double r_star = 0.0;
  if (partition.s_star) {
    const auto it = std::lower_bound(grid.begin(), grid.end(), *partition.s_star);
    r_star = curves.r[static_cast<std::size_t>(it - grid.begin())];
  }
  double p0 = 0.0;
  std::vector<Region> region(n);
  for (std::size_t j = 0; j < n; ++j) {
    region[j] = classify(grid[j], partition);
    if (region[j] == Region::d_c) p0 += w[j] * curves.f0[j];
  }
  const double scale = p0 / (lc.k2 + lc.k1 * r_star);

  ReferenceDistribution out;
  out.f_new.resize(n);
  double cum = 0.0, mu1 = 0.0, mu0 = 0.0, g1 = 0.0, g0 = 0.0, ref1 = 0.0, ref0 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool om1 = region[j] != Region::d_0;
    const bool om0 = region[j] != Region::d_1;
    const double g = region[j] == Region::d_0 ? curves.m0[j] + *lc.c : curves.m1[j] + lc.lambda * curves.r[j];
    if (om1) {
      mu1 += w[j] * curves.m1[j] * curves.f1[j];
      g1 += w[j] * g * curves.f1[j];
    }
    if (om0) {
      mu0 += w[j] * curves.m0[j] * curves.f0[j];
      g0 += w[j] * g * curves.f0[j];
    }
    if (region[j] == Region::d_c) {
      const double mass = scale * w[j] * curves.f0[j];
      cum += mass;
      ref1 += mass * curves.m1[j];
      ref0 += mass * curves.m0[j];
    }
    out.f_new[j] = cum;
  }
  out.delta_g = g1 - g0;
  out.delta_l = (mu1 - ref1) - (mu0 - ref0);
  out.gap = out.delta_g - out.delta_l;
  return out;
}

std::vector<double> transform_values(const TrialDataset& data, const TransformEstimate& g) {
  GridInterpolator interp(g.curves.grid, data.s());
  std::vector<double> gv(data.n(), kNaN);
  for (std::size_t i = 0; i < data.n(); ++i) {
    if (interp.inside(i)) gv[i] = interp.value(g.g_values, i);
  }
  return gv;
}

SurrogacyDiagnostics diagnose(const TrialDataset& data, const TransformEstimate& g, const AnalysisConfig& cfg) {
  SurrogacyDiagnostics d = check_conditions(data, transform_values(data, g), cfg);
  ReferenceDistribution ref = reference_distribution(g.curves, g.partition);
  d.f_new = std::move(ref.f_new);
  d.delta_l_gap = ref.gap;
  return d;
}

}  // namespace optsurr
