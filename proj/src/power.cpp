#include "optsurr/power.hpp"

#include <cmath>
#include <limits>

#include <boost/math/distributions/normal.hpp>

#include "optsurr/errors.hpp"

namespace optsurr {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw Error(ErrorCode::InvalidParameters, "quantile level must lie in (0, 1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

double power(double effect, double n, double z) {
  if (!(n >= 1.0)) throw Error(ErrorCode::InvalidParameters, "sample size must be at least 1");
  // 1 - Phi(x) evaluated as Phi(-x) keeps precision in the upper tail
  return normal_cdf(std::sqrt(n) * effect - z);
}

double relative_power(double effect_g, double effect_y, double n1, double n2, double z) {
  return power(effect_g, n1, z) / power(effect_y, n2, z);
}

std::size_t solve_sample_size(double effect_g, double effect_y, std::size_t n_bar, double rho, double z) {
  if (!(effect_g > 0.0)) throw Error(ErrorCode::NonpositiveSurrogateEffect, "effect_g = " + std::to_string(effect_g));
  const double target = rho * power(effect_y, static_cast<double>(n_bar), z);
  if (!(target > 0.0)) throw Error(ErrorCode::InvalidParameters, "target power must be positive");
  if (target >= 1.0) throw Error(ErrorCode::InfeasibleTarget, "rho * P_Y = " + std::to_string(target) + " >= 1");

  const double root = (z - normal_quantile(1.0 - target)) / effect_g;
  double guess = root > 0.0 ? std::ceil(root * root) : 1.0;
  constexpr double kCap = 1e15;
  if (!(guess <= kCap)) throw Error(ErrorCode::InfeasibleTarget, "required sample size overflows");
  auto n = static_cast<std::size_t>(std::max(guess, 1.0));
  while (n > 1 && power(effect_g, static_cast<double>(n - 1), z) >= target) --n;
  while (power(effect_g, static_cast<double>(n), z) < target) ++n;
  return n;
}

DesignResult design_for_rp(double effect_g, double effect_y, std::size_t n_bar, double rho, double z) {
  DesignResult r;
  r.n_star = solve_sample_size(effect_g, effect_y, n_bar, rho, z);
  r.n_bar = n_bar;
  r.target = DesignTarget::rp_target;
  r.target_value = rho;
  const auto nb = static_cast<double>(n_bar);
  r.achieved = relative_power(effect_g, effect_y, static_cast<double>(r.n_star), nb, z);
  r.achieved_below = r.n_star > 1 ? relative_power(effect_g, effect_y, static_cast<double>(r.n_star - 1), nb, z)
                                  : std::numeric_limits<double>::quiet_NaN();
  return r;
}

double RpSurface::rp(double n_star, double n_bar) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < effect_g.size(); ++k) {
    sum += relative_power(effect_g[k], effect_y[k], n_star, n_bar, z);
  }
  return sum / static_cast<double>(effect_g.size());
}

double RpSurface::rp_draw(std::size_t b, double n_star, double n_bar) const {
  const auto& g = draws_g[b];
  const auto& y = draws_y[b];
  double sum = 0.0;
  for (std::size_t k = 0; k < g.size(); ++k) sum += relative_power(g[k], y[k], n_star, n_bar, z);
  return sum / static_cast<double>(g.size());
}

double RpSurface::se(double n_star, double n_bar) const {
  const std::size_t b = draws_g.size();
  if (b < 2) throw Error(ErrorCode::InvalidParameters, "resampled surface needs at least 2 replicates");
  double mean = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < b; ++i) {
    const double v = rp_draw(i, n_star, n_bar);
    const double d = v - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (v - mean);
  }
  return std::sqrt(m2 / static_cast<double>(b - 1));
}

double RpSurface::lower_bound(double n_star, double n_bar, double alpha) const {
  return rp(n_star, n_bar) - normal_quantile(1.0 - alpha) * se(n_star, n_bar);
}

DesignResult design_from_surface(const RpSurface& surface, std::size_t n_bar, double kappa, double alpha,
                                 std::size_t max_n) {
  if (!(kappa > 0.0)) throw Error(ErrorCode::InvalidParameters, "kappa must be positive");
  if (surface.effect_g.empty() || surface.effect_g.size() != surface.effect_y.size()) {
    throw Error(ErrorCode::InvalidParameters, "empty or inconsistent RP surface");
  }
  const auto nb = static_cast<double>(n_bar);
  auto lb = [&](std::size_t n) { return surface.lower_bound(static_cast<double>(n), nb, alpha); };

  std::size_t hi = 1;
  std::size_t lo = 0;  // largest size known to fail; 0 means none yet
  while (lb(hi) < kappa) {
    if (hi >= max_n) {
      throw Error(ErrorCode::NoFeasibleN, "lower bound stays below kappa=" + std::to_string(kappa) +
                                              " up to n*=" + std::to_string(max_n));
    }
    lo = hi;
    hi = std::min(hi * 2, max_n);
  }
  while (lo + 1 < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (lb(mid) >= kappa) hi = mid; else lo = mid;
  }
  DesignResult r;
  r.n_star = hi;
  r.n_bar = n_bar;
  r.target = DesignTarget::ci_floor;
  r.target_value = kappa;
  r.alpha = alpha;
  r.achieved = lb(hi);
  r.achieved_below = hi > 1 ? lb(hi - 1) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace optsurr
