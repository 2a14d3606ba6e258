#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace optsurr {

double normal_cdf(double x);
double normal_quantile(double p);

// One-sided power 1 - Phi(z - sqrt(n) * effect).
double power(double effect, double n, double z = 1.96);

// power(effect_g, n1) / power(effect_y, n2)
double relative_power(double effect_g, double effect_y, double n1, double n2, double z = 1.96);

// Smallest n with power(effect_g, n) >= rho * power(effect_y, n_bar).
std::size_t solve_sample_size(double effect_g, double effect_y, std::size_t n_bar, double rho,
                              double z = 1.96);

enum class DesignTarget { rp_target, ci_floor };

struct DesignResult {
  std::size_t n_star = 0;
  std::size_t n_bar = 0;
  DesignTarget target = DesignTarget::rp_target;
  double target_value = 0.0;    // rho or kappa
  double alpha = 0.0;           // only for ci_floor
  double achieved = 0.0;        // RP or its lower confidence bound at n_star
  double achieved_below = 0.0;  // same at n_star - 1 (NaN when n_star == 1)
};

DesignResult design_for_rp(double effect_g, double effect_y, std::size_t n_bar, double rho, double z = 1.96);

// Per-fold effect sizes of a cross-validated analysis, at the point estimate
// and under each perturbation replicate. RP_CV(n*, n_bar) averages the fold
// ratios power(eg_k, n*) / power(ey_k, n_bar).
struct RpSurface {
  std::vector<double> effect_g;               // per fold
  std::vector<double> effect_y;               // per fold
  std::vector<std::vector<double>> draws_g;   // replicate x fold
  std::vector<std::vector<double>> draws_y;   // replicate x fold
  double z = 1.96;

  double rp(double n_star, double n_bar) const;
  double rp_draw(std::size_t b, double n_star, double n_bar) const;
  double se(double n_star, double n_bar) const;
  // rp - z_{1-alpha} * se
  double lower_bound(double n_star, double n_bar, double alpha) const;
};

// Minimal n* (exponential bracketing then bisection) whose one-sided lower
// confidence bound of RP_CV(n*, n_bar) reaches kappa.
DesignResult design_from_surface(const RpSurface& surface, std::size_t n_bar, double kappa, double alpha,
                                 std::size_t max_n = 1'000'000);

}  // namespace optsurr
