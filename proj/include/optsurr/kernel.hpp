#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "optsurr/data.hpp"

namespace optsurr {

struct KernelConfig {
  double h = 1.0;
  BandwidthRule rule = BandwidthRule::scott_undersmoothed;
};

inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

inline double gaussian_kernel(double u) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * u * u); }

// Sample quantile with linear interpolation between order statistics.
double quantile(std::span<const double> values, double p);
double sample_sd(std::span<const double> values);

// Rule-of-thumb bandwidth 1.06 min(sd, IQR/1.34) m^(-1/5) m^(-c0). The spread is
// taken from `values`; m is `size_hint` when nonzero, otherwise values.size().
double bandwidth(std::span<const double> values, double c0, std::size_t size_hint = 0);

// Bandwidth selected by cfg: the rule above or the fixed value.
double select_bandwidth(std::span<const double> values, const AnalysisConfig& cfg,
                        std::size_t size_hint = 0);

double kde(std::span<const double> sample, double s, double h);
inline double kde(std::span<const double> sample, double s, const KernelConfig& cfg) {
  return kde(sample, s, cfg.h);
}

double nw_regress(std::span<const double> sample_s, std::span<const double> sample_y, double s,
                  double h);
inline double nw_regress(std::span<const double> sample_s, std::span<const double> sample_y,
                         double s, const KernelConfig& cfg) {
  return nw_regress(sample_s, sample_y, s, cfg.h);
}

struct DensityRatio {
  double value = 0.0;
  bool floored = false;
};

DensityRatio density_ratio(double f0, double f1, double floor);

// Weighted kernel density and Nadaraya-Watson fits of one sample at fixed
// evaluation points. The kernel matrix is built once so repeated refits under
// new subject weights cost one matrix product.
class KernelSmoother {
 public:
  KernelSmoother(std::span<const double> sample_s, std::span<const double> sample_y,
                 std::span<const double> points, double h);

  // density[j] = sum_i w_i K_h(S_i - x_j) / sum_i w_i
  // mean[j]    = sum_i w_i Y_i K_h(S_i - x_j) / sum_i w_i K_h(S_i - x_j), NaN where the
  //              point lies beyond sample range +- 5h or the denominator underflows.
  // Empty weights mean unit weights.
  void smooth(std::span<const double> weights, std::vector<double>& density,
              std::vector<double>& mean) const;

  std::size_t sample_size() const noexcept { return s_.size(); }
  double bandwidth() const noexcept { return h_; }

 private:
  std::vector<double> s_;
  std::vector<double> y_;
  std::vector<double> points_;
  std::vector<bool> in_range_;
  double h_;
  Eigen::MatrixXd kernel_;  // points x sample, empty when too large to cache
};

}  // namespace optsurr
