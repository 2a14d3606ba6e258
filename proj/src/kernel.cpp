#include "optsurr/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "optsurr/errors.hpp"

namespace optsurr {

namespace {
constexpr double kUnderflowFloor = 1e-300;
constexpr double kRangeMultiple = 5.0;
constexpr std::size_t kMaxCachedEntries = 30'000'000;
}  // namespace

double quantile(std::span<const double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::DegenerateSample, "quantile of empty sample");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

double sample_sd(std::span<const double> values) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double bandwidth(std::span<const double> values, double c0, std::size_t size_hint) {
  if (values.size() < 2) throw Error(ErrorCode::DegenerateSample, "bandwidth needs at least 2 values");
  const double sd = sample_sd(values);
  if (!(sd > 0.0)) throw Error(ErrorCode::DegenerateSample, "all values identical");
  const double iqr = quantile(values, 0.75) - quantile(values, 0.25);
  // Heavy ties can collapse the IQR; the sd then carries the spread alone.
  const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
  const double m = static_cast<double>(size_hint ? size_hint : values.size());
  return 1.06 * spread * std::pow(m, -0.2 - c0);
}

double select_bandwidth(std::span<const double> values, const AnalysisConfig& cfg, std::size_t size_hint) {
  if (cfg.bandwidth_rule == BandwidthRule::fixed) return cfg.fixed_bandwidth;
  return bandwidth(values, cfg.c0, size_hint);
}

double kde(std::span<const double> sample, double s, double h) {
  double sum = 0.0;
  for (double x : sample) sum += gaussian_kernel((x - s) / h);
  return sum / (static_cast<double>(sample.size()) * h);
}

double nw_regress(std::span<const double> sample_s, std::span<const double> sample_y, double s, double h) {
  if (sample_s.empty() || sample_s.size() != sample_y.size()) {
    throw Error(ErrorCode::InvalidParameters, "nw_regress needs equal-length nonempty samples");
  }
  const auto [lo, hi] = std::minmax_element(sample_s.begin(), sample_s.end());
  if (s < *lo - kRangeMultiple * h || s > *hi + kRangeMultiple * h) {
    throw Error(ErrorCode::EmptyNeighborhood, "s=" + std::to_string(s) + " beyond sample range +- 5h");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sample_s.size(); ++i) {
    const double k = gaussian_kernel((sample_s[i] - s) / h);
    num += k * sample_y[i];
    den += k;
  }
  if (den < kUnderflowFloor) {
    throw Error(ErrorCode::EmptyNeighborhood, "kernel weights underflow at s=" + std::to_string(s));
  }
  return num / den;
}

DensityRatio density_ratio(double f0, double f1, double floor) {
  if (f0 == 0.0) return {0.0, f1 < floor};
  if (f1 < floor) return {f0 / floor, true};
  return {f0 / f1, false};
}

KernelSmoother::KernelSmoother(std::span<const double> sample_s, std::span<const double> sample_y,
                               std::span<const double> points, double h)
    : s_(sample_s.begin(), sample_s.end()),
      y_(sample_y.begin(), sample_y.end()),
      points_(points.begin(), points.end()),
      h_(h) {
  if (s_.empty() || s_.size() != y_.size()) {
    throw Error(ErrorCode::InvalidParameters, "smoother needs equal-length nonempty samples");
  }
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidParameters, "bandwidth must be positive");
  const auto [lo, hi] = std::minmax_element(s_.begin(), s_.end());
  in_range_.resize(points_.size());
  for (std::size_t j = 0; j < points_.size(); ++j) {
    in_range_[j] = points_[j] >= *lo - kRangeMultiple * h && points_[j] <= *hi + kRangeMultiple * h;
  }
  if (points_.size() * s_.size() <= kMaxCachedEntries) {
    kernel_.resize(static_cast<Eigen::Index>(points_.size()), static_cast<Eigen::Index>(s_.size()));
    for (std::size_t i = 0; i < s_.size(); ++i) {
      for (std::size_t j = 0; j < points_.size(); ++j) {
        kernel_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) =
            gaussian_kernel((s_[i] - points_[j]) / h) / h;
      }
    }
  }
}

void KernelSmoother::smooth(std::span<const double> weights, std::vector<double>& density,
                            std::vector<double>& mean) const {
  const auto n = static_cast<Eigen::Index>(s_.size());
  const auto g = static_cast<Eigen::Index>(points_.size());
  if (!weights.empty() && weights.size() != s_.size()) {
    throw Error(ErrorCode::InvalidParameters, "weight vector length differs from sample size");
  }
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double w = weights.empty() ? 1.0 : weights[static_cast<std::size_t>(i)];
    rhs(i, 0) = w;
    rhs(i, 1) = w * y_[static_cast<std::size_t>(i)];
  }
  const double total = rhs.col(0).sum();
  Eigen::MatrixXd sums(g, 2);
  if (kernel_.size() > 0) {
    sums.noalias() = kernel_ * rhs;
  } else {
    sums.setZero();
    for (Eigen::Index j = 0; j < g; ++j) {
      for (Eigen::Index i = 0; i < n; ++i) {
        const double k = gaussian_kernel((s_[static_cast<std::size_t>(i)] - points_[static_cast<std::size_t>(j)]) / h_) / h_;
        sums(j, 0) += k * rhs(i, 0);
        sums(j, 1) += k * rhs(i, 1);
      }
    }
  }
  density.resize(points_.size());
  mean.resize(points_.size());
  const double floor = kUnderflowFloor * total;
  for (Eigen::Index j = 0; j < g; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    density[jj] = sums(j, 0) / total;
    mean[jj] = (in_range_[jj] && sums(j, 0) * h_ > floor) ? sums(j, 1) / sums(j, 0)
                                                          : std::numeric_limits<double>::quiet_NaN();
  }
}

}  // namespace optsurr
