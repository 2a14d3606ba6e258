#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "optsurr/data.hpp"
#include "optsurr/kernel.hpp"

namespace optsurr {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

enum class Orientation { d0_above, d0_below, d0_empty };

const char* orientation_name(Orientation o) noexcept;

// Supports of the two arms and the regions they induce. D_1 can have a piece on
// each side of the overlap when Omega_1 straddles Omega_0.
struct SupportPartition {
  Interval omega0;
  Interval omega1;
  Interval d_c;
  std::optional<Interval> d1_lower;
  std::optional<Interval> d1_upper;
  std::optional<Interval> d_0;
  std::optional<double> s_star;
  Orientation orientation = Orientation::d0_empty;

  Interval domain() const noexcept {
    return {std::min(omega0.lo, omega1.lo), std::max(omega0.hi, omega1.hi)};
  }
};

SupportPartition make_partition(Interval omega0, Interval omega1);
SupportPartition estimate_partition(const TrialDataset& data, double trim);

// Region owning a grid node. D_c is closed; D_1 and D_0 exclude its endpoints.
enum class Region : unsigned char { d_c, d_1, d_0 };

Region classify(double s, const SupportPartition& partition);

// Grid over Omega_0 u Omega_1 holding every region breakpoint as a node; the
// remaining nodes are spread over the segments in proportion to their length.
std::vector<double> make_grid(const SupportPartition& partition, std::size_t points);

// Trapezoid weights of the whole grid.
std::vector<double> trapezoid_weights(std::span<const double> grid);

struct CurveSet {
  std::vector<double> grid;
  std::vector<double> m0;       // NaN outside Omega_0
  std::vector<double> m1;       // NaN outside Omega_1
  std::vector<double> f0;
  std::vector<double> f1;
  std::vector<double> r;
  std::vector<double> delta01;  // NaN outside D_c
  double density_floor = 0.0;
  std::size_t floored_nodes = 0;
  std::size_t excluded_nodes = 0;  // nodes where a regression had no kernel mass
};

// Curves from known functions (used for analytic truth and tests).
CurveSet make_curves(std::span<const double> grid, const SupportPartition& partition,
                     const std::function<double(double)>& m0, const std::function<double(double)>& m1,
                     const std::function<double(double)>& f0, const std::function<double(double)>& f1,
                     double floor_rel = 1e-4);

struct LambdaC {
  double lambda = 0.0;
  std::optional<double> c;
  double k1 = 0.0;
  double k2 = 0.0;
};

LambdaC solve_lambda_c(const CurveSet& curves, const SupportPartition& partition);

struct TransformEstimate {
  SupportPartition partition;
  CurveSet curves;
  double lambda = 0.0;
  std::optional<double> c;
  double k1 = 0.0;
  double k2 = 0.0;
  std::vector<double> g_values;
  double h0 = 0.0;
  double h1 = 0.0;
};

// g = m1 + lambda r on Omega_1 and m0 + c on D_0.
TransformEstimate build_transform(const SupportPartition& partition, CurveSet curves);

double evaluate_g(const TransformEstimate& estimate, double s);

// Precomputed linear-interpolation brackets of query points on a grid, so the
// same points can be pushed through many g vectors cheaply.
class GridInterpolator {
 public:
  GridInterpolator(std::span<const double> grid, std::span<const double> queries);

  bool inside(std::size_t q) const noexcept { return index_[q] != kOutside; }
  std::size_t outside_count() const noexcept { return outside_; }
  std::size_t size() const noexcept { return index_.size(); }
  double value(std::span<const double> g_values, std::size_t q) const noexcept {
    const auto j = index_[q];
    return g_values[j] + frac_[q] * (g_values[j + 1] - g_values[j]);
  }

 private:
  static constexpr std::size_t kOutside = static_cast<std::size_t>(-1);
  std::vector<std::size_t> index_;
  std::vector<double> frac_;
  std::size_t outside_ = 0;
};

struct Bandwidths {
  double h0 = 0.0;
  double h1 = 0.0;
};

// Per-arm bandwidths. Nonzero hints replace the arm sizes in the n-dependent
// factor of the rule (cross-validation passes the full-sample arm sizes).
Bandwidths select_bandwidths(const TrialDataset& data, const AnalysisConfig& cfg,
                             std::size_t n0_hint = 0, std::size_t n1_hint = 0);

// Fits g-hat for one training sample, repeatedly if needed under subject
// weights; partition, grid and kernel matrices are fixed at construction.
class TransformFitter {
 public:
  TransformFitter(const TrialDataset& train, const AnalysisConfig& cfg, Bandwidths h);

  // weights are indexed like the training records; empty means unit weights
  TransformEstimate fit(std::span<const double> weights = {}) const;

  const SupportPartition& partition() const noexcept { return partition_; }
  const std::vector<double>& grid() const noexcept { return grid_; }

 private:
  SupportPartition partition_;
  std::vector<double> grid_;
  std::vector<std::size_t> idx0_;
  std::vector<std::size_t> idx1_;
  KernelSmoother smoother0_;
  KernelSmoother smoother1_;
  Bandwidths h_;
  double floor_rel_;
};

TransformEstimate fit_transform(const TrialDataset& data, const AnalysisConfig& cfg);

struct OracleSolution {
  std::vector<double> g;  // on the grid, NaN outside Omega_0 u Omega_1
  double multiplier = 0.0;
  std::optional<double> c;
};

// Solves the discretised constrained least-squares problem directly: minimise
// sum w f1 (g - m1)^2 over Omega_1 nodes subject to sum w f0 g = sum w f0 m0,
// with g = m0 + c on D_0 and continuity at s*.
OracleSolution oracle_gopt(std::span<const double> grid, std::span<const double> m0,
                           std::span<const double> m1, std::span<const double> f0,
                           std::span<const double> f1, const SupportPartition& partition);

}  // namespace optsurr
