#include "optsurr/transform.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "optsurr/errors.hpp"

namespace optsurr {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool in_omega0(Region r) { return r == Region::d_c || r == Region::d_0; }
bool in_omega1(Region r) { return r == Region::d_c || r == Region::d_1; }

std::size_t s_star_node(std::span<const double> grid, const SupportPartition& p) {
  if (!p.s_star) return static_cast<std::size_t>(-1);
  const auto it = std::lower_bound(grid.begin(), grid.end(), *p.s_star);
  if (it == grid.end() || *it != *p.s_star) {
    throw Error(ErrorCode::InvalidParameters, "grid does not contain s* as a node");
  }
  return static_cast<std::size_t>(it - grid.begin());
}

// Replaces NaN entries of v at nodes where `keep` holds by linear interpolation
// between the nearest valid neighbours (constant beyond the ends).
std::size_t fill_gaps(std::vector<double>& v, const std::vector<bool>& keep) {
  std::vector<std::size_t> valid;
  std::size_t gaps = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!keep[j]) continue;
    if (std::isnan(v[j])) ++gaps; else valid.push_back(j);
  }
  if (gaps == 0) return 0;
  if (valid.empty()) throw Error(ErrorCode::EmptyNeighborhood, "no grid node has kernel mass");
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!keep[j] || !std::isnan(v[j])) continue;
    const auto hi = std::lower_bound(valid.begin(), valid.end(), j);
    if (hi == valid.begin()) { v[j] = v[*hi]; continue; }
    if (hi == valid.end()) { v[j] = v[valid.back()]; continue; }
    const auto a = *(hi - 1), b = *hi;
    v[j] = v[a] + (v[b] - v[a]) * static_cast<double>(j - a) / static_cast<double>(b - a);
  }
  return gaps;
}
}  // namespace

const char* orientation_name(Orientation o) noexcept {
  switch (o) {
    case Orientation::d0_above: return "d0_above";
    case Orientation::d0_below: return "d0_below";
    case Orientation::d0_empty: return "d0_empty";
  }
  return "unknown";
}

SupportPartition make_partition(Interval omega0, Interval omega1) {
  if (!(omega0.lo <= omega0.hi) || !(omega1.lo <= omega1.hi)) {
    throw Error(ErrorCode::InvalidParameters, "support interval with lo > hi");
  }
  SupportPartition p;
  p.omega0 = omega0;
  p.omega1 = omega1;
  p.d_c = {std::max(omega0.lo, omega1.lo), std::min(omega0.hi, omega1.hi)};
  if (!(p.d_c.lo < p.d_c.hi)) throw Error(ErrorCode::NoOverlap, "arm supports do not overlap");
  const bool below = omega0.lo < omega1.lo;
  const bool above = omega0.hi > omega1.hi;
  if (below && above) throw Error(ErrorCode::TwoSidedD0, "arm-0 support extends beyond arm-1 support on both sides");
  if (above) {
    p.d_0 = Interval{omega1.hi, omega0.hi};
    p.s_star = omega1.hi;
    p.orientation = Orientation::d0_above;
  } else if (below) {
    p.d_0 = Interval{omega0.lo, omega1.lo};
    p.s_star = omega1.lo;
    p.orientation = Orientation::d0_below;
  }
  if (omega1.lo < omega0.lo) p.d1_lower = Interval{omega1.lo, omega0.lo};
  if (omega1.hi > omega0.hi) p.d1_upper = Interval{omega0.hi, omega1.hi};
  return p;
}

SupportPartition estimate_partition(const TrialDataset& data, double trim) {
  if (!(trim >= 0.0 && trim < 0.5)) throw Error(ErrorCode::InvalidConfig, "trim must lie in [0, 0.5)");
  auto support = [&](int arm) {
    const auto s = arm_values(data, arm, Field::s);
    return Interval{quantile(s, trim), quantile(s, 1.0 - trim)};
  };
  return make_partition(support(0), support(1));
}

Region classify(double s, const SupportPartition& p) {
  if (p.d_c.contains(s)) return Region::d_c;
  if (p.omega1.contains(s)) return Region::d_1;
  return Region::d_0;
}

std::vector<double> make_grid(const SupportPartition& p, std::size_t points) {
  const Interval dom = p.domain();
  std::vector<double> cuts = {dom.lo, dom.hi, p.d_c.lo, p.d_c.hi};
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  const std::size_t segments = cuts.size() - 1;
  const std::size_t steps = std::max(points, 2 * segments + 1) - 1;

  // Largest-remainder allocation of steps to segments, at least two each.
  std::vector<std::size_t> alloc(segments, 2);
  std::size_t left = steps - 2 * segments;
  const double total = dom.length();
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t given = 0;
  std::vector<std::size_t> extra(segments, 0);
  for (std::size_t k = 0; k < segments; ++k) {
    const double share = static_cast<double>(left) * (cuts[k + 1] - cuts[k]) / total;
    extra[k] = static_cast<std::size_t>(std::floor(share));
    given += extra[k];
    remainders.emplace_back(share - static_cast<double>(extra[k]), k);
  }
  std::sort(remainders.begin(), remainders.end(), std::greater<>());
  for (std::size_t i = 0; given < left; ++i, ++given) extra[remainders[i % segments].second]++;

  std::vector<double> grid;
  grid.reserve(steps + 1);
  for (std::size_t k = 0; k < segments; ++k) {
    const std::size_t m = alloc[k] + extra[k];
    const double a = cuts[k], b = cuts[k + 1];
    for (std::size_t j = 0; j < m; ++j) grid.push_back(a + (b - a) * static_cast<double>(j) / static_cast<double>(m));
  }
  grid.push_back(dom.hi);
  return grid;
}

std::vector<double> trapezoid_weights(std::span<const double> grid) {
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
    const double half = 0.5 * (grid[j + 1] - grid[j]);
    w[j] += half;
    w[j + 1] += half;
  }
  return w;
}

namespace {
// Each density is zero off its own arm's support; the floor is relative to the
// largest arm-1 density, and only nodes of Omega_1 with arm-0 mass count as floored.
void finish_densities(CurveSet& c, const std::vector<Region>& region, double floor_rel) {
  const auto n = c.grid.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (!in_omega0(region[j])) c.f0[j] = 0.0;
    if (!in_omega1(region[j])) c.f1[j] = 0.0;
  }
  c.density_floor = floor_rel * *std::max_element(c.f1.begin(), c.f1.end());
  c.r.resize(n);
  c.floored_nodes = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto dr = density_ratio(c.f0[j], c.f1[j], c.density_floor);
    c.r[j] = dr.value;
    if (dr.floored && c.f0[j] > 0.0 && in_omega1(region[j])) ++c.floored_nodes;
  }
}
}  // namespace

CurveSet make_curves(std::span<const double> grid, const SupportPartition& p,
                     const std::function<double(double)>& m0, const std::function<double(double)>& m1,
                     const std::function<double(double)>& f0, const std::function<double(double)>& f1,
                     double floor_rel) {
  CurveSet c;
  c.grid.assign(grid.begin(), grid.end());
  const auto n = grid.size();
  c.m0.assign(n, kNaN);
  c.m1.assign(n, kNaN);
  c.delta01.assign(n, kNaN);
  c.f0.resize(n);
  c.f1.resize(n);
  c.r.resize(n);
  std::vector<Region> region(n);
  for (std::size_t j = 0; j < n; ++j) {
    region[j] = classify(grid[j], p);
    c.f0[j] = f0(grid[j]);
    c.f1[j] = f1(grid[j]);
    if (in_omega0(region[j])) c.m0[j] = m0(grid[j]);
    if (in_omega1(region[j])) c.m1[j] = m1(grid[j]);
    if (region[j] == Region::d_c) c.delta01[j] = c.m0[j] - c.m1[j];
  }
  finish_densities(c, region, floor_rel);
  return c;
}

LambdaC solve_lambda_c(const CurveSet& curves, const SupportPartition& p) {
  const auto& grid = curves.grid;
  const auto w = trapezoid_weights(grid);
  double integral = 0.0, k1 = 0.0, k2 = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    switch (classify(grid[j], p)) {
      case Region::d_c:
        integral += w[j] * curves.delta01[j] * curves.f0[j];
        k2 += w[j] * curves.r[j] * curves.f0[j];
        break;
      case Region::d_0:
        k1 += w[j] * curves.f0[j];
        break;
      case Region::d_1:
        break;
    }
  }
  if (!(k2 > 0.0) || !std::isfinite(k2)) throw Error(ErrorCode::DegenerateK2, "K2 = " + std::to_string(k2));
  LambdaC out;
  out.k1 = k1;
  out.k2 = k2;
  if (!p.s_star) {
    out.lambda = integral / k2;
    return out;
  }
  const auto js = s_star_node(grid, p);
  const double r_star = curves.r[js];
  const double d_star = curves.delta01[js];
  const double den = k2 + k1 * r_star;
  out.lambda = (integral + k1 * d_star) / den;
  out.c = (r_star * integral - k2 * d_star) / den;
  return out;
}

TransformEstimate build_transform(const SupportPartition& p, CurveSet curves) {
  TransformEstimate est;
  const LambdaC lc = solve_lambda_c(curves, p);
  est.partition = p;
  est.lambda = lc.lambda;
  est.c = lc.c;
  est.k1 = lc.k1;
  est.k2 = lc.k2;
  const auto& grid = curves.grid;
  est.g_values.resize(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    est.g_values[j] = classify(grid[j], p) == Region::d_0 ? curves.m0[j] + *lc.c
                                                          : curves.m1[j] + lc.lambda * curves.r[j];
  }
  est.curves = std::move(curves);
  return est;
}

double evaluate_g(const TransformEstimate& est, double s) {
  const auto& grid = est.curves.grid;
  if (!(s >= grid.front() && s <= grid.back())) {
    throw Error(ErrorCode::OutOfSupport, "s=" + std::to_string(s));
  }
  const std::array<double, 1> q{s};
  GridInterpolator interp(grid, q);
  return interp.value(est.g_values, 0);
}

GridInterpolator::GridInterpolator(std::span<const double> grid, std::span<const double> queries)
    : index_(queries.size(), kOutside), frac_(queries.size(), 0.0) {
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const double s = queries[q];
    if (!(s >= grid.front() && s <= grid.back())) {
      ++outside_;
      continue;
    }
    auto it = std::upper_bound(grid.begin(), grid.end(), s);
    std::size_t j = static_cast<std::size_t>(it - grid.begin());
    j = j == 0 ? 0 : j - 1;
    if (j + 1 >= grid.size()) j = grid.size() - 2;
    index_[q] = j;
    frac_[q] = (s - grid[j]) / (grid[j + 1] - grid[j]);
  }
}

Bandwidths select_bandwidths(const TrialDataset& data, const AnalysisConfig& cfg, std::size_t n0_hint,
                             std::size_t n1_hint) {
  return {select_bandwidth(arm_values(data, 0, Field::s), cfg, n0_hint),
          select_bandwidth(arm_values(data, 1, Field::s), cfg, n1_hint)};
}

namespace {
std::vector<double> pick(std::span<const double> v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

std::vector<std::size_t> arm_indices(const TrialDataset& d, int arm) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < d.n(); ++i) {
    if (d.a()[i] == arm) idx.push_back(i);
  }
  return idx;
}
}  // namespace

TransformFitter::TransformFitter(const TrialDataset& train, const AnalysisConfig& cfg, Bandwidths h)
    : partition_(estimate_partition(train, cfg.support_trim)),
      grid_(make_grid(partition_, cfg.grid_points)),
      idx0_(arm_indices(train, 0)),
      idx1_(arm_indices(train, 1)),
      smoother0_(pick(train.s(), idx0_), pick(train.y(), idx0_), grid_, h.h0),
      smoother1_(pick(train.s(), idx1_), pick(train.y(), idx1_), grid_, h.h1),
      h_(h),
      floor_rel_(cfg.density_floor_rel) {}

TransformEstimate TransformFitter::fit(std::span<const double> weights) const {
  std::vector<double> w0, w1;
  if (!weights.empty()) {
    w0 = pick(weights, idx0_);
    w1 = pick(weights, idx1_);
  }
  CurveSet c;
  c.grid = grid_;
  smoother0_.smooth(w0, c.f0, c.m0);
  smoother1_.smooth(w1, c.f1, c.m1);

  const auto n = grid_.size();
  std::vector<bool> keep0(n), keep1(n);
  std::vector<Region> region(n);
  for (std::size_t j = 0; j < n; ++j) {
    region[j] = classify(grid_[j], partition_);
    keep0[j] = in_omega0(region[j]);
    keep1[j] = in_omega1(region[j]);
    if (!keep0[j]) c.m0[j] = kNaN;
    if (!keep1[j]) c.m1[j] = kNaN;
  }
  c.excluded_nodes = fill_gaps(c.m0, keep0) + fill_gaps(c.m1, keep1);

  c.delta01.assign(n, kNaN);
  for (std::size_t j = 0; j < n; ++j) {
    if (region[j] == Region::d_c) c.delta01[j] = c.m0[j] - c.m1[j];
  }
  finish_densities(c, region, floor_rel_);
  TransformEstimate est = build_transform(partition_, std::move(c));
  est.h0 = h_.h0;
  est.h1 = h_.h1;
  return est;
}

TransformEstimate fit_transform(const TrialDataset& data, const AnalysisConfig& cfg) {
  cfg.validate();
  return TransformFitter(data, cfg, select_bandwidths(data, cfg)).fit();
}

}  // namespace optsurr
