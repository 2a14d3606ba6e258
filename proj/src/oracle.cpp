#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "optsurr/errors.hpp"
#include "optsurr/transform.hpp"

namespace optsurr {

// Unknowns: g at every Omega_1 node, the multiplier, and c when D_0 is present.
// Rows: stationarity w f1 (g - m1) = multiplier * w f0 at each Omega_1 node,
// the moment constraint over the whole grid, and continuity g(s*) = m0(s*) + c.
OracleSolution oracle_gopt(std::span<const double> grid, std::span<const double> m0,
                           std::span<const double> m1, std::span<const double> f0,
                           std::span<const double> f1, const SupportPartition& partition) {
  const std::size_t n = grid.size();
  if (m0.size() != n || m1.size() != n || f0.size() != n || f1.size() != n) {
    throw Error(ErrorCode::InvalidParameters, "oracle inputs must share the grid length");
  }
  const auto w = trapezoid_weights(grid);
  std::vector<Region> region(n);
  std::vector<long> column(n, -1);
  long unknowns = 0;
  long star = -1;
  for (std::size_t j = 0; j < n; ++j) {
    region[j] = classify(grid[j], partition);
    if (region[j] != Region::d_0) column[j] = unknowns++;
    if (partition.s_star && grid[j] == *partition.s_star) star = column[j];
  }
  const bool has_c = partition.d_0.has_value();
  if (has_c && star < 0) throw Error(ErrorCode::InvalidParameters, "grid does not contain s* as a node");
  const long lam = unknowns;
  const long cc = has_c ? unknowns + 1 : -1;
  const long dim = unknowns + (has_c ? 2 : 1);

  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  // arm-0 mass counts only on Omega_0 nodes
  auto f0_at = [&](std::size_t j) { return region[j] == Region::d_1 ? 0.0 : f0[j]; };
  auto f0m0 = [&](std::size_t j) { return f0_at(j) == 0.0 ? 0.0 : f0_at(j) * m0[j]; };

  double d0_mass = 0.0, d0_moment = 0.0, target = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    target += w[j] * f0m0(j);
    if (region[j] == Region::d_0) {
      d0_mass += w[j] * f0_at(j);
      d0_moment += w[j] * f0m0(j);
      continue;
    }
    const long row = column[j];
    const bool edge = j == 0 || j + 1 == n;
    if (!(f1[j] > 0.0)) {
      if (!edge) throw Error(ErrorCode::SingularSystem, "f1 vanishes inside Omega_1");
      triplets.emplace_back(row, row, 1.0);  // objective is flat here; pin g to m1
      rhs(row) = m1[j];
    } else {
      triplets.emplace_back(row, row, w[j] * f1[j]);
      triplets.emplace_back(row, lam, -w[j] * f0_at(j));
      rhs(row) = w[j] * f1[j] * m1[j];
    }
    if (f0_at(j) != 0.0) triplets.emplace_back(lam, row, w[j] * f0_at(j));
  }
  rhs(lam) = target - d0_moment;
  if (has_c) {
    triplets.emplace_back(lam, cc, d0_mass);
    triplets.emplace_back(cc, star, 1.0);
    triplets.emplace_back(cc, cc, -1.0);
    std::size_t js = 0;
    while (grid[js] != *partition.s_star) ++js;
    rhs(cc) = m0[js];
  }

  Eigen::SparseMatrix<double> kkt(dim, dim);
  kkt.setFromTriplets(triplets.begin(), triplets.end());
  kkt.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(kkt);
  if (lu.info() != Eigen::Success) throw Error(ErrorCode::SingularSystem, "factorisation failed");
  const Eigen::VectorXd x = lu.solve(rhs);
  if (lu.info() != Eigen::Success || !x.allFinite()) throw Error(ErrorCode::SingularSystem, "solve failed");

  OracleSolution out;
  out.multiplier = x(lam);
  if (has_c) out.c = x(cc);
  out.g.assign(n, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t j = 0; j < n; ++j) {
    out.g[j] = region[j] == Region::d_0 ? m0[j] + *out.c : x(column[j]);
  }
  return out;
}

}  // namespace optsurr
