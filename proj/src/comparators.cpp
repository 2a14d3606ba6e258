#include "optsurr/comparators.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "optsurr/errors.hpp"

namespace optsurr {

namespace {
Eigen::VectorXd least_squares(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < x.cols()) throw Error(ErrorCode::SingularDesign, "design matrix is rank deficient");
  return qr.solve(y);
}
}  // namespace

FreedmanFit pte_freedman(const TrialDataset& data, double tolerance) {
  const auto n = static_cast<Eigen::Index>(data.n());
  Eigen::MatrixXd x(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    x(i, 0) = 1.0;
    x(i, 1) = data.a()[k];
    x(i, 2) = data.s()[k];
    y(i) = data.y()[k];
  }
  FreedmanFit fit;
  fit.beta_a_marginal = least_squares(x.leftCols(2), y)(1);
  fit.beta_a_adjusted = least_squares(x, y)(1);
  if (std::abs(fit.beta_a_marginal) <= tolerance) {
    throw Error(ErrorCode::NullMarginalEffect, "marginal treatment coefficient is numerically zero");
  }
  fit.pte_f = 1.0 - fit.beta_a_adjusted / fit.beta_a_marginal;
  return fit;
}

ComparatorRegistry::ComparatorRegistry() {
  add("pte_f", [](const TrialDataset& d) { return pte_freedman(d).pte_f; });
}

void ComparatorRegistry::add(const std::string& name, Estimator estimator) {
  entries_[name] = std::move(estimator);
}

}  // namespace optsurr
