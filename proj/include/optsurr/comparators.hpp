#pragma once

#include <functional>
#include <map>
#include <string>

#include "optsurr/data.hpp"

namespace optsurr {

struct FreedmanFit {
  double beta_a_marginal = 0.0;  // Y ~ 1 + A
  double beta_a_adjusted = 0.0;  // Y ~ 1 + A + S
  double pte_f = 0.0;
};

// Linear least squares for both fits, whatever the scale of Y.
FreedmanFit pte_freedman(const TrialDataset& data, double tolerance = 1e-12);

// Named PTE comparators; the Freedman estimator is registered by default.
class ComparatorRegistry {
 public:
  using Estimator = std::function<double(const TrialDataset&)>;

  ComparatorRegistry();
  void add(const std::string& name, Estimator estimator);
  const std::map<std::string, Estimator>& entries() const noexcept { return entries_; }

 private:
  std::map<std::string, Estimator> entries_;
};

}  // namespace optsurr
