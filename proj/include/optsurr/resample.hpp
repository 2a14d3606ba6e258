#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "optsurr/data.hpp"
#include "optsurr/power.hpp"
#include "optsurr/transform.hpp"

namespace optsurr {

enum class WeightLaw {
  exponential_mean_one,
  unit,  // every weight is 1; replicates reproduce the point estimate
};

struct PerturbationScheme {
  WeightLaw distribution = WeightLaw::exponential_mean_one;
  std::size_t B = 500;
  std::uint64_t base_seed = 0;
};

// Weights of replicate b; a pure function of (scheme, b, n).
std::vector<double> perturbation_weights(const PerturbationScheme& scheme, std::size_t b, std::size_t n);

struct ResampleReport {
  double point = 0.0;
  double se = 0.0;
  double level = 0.95;
  Interval normal_ci;
  Interval percentile_ci;
  double ci_lower_one_sided = 0.0;
  std::vector<double> draws;
  std::size_t failed = 0;
  bool point_outside_percentile = false;
};

ResampleReport summarize_draws(double point, std::vector<double> draws, double alpha, std::size_t failed = 0);

using WeightedEstimator = std::function<double(std::span<const double>)>;
using WeightedVectorEstimator = std::function<std::vector<double>(std::span<const double>)>;

// The estimator receives per-subject weights (empty at the point estimate).
// Replicates that throw are dropped; more than 5% failures raise EstimatorFailure.
ResampleReport perturb_estimate(const TrialDataset& data, const WeightedEstimator& estimator,
                                const PerturbationScheme& scheme, double alpha = 0.05);

struct VectorResample {
  std::vector<double> point;
  std::vector<std::vector<double>> draws;  // replicate x component, successful replicates only
  std::size_t failed = 0;
};

VectorResample perturb_vector(std::size_t n, const WeightedVectorEstimator& estimator,
                              const PerturbationScheme& scheme);

class CvPlan {
 public:
  CvPlan(std::vector<std::size_t> fold_of, std::size_t K, std::uint64_t seed);

  std::size_t K() const noexcept { return K_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t fold_of(std::size_t i) const { return fold_of_.at(i); }
  const std::vector<std::size_t>& assignment() const noexcept { return fold_of_; }
  std::vector<std::size_t> members(std::size_t k) const;
  std::vector<std::size_t> complement(std::size_t k) const;

 private:
  std::vector<std::size_t> fold_of_;
  std::size_t K_;
  std::uint64_t seed_;
};

// Arm-stratified random folds: each arm is shuffled and dealt round-robin, the
// deal continuing across arms so overall fold sizes differ by at most one.
CvPlan make_cv_plan(const TrialDataset& data, std::size_t K, std::uint64_t seed);

struct FoldSummary {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t held_out_size = 0;
  std::size_t excluded = 0;
  Orientation orientation = Orientation::d0_empty;
  double lambda = 0.0;
  std::optional<double> c;
  double h0 = 0.0;
  double h1 = 0.0;
  double delta = 0.0;
  double sigma = 0.0;
  double delta_g = 0.0;
  double sigma_g = 0.0;
  std::vector<double> rp;  // per n_bar
};

struct RpRow {
  std::size_t n_bar = 0;
  ResampleReport report;
};

struct CvResult {
  std::size_t K = 0;
  std::vector<FoldSummary> folds;
  std::vector<RpRow> rp;
  std::optional<ResampleReport> pte;  // absent when the primary effect is too weak
  std::string pte_note;
  ResampleReport delta;               // fold-averaged held-out effects
  ResampleReport delta_g;
  double effect_y = 0.0;              // fold-averaged held-out effect sizes
  double effect_g = 0.0;
  RpSurface surface;
  std::size_t failed_replicates = 0;
};

struct CvOptions {
  // When set, every fold uses this transform instead of fitting one.
  const TransformEstimate* fixed_transform = nullptr;
  bool perturb = true;
};

// K-fold cross-validated PTE and RP(n_bar) for each cfg.n_bars entry, with
// perturbation SEs holding the folds fixed.
CvResult cv_estimate(const TrialDataset& data, const CvPlan& plan, const AnalysisConfig& cfg,
                     const CvOptions& options = {});

// Transform fitted on the training part of fold k, exactly as cv_estimate does.
TransformEstimate fit_fold_transform(const TrialDataset& data, const CvPlan& plan, std::size_t k,
                                     const AnalysisConfig& cfg);

}  // namespace optsurr
