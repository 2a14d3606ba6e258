#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "optsurr/data.hpp"
#include "optsurr/transform.hpp"

namespace optsurr {

// Difference in arm means of `values` with its influence values
// psi_i = (W / W_a) (v_i - mu_a) (2 a_i - 1), where W and W_a are total and
// per-arm weights (counts when unweighted). Subjects with include[i] == 0 are
// left out entirely and get psi_i = 0.
struct ArmContrast {
  double delta = 0.0;
  double sigma2 = 0.0;
  double mu0 = 0.0;
  double mu1 = 0.0;
  std::vector<double> psi;
};

ArmContrast arm_contrast(std::span<const double> values, std::span<const int> arms,
                         std::span<const double> weights = {},
                         std::span<const unsigned char> include = {});

ArmContrast treatment_effect(const TrialDataset& data);

struct SurrogateContrast {
  ArmContrast contrast;
  std::size_t excluded = 0;
};

// Y replaced by g(S). Subjects whose S lies outside the transform's support are
// excluded and counted; more than `exclusion_cap` of n raises TooManyExcluded.
SurrogateContrast surrogate_effect(const TrialDataset& data, const TransformEstimate& g,
                                   double exclusion_cap = 0.02);
// Same for an arbitrary transform; it may throw OutOfSupport to exclude a subject.
SurrogateContrast surrogate_effect(const TrialDataset& data, const std::function<double(double)>& g,
                                   double exclusion_cap = 0.02);

struct EffectEstimate {
  double delta = 0.0;
  double delta_g = 0.0;
  double sigma2 = 0.0;
  double sigma2_g = 0.0;
  std::vector<double> psi;
  std::vector<double> psi_g;
  double mu0 = 0.0;
  double mu1 = 0.0;
  double mu_g0 = 0.0;
  double mu_g1 = 0.0;
  std::size_t excluded = 0;
};

EffectEstimate estimate_effects(const TrialDataset& data, const TransformEstimate& g,
                                double exclusion_cap = 0.02);

double pte(double delta_g, double delta);

// PTE with the null-effect guard: throws NullPrimaryEffect when
// |delta| / (sigma / sqrt(n)) < threshold.
double guarded_pte(double delta_g, double delta, double sigma2, std::size_t n, double threshold = 1.0);

struct ConditionVerdict {
  bool holds = true;
  double max_violation = 0.0;  // largest excess of the arm-0 curve beyond the noise band, >= 0
  double max_gap = 0.0;        // largest raw excess of the arm-0 curve over the arm-1 curve
};

struct SurrogacyDiagnostics {
  ConditionVerdict c1;
  ConditionVerdict c2;
  std::vector<double> u_grid;
  std::vector<double> s0;  // survival of g(S) in arm 0
  std::vector<double> s1;
  std::vector<double> m0;  // E(Y | g(S) = u) in arm 0, NaN outside the common support
  std::vector<double> m1;
  std::vector<double> f_new;  // reference distribution on the transform grid
  double delta_l_gap = 0.0;
};

// Checks the dominance conditions on the observed data. `g_values` are g(S_i)
// per subject (NaN marks excluded subjects). Both verdicts allow `band_se`
// pooled standard errors of noise.
SurrogacyDiagnostics check_conditions(const TrialDataset& data, std::span<const double> g_values,
                                      const AnalysisConfig& cfg, std::size_t u_points = 101,
                                      double band_se = 2.0);

// g(S_i) per subject, NaN where S_i lies outside the transform support.
std::vector<double> transform_values(const TrialDataset& data, const TransformEstimate& g);

struct ReferenceDistribution {
  std::vector<double> f_new;
  double delta_g = 0.0;
  double delta_l = 0.0;
  double gap = 0.0;  // delta_g - delta_l
};

ReferenceDistribution reference_distribution(const CurveSet& curves, const SupportPartition& partition);

// Dominance checks on g-hat(S) plus the reference distribution of the fitted curves.
SurrogacyDiagnostics diagnose(const TrialDataset& data, const TransformEstimate& g, const AnalysisConfig& cfg);

}  // namespace optsurr
