#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "optsurr/data.hpp"
#include "optsurr/rng.hpp"
#include "optsurr/transform.hpp"

namespace optsurr {

struct SurrogateLaw {
  enum class Kind { gamma, uniform, normal };
  Kind kind = Kind::normal;
  double p1 = 0.0;  // gamma shape | uniform lower | normal mean
  double p2 = 1.0;  // gamma scale | uniform upper | normal sd

  static SurrogateLaw gamma(double shape, double scale) { return {Kind::gamma, shape, scale}; }
  static SurrogateLaw uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  static SurrogateLaw normal(double mean, double sd) { return {Kind::normal, mean, sd}; }

  double pdf(double s) const;
  double quantile(double p) const;
  double sample(Rng& rng) const;
  // Support used for quadrature: exact for uniform laws, else the
  // [tail, 1 - tail] quantile range.
  Interval support(double tail = 1e-10) const;
};

enum class OutcomeFamily {
  exponential_threshold,  // Y = I{E / (alpha_a + beta_a G_a(S)) > t}, E ~ Exp(1)
  bernoulli_exp,          // Y ~ Bernoulli(link_a(S))
  gaussian,               // Y = link_a(S) + noise_sd * N(0, 1)
};

struct SimulationSetting {
  std::string id;
  SurrogateLaw law0;
  SurrogateLaw law1;
  // Normal laws only: correlated potential surrogates with this covariance.
  std::optional<double> covariance;
  OutcomeFamily family = OutcomeFamily::exponential_threshold;
  std::function<double(double)> link0;
  std::function<double(double)> link1;
  double t = 1.0;
  double alpha0 = 0.2, beta0 = 0.22;
  double alpha1 = 0.0, beta1 = 0.2;
  double noise_sd = 1.0;

  bool uses_threshold() const noexcept { return family == OutcomeFamily::exponential_threshold; }
  double conditional_mean(int arm, double s) const;
  double conditional_variance(int arm, double s) const;
  void validate() const;
};

// Settings 1-5 of the simulation study; t is ignored by setting 5.
SimulationSetting make_setting(int id, double t = 1.0);

// m0 = m1 = identity with Gaussian noise; S^(1) ~ N(1, 1), S^(0) ~ N(0, 1).
SimulationSetting perfect_surrogate_setting();

struct SimulatedData {
  TrialDataset data;
  // Potential outcomes, filled when requested.
  std::vector<double> s0, s1, y0, y1;
};

SimulatedData generate(const SimulationSetting& setting, std::size_t n, std::uint64_t seed,
                       bool keep_potentials = false);

struct Truth {
  double delta = 0.0;
  double delta_g = 0.0;
  double pte = 0.0;
  double sigma = 0.0;
  double sigma_g = 0.0;
  double lambda = 0.0;
  std::optional<double> c;
  double mu0 = 0.0;
  double mu1 = 0.0;
  std::vector<std::size_t> n_bars;
  std::vector<double> rp;
  Orientation orientation = Orientation::d0_empty;
  double oracle_gap = 0.0;  // sup |oracle - closed form| on the truth grid
  // Large-sample check of the quadrature values.
  std::size_t mc_draws = 0;
  double mc_delta = 0.0, mc_delta_se = 0.0;
  double mc_delta_g = 0.0, mc_delta_g_se = 0.0;

  double effect_y() const noexcept { return delta / sigma; }
  double effect_g() const noexcept { return delta_g / sigma_g; }
};

struct TruthOptions {
  std::size_t grid_points = 20001;
  std::vector<std::size_t> n_bars = {50, 100, 150};
  double z = 1.96;
  bool use_oracle = true;
  std::size_t mc_draws = 0;  // 0 skips the sampling check
  std::uint64_t seed = 1;
};

// Quadrature truth on the analytic curves, g_opt from the discretised oracle.
Truth analytic_truth(const SimulationSetting& setting, const TruthOptions& options = {});

// analytic_truth plus a sampling check with N >= 1e5 draws of potential outcomes.
Truth monte_carlo_truth(const SimulationSetting& setting, std::size_t N, std::size_t grid_points = 20001,
                        const std::vector<std::size_t>& n_bars = {50, 100, 150}, std::uint64_t seed = 1);

// Threshold t in [t_lo, t_hi] whose true PTE equals target: log-grid scan for the
// first sign change, then bisection.
double calibrate_t(const SimulationSetting& setting, double target_pte, double t_lo = 0.01, double t_hi = 20.0,
                   std::size_t grid_points = 20001);

// Reference PTE for settings 1-4, the default calibration targets.
double table_pte(int id);

struct StudyRow {
  std::string estimand;
  double truth = 0.0;  // NaN when no truth applies
  double est = 0.0;
  double ese = 0.0;
  double ase = 0.0;    // NaN when no SE is estimated
  double cp = 0.0;     // NaN when no interval is formed
  std::size_t count = 0;
};

struct ReplicateRecord {
  std::size_t index = 0;
  double pte = 0.0;  // NaN when the primary effect was too weak
  double pte_se = 0.0;
  std::vector<double> rp;
  std::vector<double> rp_se;
  double pte_f = 0.0;  // NaN when the Freedman fit failed
  Orientation orientation = Orientation::d0_empty;
};

struct StudySummary {
  std::string setting;
  double t = 0.0;
  std::size_t reps = 0;
  std::size_t n = 0;
  std::size_t failures = 0;
  std::vector<StudyRow> rows;
  std::map<std::string, std::size_t> orientation_counts;
  std::vector<ReplicateRecord> replicates;
  std::vector<std::string> notes;
  double runtime_seconds = 0.0;
};

struct StudyOptions {
  bool perturb = true;     // false skips SEs (ASE and CP become NaN)
  bool comparators = true; // Freedman PTE per replicate
};

StudySummary run_study(const SimulationSetting& setting, std::size_t reps, std::size_t n, const AnalysisConfig& cfg,
                       const Truth& truth, const StudyOptions& options = {});

std::string to_markdown(const StudySummary& summary);

}  // namespace optsurr
