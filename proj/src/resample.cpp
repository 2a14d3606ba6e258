#include "optsurr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "optsurr/effects.hpp"
#include "optsurr/errors.hpp"
#include "optsurr/kernel.hpp"
#include "optsurr/parallel.hpp"
#include "optsurr/rng.hpp"

namespace optsurr {

std::vector<double> perturbation_weights(const PerturbationScheme& scheme, std::size_t b, std::size_t n) {
  if (scheme.distribution == WeightLaw::unit) return std::vector<double>(n, 1.0);
  Rng rng(derive_seed(scheme.base_seed, streams::perturbation, b));
  std::exponential_distribution<double> law(1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = law(rng);
  return w;
}

ResampleReport summarize_draws(double point, std::vector<double> draws, double alpha, std::size_t failed) {
  ResampleReport r;
  r.point = point;
  r.level = 1.0 - alpha;
  r.failed = failed;
  if (draws.size() >= 2) {
    r.se = sample_sd(draws);
    r.percentile_ci = {quantile(draws, alpha / 2.0), quantile(draws, 1.0 - alpha / 2.0)};
  } else {
    r.percentile_ci = {point, point};
  }
  const double z2 = normal_quantile(1.0 - alpha / 2.0);
  r.normal_ci = {point - z2 * r.se, point + z2 * r.se};
  r.ci_lower_one_sided = point - normal_quantile(1.0 - alpha) * r.se;
  r.point_outside_percentile = point < r.percentile_ci.lo || point > r.percentile_ci.hi;
  r.draws = std::move(draws);
  return r;
}

VectorResample perturb_vector(std::size_t n, const WeightedVectorEstimator& estimator,
                              const PerturbationScheme& scheme) {
  if (scheme.B < 1) throw Error(ErrorCode::InvalidConfig, "B must be at least 1");
  VectorResample out;
  out.point = estimator({});
  std::vector<std::vector<double>> slots(scheme.B);
  std::vector<unsigned char> ok(scheme.B, 0);
  parallel_for(scheme.B, [&](std::size_t b) {
    const auto w = perturbation_weights(scheme, b, n);
    try {
      slots[b] = estimator(w);
      ok[b] = std::all_of(slots[b].begin(), slots[b].end(), [](double v) { return std::isfinite(v); });
    } catch (const Error&) {
      ok[b] = 0;
    }
  });
  for (std::size_t b = 0; b < scheme.B; ++b) {
    if (ok[b]) out.draws.push_back(std::move(slots[b])); else ++out.failed;
  }
  if (static_cast<double>(out.failed) > 0.05 * static_cast<double>(scheme.B)) {
    throw Error(ErrorCode::EstimatorFailure, std::to_string(out.failed) + " of " + std::to_string(scheme.B) +
                                                 " perturbation replicates failed");
  }
  return out;
}

ResampleReport perturb_estimate(const TrialDataset& data, const WeightedEstimator& estimator,
                                const PerturbationScheme& scheme, double alpha) {
  const auto vr = perturb_vector(
      data.n(), [&](std::span<const double> w) { return std::vector<double>{estimator(w)}; }, scheme);
  std::vector<double> draws;
  draws.reserve(vr.draws.size());
  for (const auto& d : vr.draws) draws.push_back(d[0]);
  return summarize_draws(vr.point[0], std::move(draws), alpha, vr.failed);
}

CvPlan::CvPlan(std::vector<std::size_t> fold_of, std::size_t K, std::uint64_t seed)
    : fold_of_(std::move(fold_of)), K_(K), seed_(seed) {
  if (K_ < 2) throw Error(ErrorCode::InvalidConfig, "K must be at least 2");
  for (auto f : fold_of_) {
    if (f >= K_) throw Error(ErrorCode::InvalidParameters, "fold index out of range");
  }
}

std::vector<std::size_t> CvPlan::members(std::size_t k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (fold_of_[i] == k) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> CvPlan::complement(std::size_t k) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < fold_of_.size(); ++i) {
    if (fold_of_[i] != k) out.push_back(i);
  }
  return out;
}

CvPlan make_cv_plan(const TrialDataset& data, std::size_t K, std::uint64_t seed) {
  if (K < 2) throw Error(ErrorCode::InvalidConfig, "K must be at least 2");
  Rng rng(derive_seed(seed, streams::folds, K));
  std::vector<std::size_t> fold_of(data.n(), 0);
  std::size_t dealt = 0;
  for (int arm = 0; arm < 2; ++arm) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < data.n(); ++i) {
      if (data.a()[i] == arm) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    for (auto i : idx) fold_of[i] = dealt++ % K;
  }
  return CvPlan(std::move(fold_of), K, seed);
}

namespace {

struct Fold {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  std::unique_ptr<TransformFitter> fitter;
  std::unique_ptr<GridInterpolator> interp;
  std::vector<double> test_y;
  std::vector<int> test_a;
  Orientation orientation = Orientation::d0_empty;
};

struct FoldEval {
  double delta, sigma, delta_g, sigma_g, lambda;
  std::optional<double> c;
  std::size_t excluded;
  double h0, h1;
};

std::vector<double> gather(std::span<const double> v, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(v[i]);
  return out;
}

void check_fold_sizes(const TrialDataset& data, const std::vector<std::size_t>& idx, std::size_t k,
                      std::size_t min_arm, const char* part) {
  std::size_t count[2] = {0, 0};
  for (auto i : idx) count[data.a()[i]]++;
  for (int a = 0; a < 2; ++a) {
    if (count[a] < min_arm) {
      throw Error(ErrorCode::FoldTooSmall, "fold " + std::to_string(k) + " " + part + " arm " + std::to_string(a) +
                                               " has " + std::to_string(count[a]) + " records");
    }
  }
}

class CvEngine {
 public:
  CvEngine(const TrialDataset& data, const CvPlan& plan, const AnalysisConfig& cfg, const CvOptions& options)
      : data_(data), cfg_(cfg), fixed_(options.fixed_transform) {
    if (plan.assignment().size() != data.n()) throw Error(ErrorCode::InvalidParameters, "plan does not match data");
    folds_.resize(plan.K());
    for (std::size_t k = 0; k < plan.K(); ++k) {
      Fold& f = folds_[k];
      f.train = plan.members(k);
      f.test = plan.complement(k);
      check_fold_sizes(data, f.train, k, cfg.min_fold_arm, "training part");
      check_fold_sizes(data, f.test, k, cfg.min_fold_arm, "held-out part");
      const auto test_s = gather(data.s(), f.test);
      f.test_y = gather(data.y(), f.test);
      for (auto i : f.test) f.test_a.push_back(data.a()[i]);
      if (fixed_) {
        f.interp = std::make_unique<GridInterpolator>(fixed_->curves.grid, test_s);
        f.orientation = fixed_->partition.orientation;
      } else {
        const TrialDataset train = data.subset(f.train);
        const Bandwidths h = select_bandwidths(train, cfg, data.n0(), data.n1());
        f.fitter = std::make_unique<TransformFitter>(train, cfg, h);
        f.interp = std::make_unique<GridInterpolator>(f.fitter->grid(), test_s);
        f.orientation = f.fitter->partition().orientation;
      }
    }
  }

  std::size_t folds() const { return folds_.size(); }
  const Fold& fold(std::size_t k) const { return folds_[k]; }

  FoldEval evaluate(std::size_t k, std::span<const double> weights) const {
    const Fold& f = folds_[k];
    std::vector<double> wtrain, wtest;
    if (!weights.empty()) {
      wtrain = gather(weights, f.train);
      wtest = gather(weights, f.test);
    }
    TransformEstimate fitted;
    const TransformEstimate* est = fixed_;
    if (!est) {
      fitted = f.fitter->fit(wtrain);
      est = &fitted;
    }
    const std::size_t m = f.test.size();
    std::vector<double> gv(m, 0.0);
    std::vector<unsigned char> include(m, 1);
    for (std::size_t q = 0; q < m; ++q) {
      if (f.interp->inside(q)) gv[q] = f.interp->value(est->g_values, q); else include[q] = 0;
    }
    const std::size_t excluded = f.interp->outside_count();
    if (static_cast<double>(excluded) > cfg_.exclusion_cap * static_cast<double>(m)) {
      throw Error(ErrorCode::TooManyExcluded, "fold " + std::to_string(k) + ": " + std::to_string(excluded) +
                                                  " held-out subjects outside the training support");
    }
    const ArmContrast cy = arm_contrast(f.test_y, f.test_a, wtest);
    const ArmContrast cg = arm_contrast(gv, f.test_a, wtest, include);
    return {cy.delta, std::sqrt(cy.sigma2), cg.delta, std::sqrt(cg.sigma2), est->lambda, est->c, excluded,
            est->h0, est->h1};
  }

  // Layout: [pte, rp(n_bar)..., mean delta, mean delta_g, eg_k..., ey_k...]
  std::vector<double> functionals(std::span<const double> weights) const {
    const std::size_t K = folds_.size();
    const auto& nbars = cfg_.n_bars;
    std::vector<double> out(nbars.size() + 3 + 2 * K, 0.0);
    double sum_d = 0.0, sum_dg = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const FoldEval e = evaluate(k, weights);
      sum_d += e.delta;
      sum_dg += e.delta_g;
      const double eg = e.delta_g / e.sigma_g, ey = e.delta / e.sigma;
      out[nbars.size() + 3 + k] = eg;
      out[nbars.size() + 3 + K + k] = ey;
      for (std::size_t j = 0; j < nbars.size(); ++j) {
        const auto nb = static_cast<double>(nbars[j]);
        out[1 + j] += relative_power(eg, ey, nb, nb, cfg_.critical_z) / static_cast<double>(K);
      }
    }
    out[0] = sum_dg / sum_d;
    out[nbars.size() + 1] = sum_d / static_cast<double>(K);
    out[nbars.size() + 2] = sum_dg / static_cast<double>(K);
    return out;
  }

 private:
  const TrialDataset& data_;
  const AnalysisConfig& cfg_;
  const TransformEstimate* fixed_;
  std::vector<Fold> folds_;
};

}  // namespace

CvResult cv_estimate(const TrialDataset& data, const CvPlan& plan, const AnalysisConfig& cfg,
                     const CvOptions& options) {
  cfg.validate();
  const CvEngine engine(data, plan, cfg, options);
  const std::size_t K = engine.folds();
  const std::size_t m = cfg.n_bars.size();

  CvResult result;
  result.K = K;
  for (std::size_t k = 0; k < K; ++k) {
    const FoldEval e = engine.evaluate(k, {});
    FoldSummary s;
    s.fold = k;
    s.train_size = engine.fold(k).train.size();
    s.held_out_size = engine.fold(k).test.size();
    s.excluded = e.excluded;
    s.orientation = engine.fold(k).orientation;
    s.lambda = e.lambda;
    s.c = e.c;
    s.h0 = e.h0;
    s.h1 = e.h1;
    s.delta = e.delta;
    s.sigma = e.sigma;
    s.delta_g = e.delta_g;
    s.sigma_g = e.sigma_g;
    for (auto nb : cfg.n_bars) {
      const auto x = static_cast<double>(nb);
      s.rp.push_back(relative_power(e.delta_g / e.sigma_g, e.delta / e.sigma, x, x, cfg.critical_z));
    }
    result.folds.push_back(std::move(s));
  }

  const auto estimator = [&](std::span<const double> w) { return engine.functionals(w); };
  VectorResample vr;
  if (options.perturb) {
    PerturbationScheme scheme{WeightLaw::exponential_mean_one, cfg.resample_count, cfg.seed};
    vr = perturb_vector(data.n(), estimator, scheme);
  } else {
    vr.point = estimator({});
  }
  result.failed_replicates = vr.failed;
  auto column = [&](std::size_t j) {
    std::vector<double> c;
    c.reserve(vr.draws.size());
    for (const auto& d : vr.draws) c.push_back(d[j]);
    return summarize_draws(vr.point[j], std::move(c), cfg.alpha, vr.failed);
  };

  const ArmContrast full = treatment_effect(data);
  try {
    guarded_pte(vr.point[m + 2], full.delta, full.sigma2, data.n(), cfg.null_effect_threshold);
    result.pte = column(0);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NullPrimaryEffect) throw;
    result.pte_note = e.what();
  }
  for (std::size_t j = 0; j < m; ++j) result.rp.push_back({cfg.n_bars[j], column(1 + j)});
  result.delta = column(m + 1);
  result.delta_g = column(m + 2);

  RpSurface& surf = result.surface;
  surf.z = cfg.critical_z;
  surf.effect_g.assign(vr.point.begin() + static_cast<long>(m + 3), vr.point.begin() + static_cast<long>(m + 3 + K));
  surf.effect_y.assign(vr.point.begin() + static_cast<long>(m + 3 + K), vr.point.end());
  for (const auto& d : vr.draws) {
    surf.draws_g.emplace_back(d.begin() + static_cast<long>(m + 3), d.begin() + static_cast<long>(m + 3 + K));
    surf.draws_y.emplace_back(d.begin() + static_cast<long>(m + 3 + K), d.end());
  }
  result.effect_g = std::accumulate(surf.effect_g.begin(), surf.effect_g.end(), 0.0) / static_cast<double>(K);
  result.effect_y = std::accumulate(surf.effect_y.begin(), surf.effect_y.end(), 0.0) / static_cast<double>(K);
  return result;
}

TransformEstimate fit_fold_transform(const TrialDataset& data, const CvPlan& plan, std::size_t k,
                                     const AnalysisConfig& cfg) {
  const TrialDataset train = data.subset(plan.members(k));
  return TransformFitter(train, cfg, select_bandwidths(train, cfg, data.n0(), data.n1())).fit();
}

}  // namespace optsurr
