#include "optsurr/analysis.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "optsurr/errors.hpp"

namespace optsurr {

const char* const kTransportabilityNote =
    "Sample size assumes the surrogate-outcome relationship and effect sizes estimated in the current trial carry "
    "over to the future trial population.";

AnalysisReport run_analysis(const TrialDataset& data, const AnalysisConfig& cfg, bool with_comparators,
                            std::size_t dropped_rows) {
  cfg.validate();
  AnalysisReport rep;
  rep.config = cfg;
  rep.n = data.n();
  rep.n0 = data.n0();
  rep.n1 = data.n1();
  rep.dropped_rows = dropped_rows;

  rep.transform = fit_transform(data, cfg);
  rep.effects = estimate_effects(data, rep.transform, cfg.exclusion_cap);
  try {
    rep.pte_full = guarded_pte(rep.effects.delta_g, rep.effects.delta, rep.effects.sigma2, rep.n,
                               cfg.null_effect_threshold);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NullPrimaryEffect) throw;
    rep.notes.push_back(std::string("Full-sample PTE not reported: ") + e.what());
  }

  const CvPlan plan = make_cv_plan(data, cfg.cv_folds, cfg.seed);
  rep.cv = cv_estimate(data, plan, cfg);
  if (!rep.cv.pte_note.empty()) rep.notes.push_back(rep.cv.pte_note);
  if (rep.cv.failed_replicates > 0) {
    rep.notes.push_back(std::to_string(rep.cv.failed_replicates) +
                        " perturbation replicates failed and were dropped from the resampling summaries.");
  }

  rep.diagnostics = diagnose(data, rep.transform, cfg);
  if (!rep.diagnostics.c1.holds) rep.notes.push_back("Condition C1 (monotone surrogate regressions) may be violated.");
  if (!rep.diagnostics.c2.holds) rep.notes.push_back("Condition C2 (treatment-arm dominance) may be violated.");

  if (with_comparators) {
    try {
      rep.freedman = pte_freedman(data);
      rep.notes.push_back("PTE_F uses linear least squares for both regressions regardless of the outcome scale.");
    } catch (const Error& e) {
      rep.notes.push_back(std::string("PTE_F unavailable: ") + e.what());
    }
  }

  const auto& curves = rep.transform.curves;
  if (curves.floored_nodes > 0) {
    rep.notes.push_back(std::to_string(curves.floored_nodes) + " of " + std::to_string(curves.grid.size()) +
                        " grid nodes had the arm-0 density raised to the floor.");
  }
  if (curves.excluded_nodes > 0) {
    rep.notes.push_back(std::to_string(curves.excluded_nodes) +
                        " grid nodes lacked kernel mass and were filled by interpolation.");
  }
  if (rep.effects.excluded > 0) {
    rep.notes.push_back(std::to_string(rep.effects.excluded) +
                        " subjects fell outside the estimated support and were excluded from the surrogate effect.");
  }
  if (cfg.bandwidth_rule == BandwidthRule::scott_undersmoothed) {
    const double nu = 0.2 + cfg.c0;
    if (!(nu > 0.25 && nu < 0.5)) {
      std::ostringstream os;
      os << "Bandwidth shrinks like n^-" << nu << "; resampled RP and PTE intervals assume an exponent in (0.25, 0.5).";
      rep.notes.push_back(os.str());
    }
  } else {
    rep.notes.push_back("Fixed bandwidth: resampled intervals assume it is small enough to undersmooth.");
  }
  return rep;
}

namespace {

std::string fmt(double v, int prec = 4) {
  if (!std::isfinite(v)) return "NA";
  std::ostringstream os;
  os << std::fixed << std::setprecision(prec) << v;
  return os.str();
}

std::string interval_text(const Interval& i) { return "[" + fmt(i.lo) + ", " + fmt(i.hi) + "]"; }

void report_line(std::ostringstream& os, const std::string& label, const ResampleReport& r) {
  const int pct = static_cast<int>(std::lround(r.level * 100));
  os << "  " << std::left << std::setw(14) << label << fmt(r.point) << "  SE " << fmt(r.se) << "  " << pct
     << "% normal " << interval_text(r.normal_ci) << "  " << pct << "% percentile " << interval_text(r.percentile_ci)
     << "\n";
}

}  // namespace

std::string render_text(const AnalysisReport& r) {
  std::ostringstream os;
  const auto& t = r.transform;
  const auto& p = t.partition;
  os << "Optimal transformation analysis\n";
  os << "  n = " << r.n << " (arm 0: " << r.n0 << ", arm 1: " << r.n1 << ")";
  if (r.dropped_rows > 0) os << ", " << r.dropped_rows << " rows dropped";
  os << "\n  seed " << r.config.seed << ", B " << r.config.resample_count << ", K " << r.config.cv_folds
     << ", bandwidths h0 " << fmt(t.h0) << " h1 " << fmt(t.h1) << "\n\n";

  os << "Support\n";
  os << "  Omega_0 " << interval_text(p.omega0) << "  Omega_1 " << interval_text(p.omega1) << "\n";
  os << "  D_c " << interval_text(p.d_c);
  if (p.d_0) os << "  D_0 " << interval_text(*p.d_0) << "  s* " << fmt(*p.s_star);
  os << "  (" << orientation_name(p.orientation) << ")\n";
  os << "  lambda " << fmt(t.lambda) << "  c " << (t.c ? fmt(*t.c) : std::string("NA")) << "  K1 " << fmt(t.k1)
     << "  K2 " << fmt(t.k2) << "\n\n";

  const auto& e = r.effects;
  os << "Full-sample effects\n";
  os << "  Delta   " << fmt(e.delta) << "  sigma   " << fmt(std::sqrt(e.sigma2)) << "\n";
  os << "  Delta_g " << fmt(e.delta_g) << "  sigma_g " << fmt(std::sqrt(e.sigma2_g)) << "\n";
  os << "  PTE     " << (r.pte_full ? fmt(*r.pte_full) : std::string("NA")) << "\n\n";

  os << "Cross-validated estimates (" << r.cv.K << " folds)\n";
  if (r.cv.pte) report_line(os, "PTE_CV", *r.cv.pte);
  else os << "  PTE_CV        NA\n";
  for (const auto& row : r.cv.rp) report_line(os, "RP(" + std::to_string(row.n_bar) + ")", row.report);
  report_line(os, "Delta", r.cv.delta);
  report_line(os, "Delta_g", r.cv.delta_g);
  os << "\n";

  const auto& d = r.diagnostics;
  os << "Diagnostics\n";
  os << "  C1 " << (d.c1.holds ? "holds" : "violated") << " (max violation " << fmt(d.c1.max_violation) << ")\n";
  os << "  C2 " << (d.c2.holds ? "holds" : "violated") << " (max violation " << fmt(d.c2.max_violation) << ")\n";
  os << "  Delta_g - Delta_L gap " << fmt(d.delta_l_gap) << "\n";

  if (r.freedman) os << "\nComparators\n  PTE_F " << fmt(r.freedman->pte_f) << "\n";
  if (!r.notes.empty()) {
    os << "\nNotes\n";
    for (const auto& n : r.notes) os << "  - " << n << "\n";
  }
  return os.str();
}

std::string render_text(const DesignResult& d) {
  std::ostringstream os;
  os << "Surrogate trial design\n";
  os << "  reference trial size n_bar " << d.n_bar << "\n";
  if (d.target == DesignTarget::rp_target) {
    os << "  target RP >= " << fmt(d.target_value) << "\n";
  } else {
    os << "  target lower " << fmt(100 * (1 - d.alpha), 1) << "% bound of RP >= " << fmt(d.target_value) << "\n";
  }
  os << "  n* = " << d.n_star << " (achieved " << fmt(d.achieved) << ", at n* - 1: " << fmt(d.achieved_below)
     << ")\n";
  os << "  Assumption: " << kTransportabilityNote << "\n";
  return os.str();
}

}  // namespace optsurr
