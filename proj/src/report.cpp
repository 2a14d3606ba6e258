#include "optsurr/report.hpp"

#include <cmath>
#include <limits>

#include "optsurr/errors.hpp"

namespace optsurr {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json nums(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

double read_num(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::vector<double> read_nums(const Json& j) {
  std::vector<double> v;
  for (const auto& x : j) v.push_back(read_num(x));
  return v;
}

Json interval(const Interval& i) { return Json{{"lo", num(i.lo)}, {"hi", num(i.hi)}}; }
Json opt_interval(const std::optional<Interval>& i) { return i ? interval(*i) : Json(nullptr); }
Interval read_interval(const Json& j) { return {read_num(j.at("lo")), read_num(j.at("hi"))}; }

Json verdict(const ConditionVerdict& v) {
  return {{"holds", v.holds}, {"max_violation", num(v.max_violation)}, {"max_gap", num(v.max_gap)}};
}
}  // namespace

Json to_json(const AnalysisConfig& c) {
  return {{"bandwidth_rule", c.bandwidth_rule == BandwidthRule::fixed ? "fixed" : "scott_undersmoothed"},
          {"fixed_bandwidth", num(c.fixed_bandwidth)},
          {"c0", c.c0},
          {"grid_points", c.grid_points},
          {"support_trim", c.support_trim},
          {"density_floor_rel", c.density_floor_rel},
          {"B", c.resample_count},
          {"K", c.cv_folds},
          {"critical_z", c.critical_z},
          {"alpha", c.alpha},
          {"seed", c.seed},
          {"min_fold_arm", c.min_fold_arm},
          {"exclusion_cap", c.exclusion_cap},
          {"null_effect_threshold", c.null_effect_threshold},
          {"n_bars", c.n_bars}};
}

Json to_json(const SupportPartition& p) {
  return {{"omega0", interval(p.omega0)},
          {"omega1", interval(p.omega1)},
          {"d_c", interval(p.d_c)},
          {"d_1_lower", opt_interval(p.d1_lower)},
          {"d_1_upper", opt_interval(p.d1_upper)},
          {"d_0", opt_interval(p.d_0)},
          {"s_star", p.s_star ? Json(*p.s_star) : Json(nullptr)},
          {"orientation", orientation_name(p.orientation)}};
}

SupportPartition partition_from_json(const Json& j) {
  return make_partition(read_interval(j.at("omega0")), read_interval(j.at("omega1")));
}

Json to_json(const TransformEstimate& e, bool with_curves) {
  Json j = {{"lambda", num(e.lambda)},
            {"c", e.c ? num(*e.c) : Json(nullptr)},
            {"k1", num(e.k1)},
            {"k2", num(e.k2)},
            {"h0", num(e.h0)},
            {"h1", num(e.h1)},
            {"partition", to_json(e.partition)},
            {"grid", nums(e.curves.grid)},
            {"g", nums(e.g_values)},
            {"density_floor", num(e.curves.density_floor)},
            {"floored_nodes", e.curves.floored_nodes},
            {"excluded_nodes", e.curves.excluded_nodes}};
  if (with_curves) {
    j["curves"] = {{"m0", nums(e.curves.m0)}, {"m1", nums(e.curves.m1)}, {"f0", nums(e.curves.f0)},
                   {"f1", nums(e.curves.f1)}, {"r", nums(e.curves.r)},   {"delta01", nums(e.curves.delta01)}};
  }
  return j;
}

TransformEstimate transform_from_json(const Json& j) {
  TransformEstimate e;
  e.partition = partition_from_json(j.at("partition"));
  e.lambda = read_num(j.at("lambda"));
  if (!j.at("c").is_null()) e.c = j.at("c").get<double>();
  e.k1 = read_num(j.at("k1"));
  e.k2 = read_num(j.at("k2"));
  e.h0 = read_num(j.value("h0", Json(nullptr)));
  e.h1 = read_num(j.value("h1", Json(nullptr)));
  e.curves.grid = read_nums(j.at("grid"));
  e.g_values = read_nums(j.at("g"));
  if (e.curves.grid.size() != e.g_values.size() || e.curves.grid.size() < 2) {
    throw Error(ErrorCode::MalformedInput, "transform grid and g differ in length");
  }
  if (j.contains("curves")) {
    const auto& c = j.at("curves");
    e.curves.m0 = read_nums(c.at("m0"));
    e.curves.m1 = read_nums(c.at("m1"));
    e.curves.f0 = read_nums(c.at("f0"));
    e.curves.f1 = read_nums(c.at("f1"));
    e.curves.r = read_nums(c.at("r"));
    e.curves.delta01 = read_nums(c.at("delta01"));
  }
  e.curves.density_floor = read_num(j.value("density_floor", Json(nullptr)));
  return e;
}

Json to_json(const ResampleReport& r, bool with_draws) {
  Json j = {{"point", num(r.point)},
            {"se", num(r.se)},
            {"intervals",
             Json::array({{{"method", "normal"}, {"level", r.level}, {"lo", num(r.normal_ci.lo)}, {"hi", num(r.normal_ci.hi)}},
                          {{"method", "percentile"},
                           {"level", r.level},
                           {"lo", num(r.percentile_ci.lo)},
                           {"hi", num(r.percentile_ci.hi)}}})},
            {"lower_one_sided", {{"method", "normal"}, {"level", r.level}, {"value", num(r.ci_lower_one_sided)}}},
            {"replicates", r.draws.size()},
            {"failed", r.failed},
            {"point_outside_percentile", r.point_outside_percentile}};
  if (with_draws) j["draws"] = nums(r.draws);
  return j;
}

Json to_json(const RpSurface& s) {
  Json dg = Json::array(), dy = Json::array();
  for (const auto& d : s.draws_g) dg.push_back(nums(d));
  for (const auto& d : s.draws_y) dy.push_back(nums(d));
  return {{"z", s.z}, {"effect_g", nums(s.effect_g)}, {"effect_y", nums(s.effect_y)}, {"draws_g", dg}, {"draws_y", dy}};
}

RpSurface surface_from_json(const Json& j) {
  RpSurface s;
  s.z = j.at("z").get<double>();
  s.effect_g = read_nums(j.at("effect_g"));
  s.effect_y = read_nums(j.at("effect_y"));
  for (const auto& d : j.at("draws_g")) s.draws_g.push_back(read_nums(d));
  for (const auto& d : j.at("draws_y")) s.draws_y.push_back(read_nums(d));
  if (s.effect_g.size() != s.effect_y.size() || s.draws_g.size() != s.draws_y.size()) {
    throw Error(ErrorCode::MalformedInput, "inconsistent RP surface in report");
  }
  return s;
}

Json to_json(const CvResult& cv) {
  Json folds = Json::array();
  for (const auto& f : cv.folds) {
    folds.push_back({{"fold", f.fold},
                     {"train_size", f.train_size},
                     {"held_out_size", f.held_out_size},
                     {"excluded", f.excluded},
                     {"orientation", orientation_name(f.orientation)},
                     {"lambda", num(f.lambda)},
                     {"c", f.c ? num(*f.c) : Json(nullptr)},
                     {"h0", num(f.h0)},
                     {"h1", num(f.h1)},
                     {"delta", num(f.delta)},
                     {"sigma", num(f.sigma)},
                     {"delta_g", num(f.delta_g)},
                     {"sigma_g", num(f.sigma_g)},
                     {"rp", nums(f.rp)}});
  }
  Json rp = Json::array();
  for (const auto& row : cv.rp) {
    Json r = to_json(row.report);
    r["n_bar"] = row.n_bar;
    rp.push_back(r);
  }
  return {{"K", cv.K},
          {"folds", folds},
          {"pte", cv.pte ? to_json(*cv.pte) : Json(nullptr)},
          {"pte_note", cv.pte_note},
          {"rp", rp},
          {"delta", to_json(cv.delta)},
          {"delta_g", to_json(cv.delta_g)},
          {"effect_y", num(cv.effect_y)},
          {"effect_g", num(cv.effect_g)},
          {"failed_replicates", cv.failed_replicates},
          {"surface", to_json(cv.surface)}};
}

Json to_json(const SurrogacyDiagnostics& d) {
  return {{"c1", verdict(d.c1)},
          {"c2", verdict(d.c2)},
          {"u_grid", nums(d.u_grid)},
          {"s_curves", {{"s0", nums(d.s0)}, {"s1", nums(d.s1)}}},
          {"m_curves", {{"m0", nums(d.m0)}, {"m1", nums(d.m1)}}},
          {"f_new", nums(d.f_new)},
          {"delta_l_gap", num(d.delta_l_gap)}};
}

Json to_json(const DesignResult& d) {
  Json j = {{"n_star", d.n_star},
            {"n_bar", d.n_bar},
            {"target", d.target == DesignTarget::rp_target ? "rp_target" : "ci_floor"},
            {"target_value", num(d.target_value)},
            {"achieved", num(d.achieved)},
            {"achieved_below", num(d.achieved_below)},
            {"assumption", kTransportabilityNote}};
  j["alpha"] = d.target == DesignTarget::ci_floor ? num(d.alpha) : Json(nullptr);
  return j;
}

Json to_json(const Truth& t) {
  return {{"delta", num(t.delta)},
          {"delta_g", num(t.delta_g)},
          {"pte", num(t.pte)},
          {"sigma", num(t.sigma)},
          {"sigma_g", num(t.sigma_g)},
          {"effect_y", num(t.effect_y())},
          {"effect_g", num(t.effect_g())},
          {"lambda", num(t.lambda)},
          {"c", t.c ? num(*t.c) : Json(nullptr)},
          {"n_bars", t.n_bars},
          {"rp", nums(t.rp)},
          {"orientation", orientation_name(t.orientation)},
          {"oracle_gap", num(t.oracle_gap)},
          {"mc_draws", t.mc_draws},
          {"mc_delta", num(t.mc_delta)},
          {"mc_delta_se", num(t.mc_delta_se)},
          {"mc_delta_g", num(t.mc_delta_g)},
          {"mc_delta_g_se", num(t.mc_delta_g_se)}};
}

Json to_json(const StudySummary& s) {
  Json rows = Json::array();
  for (const auto& r : s.rows) {
    rows.push_back({{"estimand", r.estimand},
                    {"truth", num(r.truth)},
                    {"est", num(r.est)},
                    {"ese", num(r.ese)},
                    {"ase", num(r.ase)},
                    {"cp", num(r.cp)},
                    {"count", r.count}});
  }
  return {{"setting", s.setting},
          {"t", num(s.t)},
          {"reps", s.reps},
          {"n", s.n},
          {"failures", s.failures},
          {"rows", rows},
          {"orientation_counts", s.orientation_counts},
          {"notes", s.notes},
          {"runtime_seconds", s.runtime_seconds}};
}

Json to_json(const AnalysisReport& r) {
  const auto& e = r.effects;
  return {{"config", to_json(r.config)},
          {"data", {{"n", r.n}, {"n0", r.n0}, {"n1", r.n1}, {"dropped_rows", r.dropped_rows}}},
          {"transform", to_json(r.transform)},
          {"effects",
           {{"delta", num(e.delta)},
            {"sigma", num(std::sqrt(e.sigma2))},
            {"delta_g", num(e.delta_g)},
            {"sigma_g", num(std::sqrt(e.sigma2_g))},
            {"mu0", num(e.mu0)},
            {"mu1", num(e.mu1)},
            {"mu_g0", num(e.mu_g0)},
            {"mu_g1", num(e.mu_g1)},
            {"excluded", e.excluded},
            {"pte", r.pte_full ? num(*r.pte_full) : Json(nullptr)}}},
          {"cv", to_json(r.cv)},
          {"diagnostics", to_json(r.diagnostics)},
          {"comparators", r.freedman ? Json{{"pte_f", num(r.freedman->pte_f)},
                                            {"beta_a_marginal", num(r.freedman->beta_a_marginal)},
                                            {"beta_a_adjusted", num(r.freedman->beta_a_adjusted)},
                                            {"method", "linear least squares"}}
                                     : Json(nullptr)},
          {"notes", r.notes}};
}

}  // namespace optsurr
