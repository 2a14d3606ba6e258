// Command-line front end: analyze a trial, design a surrogate trial, run simulation studies.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "optsurr/analysis.hpp"
#include "optsurr/errors.hpp"
#include "optsurr/report.hpp"
#include "optsurr/simulate.hpp"

using namespace optsurr;

namespace {

struct SharedFlags {
  std::uint64_t seed = AnalysisConfig{}.seed;
  std::size_t grid = AnalysisConfig{}.grid_points;
  std::optional<double> bandwidth;
  double c0 = AnalysisConfig{}.c0;
  std::size_t B = AnalysisConfig{}.resample_count;
  std::size_t K = AnalysisConfig{}.cv_folds;
  double trim = AnalysisConfig{}.support_trim;
  std::vector<std::size_t> n_bars = AnalysisConfig{}.n_bars;
  std::string out;

  void attach(CLI::App* app) {
    app->add_option("--seed", seed, "Base random seed");
    app->add_option("--grid", grid, "Number of grid points")->check(CLI::Range(16, 1 << 22));
    app->add_option("--bandwidth", bandwidth, "Fixed kernel bandwidth (default: undersmoothed rule)")
        ->check(CLI::PositiveNumber);
    app->add_option("--c0", c0, "Undersmoothing exponent");
    app->add_option("--B", B, "Perturbation replicates");
    app->add_option("--K", K, "Cross-validation folds");
    app->add_option("--trim", trim, "Support trimming quantile");
    app->add_option("--n-bar", n_bars, "Reference trial sizes")->delimiter(',');
    app->add_option("--out", out, "Output file");
  }

  AnalysisConfig config() const {
    AnalysisConfig cfg;
    cfg.seed = seed;
    cfg.grid_points = grid;
    if (bandwidth) {
      cfg.bandwidth_rule = BandwidthRule::fixed;
      cfg.fixed_bandwidth = *bandwidth;
    }
    cfg.c0 = c0;
    cfg.resample_count = B;
    cfg.cv_folds = K;
    cfg.support_trim = trim;
    cfg.n_bars = n_bars;
    cfg.validate();
    return cfg;
  }
};

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorCode::InvalidConfig, "cannot write " + path);
  f << content;
}

// JSON goes to --out when given; human-readable text always goes to stdout.
void emit(const std::string& out, const Json& j, const std::string& text, const std::string& markdown = {}) {
  if (out.empty()) {
    std::cout << text;
    return;
  }
  if (ends_with(out, ".md")) {
    write_file(out, markdown.empty() ? text : markdown);
  } else {
    write_file(out, j.dump(2) + "\n");
  }
  std::cout << text;
}

struct DataFlags {
  std::string path;
  ColumnMap columns;
  bool lenient = false;

  void attach(CLI::App* app, bool required) {
    auto* opt = app->add_option("--data", path, "Trial CSV with outcome, surrogate and arm columns");
    if (required) opt->required();
    app->add_option("--y-col", columns.y, "Outcome column name");
    app->add_option("--s-col", columns.s, "Surrogate column name");
    app->add_option("--a-col", columns.a, "Arm column name");
    app->add_flag("--lenient", lenient, "Drop rows with missing values instead of failing");
  }

  LoadResult load() const {
    return load_dataset_file(path, columns, lenient ? MissingPolicy::lenient : MissingPolicy::strict);
  }
};

Json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::MissingColumn, "cannot open " + path);
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("invalid JSON report: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal surrogate transformation: analysis, trial design and simulation"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Estimate the optimal transformation, PTE and relative power");
  SharedFlags a_flags;
  DataFlags a_data;
  bool with_comparators = false;
  a_flags.attach(analyze);
  a_data.attach(analyze, true);
  analyze->add_flag("--with-comparators", with_comparators, "Also report the Freedman PTE");

  // design
  auto* design = app.add_subcommand("design", "Choose the sample size of a future surrogate trial");
  SharedFlags d_flags;
  DataFlags d_data;
  std::string report_path;
  std::optional<double> rho, kappa;
  double alpha = 0.05;
  std::size_t max_n = 1'000'000;
  std::size_t design_n_bar = 100;
  d_flags.attach(design);
  d_data.attach(design, false);
  design->add_option("--report", report_path, "JSON report written by analyze");
  design->add_option("--design-n-bar", design_n_bar, "Reference trial size for the design target");
  auto* rho_opt = design->add_option("--rho", rho, "Target relative power");
  auto* kappa_opt = design->add_option("--kappa", kappa, "Floor for the lower confidence bound of relative power");
  design->add_option("--alpha", alpha, "One-sided level for --kappa")->check(CLI::Range(1e-6, 0.5));
  design->add_option("--max-n", max_n, "Largest sample size searched");
  rho_opt->excludes(kappa_opt);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a simulation study for one of the built-in settings");
  SharedFlags s_flags;
  int setting_id = 1;
  std::size_t reps = 100, n = 2000;
  std::optional<double> t_value;
  bool no_perturb = false, no_comparators = false;
  s_flags.attach(simulate);
  simulate->add_option("--setting", setting_id, "Setting id")->required()->check(CLI::Range(1, 5));
  simulate->add_option("--reps", reps, "Replicates")->check(CLI::PositiveNumber);
  simulate->add_option("--n", n, "Sample size per replicate")->check(CLI::PositiveNumber);
  simulate->add_option("--t", t_value, "Outcome threshold (default: calibrated to the tabulated PTE)");
  simulate->add_flag("--no-perturb", no_perturb, "Skip perturbation standard errors");
  simulate->add_flag("--no-comparators", no_comparators, "Skip the Freedman PTE");

  // calibrate-t
  auto* calibrate = app.add_subcommand("calibrate-t", "Find the threshold t giving a target true PTE");
  int cal_setting = 1;
  std::optional<double> cal_target;
  std::size_t cal_grid = 20001;
  std::string cal_out;
  calibrate->add_option("--setting", cal_setting, "Setting id")->required()->check(CLI::Range(1, 4));
  calibrate->add_option("--target", cal_target, "Target PTE (default: tabulated value)");
  calibrate->add_option("--grid", cal_grid, "Truth grid points");
  calibrate->add_option("--out", cal_out, "Output JSON file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*analyze) {
      const AnalysisConfig cfg = a_flags.config();
      const LoadResult loaded = a_data.load();
      const AnalysisReport report = run_analysis(loaded.dataset, cfg, with_comparators, loaded.dropped_rows);
      emit(a_flags.out, to_json(report), render_text(report));
    } else if (*design) {
      if (!rho && !kappa) throw Error(ErrorCode::InvalidConfig, "design needs --rho or --kappa");
      RpSurface surface;
      std::vector<double> eg, ey;
      if (!report_path.empty()) {
        const Json j = load_json(report_path);
        if (!j.contains("cv") || !j["cv"].contains("surface")) {
          throw Error(ErrorCode::MalformedInput, "report lacks cv.surface");
        }
        surface = surface_from_json(j["cv"]["surface"]);
      } else if (!d_data.path.empty()) {
        const AnalysisConfig cfg = d_flags.config();
        const LoadResult loaded = d_data.load();
        surface = run_analysis(loaded.dataset, cfg, false, loaded.dropped_rows).cv.surface;
      } else {
        throw Error(ErrorCode::InvalidConfig, "design needs --report or --data");
      }
      DesignResult result;
      if (rho) {
        double g = 0.0, y = 0.0;
        for (std::size_t k = 0; k < surface.effect_g.size(); ++k) {
          g += surface.effect_g[k];
          y += surface.effect_y[k];
        }
        const auto K = static_cast<double>(surface.effect_g.size());
        result = design_for_rp(g / K, y / K, design_n_bar, *rho, surface.z);
        if (result.n_star > max_n) {
          throw Error(ErrorCode::NoFeasibleN, "required n* exceeds --max-n " + std::to_string(max_n));
        }
      } else {
        result = design_from_surface(surface, design_n_bar, *kappa, alpha, max_n);
      }
      emit(d_flags.out, to_json(result), render_text(result));
    } else if (*simulate) {
      AnalysisConfig cfg = s_flags.config();
      double t = 1.0;
      if (t_value) {
        t = *t_value;
      } else if (setting_id <= 4) {
        t = calibrate_t(make_setting(setting_id, 1.0), table_pte(setting_id));
      }
      const SimulationSetting setting = make_setting(setting_id, t);
      TruthOptions topt;
      topt.n_bars = cfg.n_bars;
      topt.z = cfg.critical_z;
      const Truth truth = analytic_truth(setting, topt);
      StudyOptions sopt;
      sopt.perturb = !no_perturb;
      sopt.comparators = !no_comparators;
      const StudySummary summary = run_study(setting, reps, n, cfg, truth, sopt);
      const std::string md = to_markdown(summary);
      emit(s_flags.out, to_json(summary), md, md);
    } else if (*calibrate) {
      const double target = cal_target ? *cal_target : table_pte(cal_setting);
      const double t = calibrate_t(make_setting(cal_setting, 1.0), target, 0.01, 20.0, cal_grid);
      TruthOptions topt;
      topt.grid_points = cal_grid;
      const Truth truth = analytic_truth(make_setting(cal_setting, t), topt);
      Json j = {{"setting", cal_setting}, {"target_pte", target}, {"t", t}, {"truth", to_json(truth)}};
      std::ostringstream text;
      text << "setting " << cal_setting << ": t = " << t << " gives true PTE " << truth.pte << "\n";
      emit(cal_out, j, text.str());
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
