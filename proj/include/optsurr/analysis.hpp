#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "optsurr/comparators.hpp"
#include "optsurr/data.hpp"
#include "optsurr/effects.hpp"
#include "optsurr/power.hpp"
#include "optsurr/resample.hpp"
#include "optsurr/transform.hpp"

namespace optsurr {

// Everything the analyze pipeline produces for one dataset.
struct AnalysisReport {
  AnalysisConfig config;
  std::size_t n = 0;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  std::size_t dropped_rows = 0;
  TransformEstimate transform;  // full-sample fit
  EffectEstimate effects;       // full-sample effects of Y and g-hat(S)
  std::optional<double> pte_full;
  CvResult cv;
  SurrogacyDiagnostics diagnostics;
  std::optional<FreedmanFit> freedman;
  std::vector<std::string> notes;
};

AnalysisReport run_analysis(const TrialDataset& data, const AnalysisConfig& cfg, bool with_comparators = false,
                            std::size_t dropped_rows = 0);

std::string render_text(const AnalysisReport& report);
std::string render_text(const DesignResult& design);

extern const char* const kTransportabilityNote;

}  // namespace optsurr
