#pragma once

#include <json.hpp>

#include "optsurr/analysis.hpp"
#include "optsurr/simulate.hpp"

namespace optsurr {

using Json = nlohmann::json;

Json to_json(const AnalysisConfig& cfg);
Json to_json(const SupportPartition& partition);
Json to_json(const TransformEstimate& estimate, bool with_curves = true);
Json to_json(const ResampleReport& report, bool with_draws = false);
Json to_json(const RpSurface& surface);
Json to_json(const CvResult& cv);
Json to_json(const SurrogacyDiagnostics& diagnostics);
Json to_json(const DesignResult& design);
Json to_json(const Truth& truth);
Json to_json(const StudySummary& summary);
Json to_json(const AnalysisReport& report);

SupportPartition partition_from_json(const Json& j);
TransformEstimate transform_from_json(const Json& j);
RpSurface surface_from_json(const Json& j);

}  // namespace optsurr
