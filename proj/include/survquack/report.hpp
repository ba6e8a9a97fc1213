#pragma once

// JSON report documents.
//
//   {
//     "schema": "survquack.report/1",
//     "command": "simulate",
//     "seed": 20240917,            // null when the command is seedless
//     "tool": {"name": "survquack", "version": "...", "generated_at": "..."},
//     "inputs": {...},
//     "results": {...}
//   }
//
// tool.version and tool.generated_at are outside the byte-determinism
// contract; everything else is a pure function of the inputs and seed.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "survquack/infer.hpp"
#include "survquack/sim.hpp"
#include "survquack/sme.hpp"

namespace survquack {

using Json = nlohmann::ordered_json;

inline constexpr const char* kReportSchema = "survquack.report/1";

Json to_json(const LogRankResult& r);
Json to_json(const WaldResult& r);
Json to_json(const CoxFit& f);
Json to_json(const WeibullFit& f);
Json to_json(const EfficacySummary& e);
Json to_json(const ConfidenceSet& cs);
Json to_json(const StratifiedComparison& c);
Json to_json(const RateEstimate& r);
Json to_json(const DirectionalErrorReport& r);
Json to_json(const ScenarioConfig& c);
Json to_json(const ResolvedScenario& s);

/// Section wrapper used by `analyze`: {"ok": true, ...payload} or
/// {"ok": false, "error": "...", "error_kind": "..."}.
Json ok_section(Json payload);
Json error_section(const std::exception& e);

Json make_report(const std::string& command, std::optional<std::uint64_t> seed, Json inputs, Json results);

/// Structural schema check; returns every problem found (empty when valid).
std::vector<std::string> validate_report(const Json& report);

/// Copy without tool.version and tool.generated_at.
Json strip_nondeterministic(const Json& report);

std::string dump_report(const Json& report);

} // namespace survquack
