#pragma once

// Flat key = value configuration files with [section] headers.
//
//   # comment
//   replications = 1000
//   [subgroup g+]
//   prevalence = 0.5
//
// Two documents are understood: scenario configs (consumed by `simulate`) and
// dataset configs (a [dataset] section, consumed by `make-dataset`).

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survquack/estim.hpp"
#include "survquack/sim.hpp"

namespace survquack {

struct IniEntry {
    std::string key;
    std::string value;
    std::size_t line = 0;
};

struct IniSection {
    std::string name; // empty for the top level
    std::size_t line = 0;
    std::vector<IniEntry> entries;
};

struct IniDocument {
    std::vector<IniSection> sections;

    const IniSection* find(const std::string& name) const;
};

IniDocument parse_ini(std::istream& in);
IniDocument parse_ini_file(const std::string& path);

struct SweepSpec {
    std::string subgroup;
    std::vector<double> prevalences;
};

struct SimulationConfig {
    ScenarioConfig scenario;
    std::optional<SweepSpec> sweep;
    bool seed_from_file = false;
};

/// Unknown keys and malformed values are collected into one ValidationError.
SimulationConfig simulation_config_from_ini(const IniDocument& doc);

struct FactorSpec {
    std::string name;
    std::vector<std::string> levels;
    std::vector<double> probs;
    std::vector<double> log_hazard; // prognostic shift of the log control hazard
};

/// Synthetic two-arm dataset: every cell (combination of factor levels) has a
/// Weibull control law whose hazard is the reference hazard times
/// exp(sum of level log_hazard), and a treated law that is the control law
/// raised to `hr`. Arms have n_per_arm subjects each (Rx rows first).
struct DatasetSpec {
    std::string name = "dataset";
    std::size_t n_per_arm = 500;
    std::uint64_t seed = 1;
    double shape = 1.0;
    double control_median = 10.0;
    double hr = 1.0;
    bool mirror_arms = false; // C rows copy the Rx rows exactly
    std::optional<double> censor_after;
    std::vector<FactorSpec> factors;
};

DatasetSpec dataset_spec_from_ini(const IniDocument& doc);

/// Levels from stream (seed, "levels", 0), one uniform per factor per subject;
/// times from stream (seed, "times", 0), one uniform per subject.
SurvivalSample generate_dataset(const DatasetSpec& spec);

} // namespace survquack
