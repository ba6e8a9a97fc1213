#pragma once

// Comma-separated patient-level datasets.
//
//   time,event,arm[,s:<factor>...]
//   12.5,1,Rx,F
//
// time is a positive decimal, event is 0 (censored) or 1 (death), arm is the
// literal Rx or C. Columns named s:<factor> carry stratum level labels.
// Whitespace-only lines are skipped and counted; every other line either
// parses or produces a diagnostic carrying its line number.

#include <cstddef>
#include <iosfwd>
#include <string>

#include "survquack/estim.hpp"

namespace survquack {

struct LoadedDataset {
    SurvivalSample sample;
    std::size_t data_lines = 0;
    std::size_t blank_lines = 0;
};

/// ValidationError listing every bad line (line numbers are 1-based) or the
/// schema problem with the header.
LoadedDataset read_dataset(std::istream& in);
LoadedDataset read_dataset_file(const std::string& path);

/// Writes the header and one row per record; times printed with %.10g.
void write_dataset(std::ostream& out, const SurvivalSample& sample);

} // namespace survquack
