#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "v2xsim/engine.hpp"

namespace v2xsim::output {

/// printf "%.6g"; every number in the CSV outputs goes through this.
std::string format_number(double x);

void write_sinr_samples(std::ostream& out, const std::vector<engine::DropMetrics>& drops);
void write_vehicle_summary(std::ostream& out, const std::vector<engine::DropMetrics>& drops);
void write_results_table(std::ostream& out, const std::vector<engine::ResultsRow>& rows);

/// One directory per experiment with the per-drop CSVs, plus a combined
/// results_table.csv in `dir`. Creates directories as needed.
void write_batch(const std::string& dir, const std::vector<engine::ExperimentResult>& results);

/// Human-readable summary table grouped by density row.
void print_summary(std::ostream& out, const std::vector<engine::ExperimentResult>& results);

}  // namespace v2xsim::output
