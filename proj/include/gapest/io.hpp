#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "gapest/bench.hpp"
#include "gapest/bootstrap.hpp"
#include "gapest/npmle.hpp"

namespace gapest::io {

// Observation CSV files. Readers report malformed rows with 1-based line
// numbers (ErrorCode::parse).

void write_pairs_csv(std::ostream& out, const std::vector<EquilibriumPair>& pairs);
void write_window_csv(std::ostream& out, const std::vector<WindowObservation>& obs);
void write_segments_csv(std::ostream& out, const std::vector<Segment>& segments);

std::vector<EquilibriumPair> read_pairs_csv(std::istream& in);
std::vector<WindowObservation> read_window_csv(std::istream& in);
std::vector<Segment> read_segments_csv(std::istream& in);

/// Reads whichever observation file the header identifies.
ObservationData read_observations_csv(std::istream& in);
void write_observations_csv(std::ostream& out, const ObservationData& data);

/// Window length implied by segment data (the rx length), if any rx row.
std::optional<double> window_length_hint(const ObservationData& data);

/// `t,survival,variance,lower,upper`. With a band, rows follow the band grid
/// and the estimate is evaluated there; otherwise rows are the jump times.
/// Absent or undefined values are empty cells.
void write_step_csv(std::ostream& out, const StepSurvival& est,
                    const BootstrapBand* band = nullptr);
/// JSON mirror of write_step_csv: arrays under the same names, null for
/// missing values.
std::string step_json(const StepSurvival& est, const BootstrapBand* band = nullptr);

std::string em_json(const EmResult& result);

std::string report_json(const McReport& report);
void write_report_csv(std::ostream& out, const McReport& report);

std::string tail_json(const TailReport& report);
void write_tail_csv(std::ostream& out, const TailReport& report);

/// Shortest decimal text that round-trips.
std::string format_number(double x);

}  // namespace gapest::io
