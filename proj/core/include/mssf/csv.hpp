#pragma once

#include <filesystem>
#include <string>

#include "mssf/exact_filter.hpp"
#include "mssf/observation.hpp"
#include "mssf/pfilter.hpp"
#include "mssf/trajectory.hpp"

namespace mssf {

/// Shortest round-trip decimal rendering; all emitted numbers are
/// byte-deterministic.
std::string format_double(double v);

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

/// Header `t,<species names...>`; states in scaled coordinates.
std::string trajectory_csv(const ReactionNetwork& net, const Trajectory& traj);

/// Header `t,y1,...,ym`.
std::string observations_csv(const ObservationSequence& obs);
ObservationSequence parse_observations_csv(const std::string& text);

/// Header `t,functional,estimate,sd,ess,step_wall_ms`, one row per
/// (time, functional). The step_wall_ms column is measurement data and
/// is excluded from byte-determinism comparisons.
std::string filter_csv(const FilterRun& run);
std::string exact_filter_csv(const ExactFilterResult& result);

}  // namespace mssf
