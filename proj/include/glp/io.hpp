#pragma once

// Plain-text artifacts: CSV tables with a header row, comma separators and
// shortest round-trip decimal numbers.

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "glp/calibrate.hpp"
#include "glp/profile.hpp"

namespace glp::io {

/// Shortest decimal that parses back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double value);
double parse_double(std::string_view text);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

/// Columns phi, profile_loss, log_gl_delta1, converged (0/1).
void write_profile_csv(const std::filesystem::path& path, const ProfileCurve& curve);
/// Rebuilds a curve from its CSV; nuisance minimizers are not stored and come back empty.
ProfileCurve read_profile_csv(const std::filesystem::path& path, const InterestPartition& partition,
                              ParameterVector mgle, double mgle_loss);

/// Columns delta, coverage.
void write_coverage_curve_csv(const std::filesystem::path& path, const CalibrationResult& result);

/// Columns theta_<name>..., alpha, observed_coverage, B_effective; one row per (report, alpha).
void write_coverage_report_csv(const std::filesystem::path& path, std::span<const CoverageReport> reports,
                               std::span<const std::string> parameter_names);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace glp::io
