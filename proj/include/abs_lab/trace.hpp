#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "abs_lab/scenario.hpp"

namespace abs_lab {

/// Column names of the per-step trace, in file order.
const std::vector<std::string>& trace_header();
const std::vector<std::string>& metrics_header();

std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& name);
std::filesystem::path metrics_path(const std::filesystem::path& dir, const std::string& name);

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);
void write_metrics_csv(const std::filesystem::path& path, const std::vector<RunMetrics>& rows);

/// Parses a trace written by write_trace_csv. Throws std::runtime_error on a
/// header mismatch or malformed row.
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

}  // namespace abs_lab
