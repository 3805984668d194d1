#pragma once

#include <crtc/trainer.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace crtc {

struct ReportFormat {
  bool wall_time = true;   // off for byte-comparisons between runs
  bool assignments = true;
};

// Plain structured text: [section] headers, `key = value` lines and CSV blocks.
std::string format_report(const RunReport& report, const ReportFormat& format = {});

// report.txt, assignments.txt, q.csv, fused.csv, alpha.csv and one
// trace_<name>.csv per loss trace. Creates `dir` when needed.
void write_run_outputs(const std::filesystem::path& dir, const RunReport& report, const ReportFormat& format = {});

// The [config] section of a written report.
std::vector<std::pair<std::string, std::string>> read_report_config(const std::filesystem::path& path);

}  // namespace crtc
