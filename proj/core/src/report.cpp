#include <crtc/report.hpp>

#include <crtc/csv.hpp>
#include <crtc/error.hpp>

#include <fstream>
#include <sstream>

namespace crtc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(DataErrc::Io, "cannot write " + path.string());
  out << text;
  if (!out) throw DataError(DataErrc::Io, "failed writing " + path.string());
}

std::string trace_csv(const std::vector<double>& values) {
  std::string out = "epoch,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) out += std::to_string(i) + "," + csv::format_double(values[i]) + "\n";
  return out;
}

}  // namespace

std::string format_report(const RunReport& report, const ReportFormat& format) {
  std::ostringstream out;
  out << "[config]\n";
  for (const auto& [key, value] : report.config) out << key << " = " << value << "\n";

  out << "\n[result]\n";
  out << "variant = " << to_string(report.variant) << "\n";
  out << "stop_reason = " << to_string(report.stop_reason) << "\n";
  out << "iterations = " << report.iterations << "\n";
  if (format.wall_time) out << "wall_time_s = " << csv::format_double(report.wall_time_s) << "\n";
  if (report.scores) {
    out << "acc = " << csv::format_double(report.scores->acc) << "\n";
    out << "nmi = " << csv::format_double(report.scores->nmi) << "\n";
    out << "ari = " << csv::format_double(report.scores->ari) << "\n";
  }

  if (!report.extras.empty()) {
    out << "\n[extras]\n";
    for (const auto& [key, value] : report.extras) out << key << " = " << csv::format_double(value) << "\n";
  }

  out << "\n[phases]\n";
  for (const auto& phase : report.phases) out << phase << "\n";

  for (const auto& [name, values] : report.traces) out << "\n[trace " << name << "]\n" << trace_csv(values);

  if (format.assignments) {
    out << "\n[assignments]\n";
    for (int r : report.assignments) out << r << "\n";
  }
  return out.str();
}

void write_run_outputs(const std::filesystem::path& dir, const RunReport& report, const ReportFormat& format) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(DataErrc::Io, "cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "report.txt", format_report(report, format));
  csv::write_labels(dir / "assignments.txt", report.assignments);
  if (report.q.size() > 0) csv::write_matrix(dir / "q.csv", report.q);
  if (report.fused.size() > 0) csv::write_matrix(dir / "fused.csv", report.fused);
  if (report.alpha.size() > 0) csv::write_matrix(dir / "alpha.csv", report.alpha);
  for (const auto& [name, values] : report.traces) write_text(dir / ("trace_" + name + ".csv"), trace_csv(values));
}

std::vector<std::pair<std::string, std::string>> read_report_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrc::Io, "cannot open " + path.string());
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  bool in_config = false;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      in_config = line == "[config]";
      continue;
    }
    if (!in_config) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

}  // namespace crtc
