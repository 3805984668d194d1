#include <crtc/csv.hpp>
#include <crtc/error.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace crtc::csv {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(DataErrc::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrc::Io, "cannot write " + path.string());
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error("format_double: conversion failed");
  return std::string(buf, ptr);
}

Matrix read_matrix(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<double> values;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = body.find(',', start);
      const auto cell = trim(body.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                : comma - start));
      double v = 0.0;
      const auto* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (cell.empty() || ec != std::errc{} || ptr != end) {
        throw DataError(DataErrc::NonNumeric,
                        where(path, line_no) + ": non-numeric cell '" + std::string(cell) + "'");
      }
      values.push_back(v);
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (rows == 0) {
      cols = count;
    } else if (count != cols) {
      throw DataError(DataErrc::ShapeMismatch, where(path, line_no) + ": expected " +
                                                   std::to_string(cols) + " cells, got " +
                                                   std::to_string(count));
    }
    ++rows;
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path);
  std::string row;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    row.clear();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) row += ',';
      row += format_double(m(r, c));
    }
    row += '\n';
    out << row;
  }
  if (!out) throw DataError(DataErrc::Io, "write failed: " + path.string());
}

Labels read_labels(const std::filesystem::path& path) {
  auto in = open_in(path);
  Labels labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty()) continue;
    int v = 0;
    const auto* end = body.data() + body.size();
    auto [ptr, ec] = std::from_chars(body.data(), end, v);
    if (ec != std::errc{} || ptr != end) {
      throw DataError(DataErrc::NonNumeric,
                      where(path, line_no) + ": not an integer '" + std::string(body) + "'");
    }
    labels.push_back(v);
  }
  return labels;
}

void write_labels(const std::filesystem::path& path, const Labels& labels) {
  auto out = open_out(path);
  for (int v : labels) out << v << '\n';
  if (!out) throw DataError(DataErrc::Io, "write failed: " + path.string());
}

}  // namespace crtc::csv
