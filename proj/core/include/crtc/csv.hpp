#pragma once

#include <crtc/matrix.hpp>

#include <filesystem>
#include <string>

namespace crtc::csv {

// Header-free comma separated matrix. Every row must have the same number of
// cells. Throws DataError(NonNumeric) with a line number on a bad cell.
Matrix read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Matrix& m);

// One integer per line.
Labels read_labels(const std::filesystem::path& path);
void write_labels(const std::filesystem::path& path, const Labels& labels);

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

}  // namespace crtc::csv
