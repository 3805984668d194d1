#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crtc::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;
inline constexpr int kInputError = 2;
inline constexpr int kNumericError = 3;

// Runs one command line (without the program name).
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crtc::cli
