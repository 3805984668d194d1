#pragma once

#include <crtc/trainer.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace crtc {

struct ConfigKey {
  const char* name;
  const char* help;  // includes the default
};

// Flat key-value configuration shared by the config file and CLI flags.
struct CliConfig {
  std::vector<std::string> views;
  std::string mask;
  std::string labels;
  int clusters = 0;  // 0 infers the count from labels
  std::string out = "crtc_out";
  std::string variant = "full";
  std::string protocol = "auto";  // auto | paired | missing
  std::vector<double> p;          // masking rates; more than one runs a sweep
  std::vector<Index> k;           // KNN sizes; more than one runs a sweep
  TrainConfig train;

  static const std::vector<ConfigKey>& keys();

  // Assigns one key from its textual form. Throws ConfigError on unknown
  // keys or unparsable values.
  void set(const std::string& key, const std::string& value);

  // Reads `key = value` lines; `#` starts a comment. Errors name the line.
  void load_file(const std::filesystem::path& path);
  void load_text(const std::string& text, const std::string& origin = "<config>");

  MaskProtocol mask_protocol(double p, Index n_views) const;
  // Training config for one sweep point.
  TrainConfig train_config(std::optional<double> p, std::optional<Index> k, Index n_views) const;
  // Path and selection keys, as echoed in a report next to describe(train).
  std::vector<std::pair<std::string, std::string>> describe_inputs() const;
};

}  // namespace crtc
