#include <crtc/config.hpp>

#include <crtc/csv.hpp>
#include <crtc/error.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace crtc {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(value);
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": expected an integer, got '" + value + "'");
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  if (value == "inf") return std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) throw ConfigError(key + ": expected a number, got '" + value + "'");
  return out;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ",") + s;
  return out;
}

}  // namespace

const std::vector<ConfigKey>& CliConfig::keys() {
  static const std::vector<ConfigKey> keys{
      {"views", "comma-separated view CSV paths"},
      {"mask", "N x V mask CSV, 1 = missing (default: none)"},
      {"labels", "ground-truth labels, one per line (default: none)"},
      {"clusters", "cluster count (default: 0, infer from labels)"},
      {"out", "output directory (default: crtc_out)"},
      {"variant", "full|bsv|concat|recbsv|recconcat|avemfc|crtc_wjd|crtc_waf (default: full)"},
      {"protocol", "masking applied when p is set: auto|paired|missing; auto = paired for two views (default: auto)"},
      {"p", "masking rate(s), comma-separated or repeated; unset = train on the data as given"},
      {"seed", "seed for masking, init and k-means (default: 0)"},
      {"k", "KNN size(s); 0 = 10 for two views, else 5 (default: 0)"},
      {"embed_dim", "embedding width d; 0 = 10*ceil(log2 C) capped at 64 (default: 0)"},
      {"hidden", "encoder hidden widths, comma-separated (default: 500)"},
      {"activation", "completion activation identity|relu|tanh (default: identity)"},
      {"lr_pretrain", "Adam rate for pretraining (default: 0.001)"},
      {"lr_joint", "Adam rate for the joint loop (default: 0.001)"},
      {"epochs_cr", "completion pretraining epochs (default: 300)"},
      {"epochs_mr", "fusion pretraining epochs (default: 500)"},
      {"max_iter", "joint loop epochs (default: 200)"},
      {"update_interval", "epochs between target refreshes (default: 5)"},
      {"delta", "stop when at most this fraction of labels changes (default: 0.001)"},
      {"lambda", "weight of the clustering loss in the joint fusion update; inf drops reconstruction (default: 0.1)"},
      {"kmeans_restarts", "k-means++ restarts (default: 20)"},
  };
  return keys;
}

void CliConfig::set(const std::string& key, const std::string& raw) {
  const std::string value = trim(raw);
  if (key == "views") {
    views = split_list(value);
  } else if (key == "mask") {
    mask = value;
  } else if (key == "labels") {
    labels = value;
  } else if (key == "clusters") {
    clusters = parse_integer<int>(key, value);
    if (clusters < 0) throw ConfigError("clusters must be non-negative");
  } else if (key == "out") {
    out = value;
  } else if (key == "variant") {
    variant_from_string(value);
    variant = value;
  } else if (key == "protocol") {
    if (value != "auto" && value != "paired" && value != "missing")
      throw ConfigError("protocol must be auto, paired or missing, got '" + value + "'");
    protocol = value;
  } else if (key == "p") {
    p.clear();
    for (const auto& item : split_list(value)) {
      const double rate = parse_double(key, item);
      if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("p must lie in [0, 1), got '" + item + "'");
      p.push_back(rate);
    }
  } else if (key == "seed") {
    train.seed = parse_integer<std::uint64_t>(key, value);
  } else if (key == "k") {
    k.clear();
    for (const auto& item : split_list(value)) k.push_back(parse_integer<Index>(key, item));
  } else if (key == "embed_dim") {
    train.embed_dim = parse_integer<Index>(key, value);
  } else if (key == "hidden") {
    train.hidden.clear();
    for (const auto& item : split_list(value)) train.hidden.push_back(parse_integer<Index>(key, item));
  } else if (key == "activation") {
    train.activation = diff::activation_from_string(value);
  } else if (key == "lr_pretrain") {
    train.lr_pretrain = parse_double(key, value);
  } else if (key == "lr_joint") {
    train.lr_joint = parse_double(key, value);
  } else if (key == "epochs_cr") {
    train.epochs_cr = parse_integer<int>(key, value);
  } else if (key == "epochs_mr") {
    train.epochs_mr = parse_integer<int>(key, value);
  } else if (key == "max_iter") {
    train.max_iter = parse_integer<int>(key, value);
  } else if (key == "update_interval") {
    train.update_interval = parse_integer<int>(key, value);
  } else if (key == "delta") {
    train.delta = parse_double(key, value);
  } else if (key == "lambda") {
    const double lambda = parse_double(key, value);
    train.joint_reconstruction = !std::isinf(lambda);
    if (train.joint_reconstruction) train.lambda = lambda;
  } else if (key == "kmeans_restarts") {
    train.kmeans_restarts = parse_integer<int>(key, value);
  } else {
    throw ConfigError("unknown key '" + key + "'");
  }
}

void CliConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = origin + ":" + std::to_string(number) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw ConfigError(where + e.what());
    }
  }
}

void CliConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  load_text(text.str(), path.string());
}

MaskProtocol CliConfig::mask_protocol(double rate, Index n_views) const {
  MaskProtocol m;
  const bool paired = protocol == "paired" || (protocol == "auto" && n_views == 2);
  m.kind = paired ? MaskProtocol::Kind::PairedRate : MaskProtocol::Kind::MissingRate;
  m.p = rate;
  m.seed = train.seed;
  return m;
}

TrainConfig CliConfig::train_config(std::optional<double> rate, std::optional<Index> knn, Index n_views) const {
  TrainConfig config = train;
  if (knn) config.k = *knn;
  if (rate) config.mask = mask_protocol(*rate, n_views);
  return config;
}

std::vector<std::pair<std::string, std::string>> CliConfig::describe_inputs() const {
  return {
      {"views", join(views)},
      {"mask", mask},
      {"labels", labels},
      {"clusters", std::to_string(clusters)},
      {"variant", variant},
  };
}

}  // namespace crtc
