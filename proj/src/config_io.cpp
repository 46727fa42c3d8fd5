#include "adaloc/config_io.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "adaloc/errors.hpp"

namespace adaloc {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" +
                      value + "'");
  }
  return out;
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double out = std::stod(value, &pos);
    if (pos != value.size()) {
      throw std::invalid_argument(value);
    }
    return out;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  }
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

}  // namespace

std::string to_string(FilterVariant v) {
  return v == FilterVariant::stochastic ? "stochastic" : "deterministic";
}

std::string to_string(Taper t) {
  return t == Taper::gaspari_cohn ? "gaspari_cohn" : "gaussian";
}

std::string to_string(PoolMode m) {
  return m == PoolMode::scalar_in_time ? "scalar_in_time"
                                       : "vector_in_time_space";
}

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "model.k") {
    cfg.model.k = static_cast<int>(parse_int(key, value));
  } else if (key == "model.f") {
    cfg.model.f = parse_double(key, value);
  } else if (key == "model.dt") {
    cfg.model.dt = parse_double(key, value);
  } else if (key == "model.steps_per_cycle") {
    cfg.steps_per_cycle = parse_int(key, value);
  } else if (key == "model.spin_up_steps") {
    cfg.spin_up_steps = parse_int(key, value);
  } else if (key == "filter.n_ens") {
    cfg.filter.n_ens = static_cast<int>(parse_int(key, value));
  } else if (key == "filter.inflation") {
    cfg.filter.inflation = parse_double(key, value);
  } else if (key == "filter.variant") {
    if (value == "stochastic") {
      cfg.filter.variant = FilterVariant::stochastic;
    } else if (value == "deterministic") {
      cfg.filter.variant = FilterVariant::deterministic;
    } else {
      throw ConfigError(
          "filter.variant: expected 'stochastic' or 'deterministic', got '" +
          value + "'");
    }
  } else if (key == "localization.taper") {
    if (value == "gaspari_cohn") {
      cfg.taper = Taper::gaspari_cohn;
    } else if (value == "gaussian") {
      cfg.taper = Taper::gaussian;
    } else {
      throw ConfigError(
          "localization.taper: expected 'gaspari_cohn' or 'gaussian', got '" +
          value + "'");
    }
  } else if (key == "localization.mode") {
    if (value == "scalar_in_time") {
      cfg.mode = PoolMode::scalar_in_time;
    } else if (value == "vector_in_time_space") {
      cfg.mode = PoolMode::vector_in_time_space;
    } else {
      throw ConfigError(
          "localization.mode: expected 'scalar_in_time' or "
          "'vector_in_time_space', got '" +
          value + "'");
    }
  } else if (key == "localization.fixed_radius") {
    cfg.fixed_radius = parse_double(key, value);
  } else if (key == "localization.pool_min") {
    cfg.pool_min = static_cast<int>(parse_int(key, value));
  } else if (key == "localization.pool_max") {
    cfg.pool_max = static_cast<int>(parse_int(key, value));
  } else if (key == "localization.n_trials") {
    cfg.n_trials = static_cast<int>(parse_int(key, value));
  } else if (key == "criterion.w1") {
    cfg.weights.w1 = parse_double(key, value);
  } else if (key == "criterion.w2") {
    cfg.weights.w2 = parse_double(key, value);
  } else if (key == "experiment.n_cycles") {
    cfg.n_cycles = static_cast<int>(parse_int(key, value));
  } else if (key == "experiment.train_fraction") {
    cfg.train_fraction = parse_double(key, value);
  } else if (key == "experiment.obs_noise_std") {
    cfg.obs_noise_std = parse_double(key, value);
  } else if (key == "experiment.background_frac") {
    cfg.background_frac = parse_double(key, value);
  } else if (key == "experiment.seed") {
    cfg.seed = parse_uint(key, value);
    cfg.filter.rng_seed = cfg.seed;
  } else if (key == "experiment.out_dir") {
    cfg.out_dir = unquote(value);
  } else if (key == "features.stride") {
    cfg.feature_stride = static_cast<int>(parse_int(key, value));
  } else if (key == "features.corr_lag") {
    cfg.corr_lag = static_cast<int>(parse_int(key, value));
  } else if (key == "forest.n_trees") {
    cfg.forest.n_trees = static_cast<int>(parse_int(key, value));
  } else if (key == "forest.max_depth") {
    cfg.forest.max_depth = static_cast<int>(parse_int(key, value));
  } else if (key == "forest.min_samples_leaf") {
    cfg.forest.min_samples_leaf = static_cast<int>(parse_int(key, value));
  } else if (key == "forest.n_features_per_split") {
    cfg.forest.n_features_per_split = static_cast<int>(parse_int(key, value));
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

namespace {

ExperimentConfig config_from_json_object(const nlohmann::json& obj) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : obj.items()) {
    std::string text;
    if (value.is_string()) {
      text = value.get<std::string>();
    } else {
      text = value.dump();
    }
    apply_config_entry(cfg, key, text);
  }
  cfg.validate();
  return cfg;
}

}  // namespace

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config file '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  const std::size_t first =
      text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("malformed JSON config: " + std::string(e.what()));
    }
    if (j.contains("config") && j["config"].is_object()) {
      return config_from_json_object(j["config"]);
    }
    if (!j.is_object()) {
      throw ConfigError("JSON config must be an object");
    }
    return config_from_json_object(j);
  }

  ExperimentConfig cfg;
  std::set<std::string> seen;
  std::istringstream lines(text);
  std::string line;
  int line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key or value");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": duplicate config key '" + key + "'");
    }
    try {
      apply_config_entry(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  cfg.validate();
  return cfg;
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["model.k"] = cfg.model.k;
  j["model.f"] = cfg.model.f;
  j["model.dt"] = cfg.model.dt;
  j["model.steps_per_cycle"] = cfg.steps_per_cycle;
  j["model.spin_up_steps"] = cfg.spin_up_steps;
  j["filter.n_ens"] = cfg.filter.n_ens;
  j["filter.inflation"] = cfg.filter.inflation;
  j["filter.variant"] = to_string(cfg.filter.variant);
  j["localization.taper"] = to_string(cfg.taper);
  j["localization.mode"] = to_string(cfg.mode);
  j["localization.fixed_radius"] = cfg.fixed_radius;
  j["localization.pool_min"] = cfg.pool_min;
  j["localization.pool_max"] = cfg.pool_max;
  j["localization.n_trials"] = cfg.n_trials;
  j["criterion.w1"] = cfg.weights.w1;
  j["criterion.w2"] = cfg.weights.w2;
  j["experiment.n_cycles"] = cfg.n_cycles;
  j["experiment.train_fraction"] = cfg.train_fraction;
  j["experiment.obs_noise_std"] = cfg.obs_noise_std;
  j["experiment.background_frac"] = cfg.background_frac;
  j["experiment.seed"] = cfg.seed;
  j["experiment.out_dir"] = cfg.out_dir;
  j["features.stride"] = cfg.feature_stride;
  j["features.corr_lag"] = cfg.corr_lag;
  j["forest.n_trees"] = cfg.forest.n_trees;
  j["forest.max_depth"] = cfg.forest.max_depth;
  j["forest.min_samples_leaf"] = cfg.forest.min_samples_leaf;
  j["forest.n_features_per_split"] = cfg.forest.n_features_per_split;
  return j;
}

}  // namespace adaloc
