#include "cca/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

namespace cca {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

std::string strip_quotes(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    return s.substr(1, s.size() - 2);
  }
  return s;
}

long long parse_integer(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  long long out = 0;
  try {
    out = std::stoll(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("value for '" + key + "' is not an integer: '" + value + "'");
  }
  if (consumed != value.size()) {
    throw ConfigError("value for '" + key + "' is not an integer: '" + value + "'");
  }
  return out;
}

Index parse_index(const std::string& key, const std::string& value) {
  const long long v = parse_integer(key, value);
  if (v < 0) {
    throw ConfigError("value for '" + key + "' must be nonnegative");
  }
  return static_cast<Index>(v);
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  const long long v = parse_integer(key, value);
  if (v < 0) {
    throw ConfigError("value for '" + key + "' must be nonnegative");
  }
  return static_cast<std::uint64_t>(v);
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t consumed = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &consumed);
  } catch (const std::exception&) {
    throw ConfigError("value for '" + key + "' is not a number: '" + value + "'");
  }
  if (consumed != value.size()) {
    throw ConfigError("value for '" + key + "' is not a number: '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("value for '" + key + "' must be true/false/1/0, got '" +
                    value + "'");
}

std::vector<double> parse_real_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) {
      throw ConfigError("value for '" + key + "' has an empty list entry");
    }
    out.push_back(parse_real(key, t));
  }
  if (out.empty()) {
    throw ConfigError("value for '" + key + "' must be a nonempty list");
  }
  return out;
}

}  // namespace

void apply_override(RunConfig& config, const std::string& key,
                    const std::string& raw_value) {
  const std::string value = strip_quotes(trim(raw_value));

  if (key == "data.source") config.source = value;
  else if (key == "data.d_x") config.d_x = parse_index(key, value);
  else if (key == "data.d_y") config.d_y = parse_index(key, value);
  else if (key == "data.latent_dim") config.latent_dim = parse_index(key, value);
  else if (key == "data.lambda") config.lambda = parse_real_list(key, value);
  else if (key == "data.noise_sigma") config.noise_sigma = parse_real(key, value);
  else if (key == "data.samples") config.samples = parse_index(key, value);
  else if (key == "data.path_x") config.path_x = value;
  else if (key == "data.path_y") config.path_y = value;
  else if (key == "data.path") config.path = value;
  else if (key == "data.split_column") config.split_column = parse_index(key, value);
  else if (key == "data.header") config.header = parse_bool(key, value);
  else if (key == "data.seed") config.seed = parse_u64(key, value);
  else if (key == "data.centering") config.centering = value;
  else if (key == "optimizer.k") config.k = parse_index(key, value);
  else if (key == "optimizer.gamma0") config.gamma0 = parse_real(key, value);
  else if (key == "optimizer.schedule") config.schedule = value;
  else if (key == "optimizer.block_size") config.block_size = parse_index(key, value);
  else if (key == "optimizer.passes") config.passes = parse_index(key, value);
  else if (key == "optimizer.parallel") config.parallel = parse_bool(key, value);
  else if (key == "optimizer.ridge") config.ridge = parse_real(key, value);
  else if (key == "optimizer.projection") config.projection = value;
  else if (key == "optimizer.running_cov") config.running_cov = parse_bool(key, value);
  else if (key == "output.dir") config.dir = value;
  else if (key == "output.eval_every") config.eval_every = parse_index(key, value);
  else if (key == "output.checkpoint_in") config.checkpoint_in = value;
  else if (key == "output.checkpoint_out") config.checkpoint_out = value;
  else throw ConfigError("unknown config key '" + key + "'");
}

RunConfig load_config(const std::string& path) {
  RunConfig config;
  if (path.empty()) {
    return config;
  }
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file '" + path + "'");
  }

  std::string section;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        throw ConfigError("malformed section header at " + path + ":" +
                          std::to_string(line_number));
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("expected 'key = value' at " + path + ":" +
                        std::to_string(line_number));
    }
    std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("empty key at " + path + ":" + std::to_string(line_number));
    }
    // Keys inside a [section] get the section prefix; fully dotted keys are
    // also accepted at top level.
    if (!section.empty() && key.find('.') == std::string::npos) {
      key = section + "." + key;
    }
    try {
      apply_override(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string(e.what()) + " (at " + path + ":" +
                        std::to_string(line_number) + ")");
    }
  }
  return config;
}

void validate_config(const RunConfig& c) {
  if (c.source == "synthetic") {
    if (c.d_x < 1 || c.d_y < 1) {
      throw ConfigError("data.d_x and data.d_y must be at least 1");
    }
    if (c.latent_dim < 1 || c.latent_dim > std::min(c.d_x, c.d_y)) {
      throw ConfigError("data.latent_dim must be in [1, min(d_x, d_y)]");
    }
    if (static_cast<Index>(c.lambda.size()) != c.latent_dim) {
      throw ConfigError("data.lambda must list exactly latent_dim values");
    }
    if (c.noise_sigma < 0.0) {
      throw ConfigError("data.noise_sigma must be nonnegative");
    }
    for (double v : c.lambda) {
      if (!(v > c.noise_sigma * c.noise_sigma)) {
        throw ConfigError("every data.lambda entry must exceed noise_sigma^2");
      }
    }
    if (c.samples < 2) {
      throw ConfigError("data.samples must be at least 2");
    }
    if (c.k > std::min(c.d_x, c.d_y)) {
      throw ConfigError("optimizer.k must be in [1, min(d_x, d_y)]");
    }
  } else if (c.source == "files") {
    if (c.path_x.empty() || c.path_y.empty()) {
      throw ConfigError("data.path_x and data.path_y are required when "
                        "data.source = files");
    }
  } else if (c.source == "split") {
    if (c.path.empty()) {
      throw ConfigError("data.path is required when data.source = split");
    }
    if (c.split_column < 1) {
      throw ConfigError("data.split_column must be at least 1 when "
                        "data.source = split");
    }
  } else {
    throw ConfigError("data.source must be 'synthetic', 'files' or 'split', "
                      "got '" + c.source + "'");
  }

  if (c.centering != "twopass" && c.centering != "none" &&
      c.centering != "streaming") {
    throw ConfigError("data.centering must be 'none', 'twopass' or "
                      "'streaming'");
  }
  if (c.k < 1) {
    throw ConfigError("optimizer.k must be at least 1");
  }
  if (!(c.gamma0 > 0.0)) {
    throw ConfigError("optimizer.gamma0 must be positive");
  }
  parse_schedule(c.schedule);
  parse_projection(c.projection);
  if (c.block_size < 1) {
    throw ConfigError("optimizer.block_size must be at least 1");
  }
  if (c.passes < 1) {
    throw ConfigError("optimizer.passes must be at least 1");
  }
  if (c.ridge < 0.0) {
    throw ConfigError("optimizer.ridge must be nonnegative");
  }
  if (c.eval_every < 1) {
    throw ConfigError("output.eval_every must be at least 1");
  }
}

Schedule parse_schedule(const std::string& name) {
  if (name == "inverse_t") return Schedule::InverseT;
  if (name == "constant") return Schedule::Constant;
  throw ConfigError("optimizer.schedule must be 'inverse_t' or 'constant', got '" +
                    name + "'");
}

ProjectionVariant parse_projection(const std::string& name) {
  if (name == "standard") return ProjectionVariant::Standard;
  if (name == "orthogonal") return ProjectionVariant::Orthogonal;
  throw ConfigError("optimizer.projection must be 'standard' or 'orthogonal', "
                    "got '" + name + "'");
}

}  // namespace cca
