#pragma once

// Flat `key = value` experiment files. Units live in the key names
// (rc_m, v_mps, mission_time_s, ...). Blank lines and `#` comments are
// ignored; unknown keys are errors so typos do not silently fall back to
// defaults.
//
//   polygon_m = 0 0, 2000 0, 2000 2000, 0 2000
//   proportions = 0.5, 0.5
//   densities_per_km2 = 1, 2, 5, 10, 20, 50

#include <charconv>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dronebs/simulation.hpp"

namespace dronebs {

struct ExperimentConfig {
  SimConfig sim;
  std::vector<double> densities_per_km2{1, 2, 5, 10, 20, 50};
  int replications = 30;
  /// Worker threads for comparisons; 0 uses the hardware concurrency.
  unsigned threads = 0;
};

namespace config_detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(key) + ": not a number: '" + std::string(text) + "'");
  }
  return v;
}

template <class Int>
Int parse_int(std::string_view key, std::string_view text) {
  text = trim(text);
  Int v{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(key) + ": not an integer: '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (auto item : split(text, ',')) out.push_back(parse_double(key, item));
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw ConfigError(std::string(key) + ": expected true or false");
}

inline ConvexPolygon parse_polygon(std::string_view key, std::string_view text) {
  std::vector<Vec2> ring;
  for (auto item : split(text, ',')) {
    std::istringstream in{std::string(item)};
    std::string xs, ys, extra;
    if (!(in >> xs >> ys) || (in >> extra)) {
      throw ConfigError(std::string(key) + ": each vertex needs exactly 'x y'");
    }
    ring.push_back({parse_double(key, xs), parse_double(key, ys)});
  }
  try {
    return ConvexPolygon(std::move(ring));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string(key) + ": " + e.what());
  }
}

}  // namespace config_detail

inline EstimateMode parse_estimate_mode(std::string_view text) {
  if (text == "abstract") return EstimateMode::abstract_disk;
  if (text == "tdoa") return EstimateMode::tdoa;
  throw ConfigError("estimate_mode: expected abstract or tdoa");
}

inline Algorithm parse_algorithm(std::string_view text) {
  if (text == "proposed") return Algorithm::proposed;
  if (text == "random_search") return Algorithm::random_search;
  throw ConfigError("algorithm: expected proposed or random_search");
}

/// Applies one key/value pair on top of `cfg`.
inline void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  using namespace config_detail;
  SimConfig& s = cfg.sim;
  value = trim(value);
  if (key == "polygon_m") {
    s.polygon = parse_polygon(key, value);
  } else if (key == "m") {
    s.m = parse_int<int>(key, value);
  } else if (key == "d_m") {
    s.d = parse_double(key, value);
  } else if (key == "rc_m") {
    s.rc = parse_double(key, value);
  } else if (key == "v_mps") {
    s.v = parse_double(key, value);
  } else if (key == "mission_time_s") {
    s.mission_time = parse_double(key, value);
  } else if (key == "r_e_m") {
    s.r_e = parse_double(key, value);
  } else if (key == "lambda_u_per_km2") {
    s.user_density = parse_double(key, value) * 1e-6;
  } else if (key == "r_s_m") {
    s.r_s = parse_double(key, value);
  } else if (key == "d_safe_m") {
    s.d_safe = parse_double(key, value);
  } else if (key == "proportions") {
    s.proportions = parse_list(key, value);
  } else if (key == "seed") {
    s.seed = parse_int<std::uint64_t>(key, value);
  } else if (key == "tick_dt_s") {
    s.tick_dt = parse_double(key, value);
  } else if (key == "estimate_mode") {
    s.estimate_mode = parse_estimate_mode(value);
  } else if (key == "algorithm") {
    s.algorithm = parse_algorithm(value);
  } else if (key == "sigma_m") {
    s.tdoa_sigma = parse_double(key, value);
  } else if (key == "avoidance") {
    s.avoidance = parse_bool(key, value);
  } else if (key == "target_margin_m") {
    s.target_margin = parse_double(key, value);
  } else if (key == "control_limit_m") {
    s.control_limit = parse_double(key, value);
  } else if (key == "densities_per_km2") {
    cfg.densities_per_km2 = parse_list(key, value);
  } else if (key == "replications") {
    cfg.replications = parse_int<int>(key, value);
  } else if (key == "threads") {
    cfg.threads = parse_int<unsigned>(key, value);
  } else {
    throw ConfigError("unknown key '" + std::string(key) + "'");
  }
}

/// Reads settings from `in` on top of `base`.
inline ExperimentConfig parse_config(std::istream& in, ExperimentConfig base = {}) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = config_detail::trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    }
    apply_setting(base, config_detail::trim(view.substr(0, eq)), view.substr(eq + 1));
  }
  return base;
}

inline void validate(const ExperimentConfig& cfg) {
  validate(cfg.sim);
  if (cfg.replications < 1) throw ConfigError("replications must be >= 1");
  if (cfg.densities_per_km2.empty()) throw ConfigError("densities_per_km2 must not be empty");
  for (double d : cfg.densities_per_km2) {
    if (!(d >= 0.0)) throw ConfigError("densities_per_km2 entries must be >= 0");
  }
}

}  // namespace dronebs
