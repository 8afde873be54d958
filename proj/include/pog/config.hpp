#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pog/error.hpp"
#include "pog/forest.hpp"
#include "pog/grid.hpp"
#include "pog/hypotheses.hpp"
#include "pog/io.hpp"
#include "pog/quantization.hpp"

namespace pog {

/// Pipeline configuration; the config file is the single source of truth,
/// individual CLI flags override fields. The worker count is runtime-only and
/// never hashed so that job parallelism cannot change any artifact.
struct RunConfig {
  GridSpec grid;  // 80 x 80 cells of 0.5 m
  std::vector<double> instants = {0.5, 1.0, 2.0};
  HypothesisConfig hypotheses;
  ForestConfig forest;
  QuantizationSet qset;
  double train_fraction = 2.0 / 3.0;
  std::uint64_t seed = 0;
  unsigned jobs = 0;  // 0: all logical cores
};

inline void validate_config(const RunConfig& cfg) {
  if (cfg.grid.cols < 1 || cfg.grid.rows < 1 || cfg.grid.cell_length <= 0.0 ||
      cfg.grid.cell_width <= 0.0) {
    throw ConfigError("config: invalid grid");
  }
  if (cfg.instants.empty()) throw ConfigError("config: no prediction instances");
  double prev = 0.0;
  for (const double t : cfg.instants) {
    if (t <= prev) throw ConfigError("config: instances must be positive and increasing");
    prev = t;
  }
  if (cfg.hypotheses.horizon + 1e-9 < cfg.instants.back()) {
    throw ConfigError("config: horizon shorter than the last prediction instance");
  }
  if (cfg.hypotheses.n_lon < 1 || cfg.hypotheses.n_lon % 2 == 0 || cfg.hypotheses.n_lat < 1 ||
      cfg.hypotheses.n_lat % 2 == 0) {
    throw ConfigError("config: n_lon and n_lat must be odd and >= 1");
  }
  if (cfg.hypotheses.a_decel_max <= 0.0 || cfg.hypotheses.a_accel_max <= 0.0 ||
      cfg.hypotheses.a_lat_max <= 0.0) {
    throw ConfigError("config: acceleration limits must be positive");
  }
  if (cfg.hypotheses.dt <= 0.0) throw ConfigError("config: dt must be positive");
  if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0)) {
    throw ConfigError("config: train_fraction must lie in (0, 1)");
  }
  if (cfg.forest.n_trees < 1 || cfg.forest.min_leaf < 1 || cfg.forest.m_try < 0) {
    throw ConfigError("config: invalid forest settings");
  }
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
  using nlohmann::json;
  json j;
  j["grid"] = {{"origin_x", cfg.grid.origin_x},     {"origin_y", cfg.grid.origin_y},
               {"cell_length", cfg.grid.cell_length}, {"cell_width", cfg.grid.cell_width},
               {"cols", cfg.grid.cols},              {"rows", cfg.grid.rows}};
  j["instants"] = cfg.instants;
  const auto& h = cfg.hypotheses;
  j["hypotheses"] = {{"n_lon", h.n_lon},
                     {"n_lat", h.n_lat},
                     {"a_decel_max", h.a_decel_max},
                     {"a_accel_max", h.a_accel_max},
                     {"a_lat_max", h.a_lat_max},
                     {"horizon", h.horizon},
                     {"dt", h.dt},
                     {"rules",
                      {{"base_follow", h.rules.base_follow},
                       {"base_straight", h.rules.base_straight},
                       {"base_change", h.rules.base_change},
                       {"base_turn", h.rules.base_turn},
                       {"turn_speed_ref", h.rules.turn_speed_ref},
                       {"turn_speed_gain", h.rules.turn_speed_gain},
                       {"turn_decel_gain", h.rules.turn_decel_gain},
                       {"steady_accel_band", h.rules.steady_accel_band},
                       {"steady_accel_gain", h.rules.steady_accel_gain}}}};
  j["forest"] = {{"n_trees", cfg.forest.n_trees},
                 {"m_try", cfg.forest.m_try},
                 {"min_leaf", cfg.forest.min_leaf}};
  j["train_fraction"] = cfg.train_fraction;
  j["seed"] = cfg.seed;
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j, const std::string& where) {
  using nlohmann::json;
  io_detail::require_keys(
      j, {"grid", "instants", "hypotheses", "forest", "train_fraction", "seed"}, where);
  RunConfig cfg;
  if (j.contains("grid")) {
    const json& g = j["grid"];
    io_detail::require_keys(
        g, {"origin_x", "origin_y", "cell_length", "cell_width", "cols", "rows"},
        where + ".grid");
    cfg.grid.origin_x = g.value("origin_x", cfg.grid.origin_x);
    cfg.grid.origin_y = g.value("origin_y", cfg.grid.origin_y);
    cfg.grid.cell_length = g.value("cell_length", cfg.grid.cell_length);
    cfg.grid.cell_width = g.value("cell_width", cfg.grid.cell_width);
    cfg.grid.cols = g.value("cols", cfg.grid.cols);
    cfg.grid.rows = g.value("rows", cfg.grid.rows);
  }
  if (j.contains("instants")) {
    cfg.instants = j["instants"].get<std::vector<double>>();
  }
  if (j.contains("hypotheses")) {
    const json& h = j["hypotheses"];
    io_detail::require_keys(h,
                            {"n_lon", "n_lat", "a_decel_max", "a_accel_max", "a_lat_max",
                             "horizon", "dt", "rules"},
                            where + ".hypotheses");
    cfg.hypotheses.n_lon = h.value("n_lon", cfg.hypotheses.n_lon);
    cfg.hypotheses.n_lat = h.value("n_lat", cfg.hypotheses.n_lat);
    cfg.hypotheses.a_decel_max = h.value("a_decel_max", cfg.hypotheses.a_decel_max);
    cfg.hypotheses.a_accel_max = h.value("a_accel_max", cfg.hypotheses.a_accel_max);
    cfg.hypotheses.a_lat_max = h.value("a_lat_max", cfg.hypotheses.a_lat_max);
    cfg.hypotheses.horizon = h.value("horizon", cfg.hypotheses.horizon);
    cfg.hypotheses.dt = h.value("dt", cfg.hypotheses.dt);
    if (h.contains("rules")) {
      const json& r = h["rules"];
      io_detail::require_keys(r,
                              {"base_follow", "base_straight", "base_change", "base_turn",
                               "turn_speed_ref", "turn_speed_gain", "turn_decel_gain",
                               "steady_accel_band", "steady_accel_gain"},
                              where + ".hypotheses.rules");
      auto& rules = cfg.hypotheses.rules;
      rules.base_follow = r.value("base_follow", rules.base_follow);
      rules.base_straight = r.value("base_straight", rules.base_straight);
      rules.base_change = r.value("base_change", rules.base_change);
      rules.base_turn = r.value("base_turn", rules.base_turn);
      rules.turn_speed_ref = r.value("turn_speed_ref", rules.turn_speed_ref);
      rules.turn_speed_gain = r.value("turn_speed_gain", rules.turn_speed_gain);
      rules.turn_decel_gain = r.value("turn_decel_gain", rules.turn_decel_gain);
      rules.steady_accel_band = r.value("steady_accel_band", rules.steady_accel_band);
      rules.steady_accel_gain = r.value("steady_accel_gain", rules.steady_accel_gain);
    }
  }
  if (j.contains("forest")) {
    const json& f = j["forest"];
    io_detail::require_keys(f, {"n_trees", "m_try", "min_leaf"}, where + ".forest");
    cfg.forest.n_trees = f.value("n_trees", cfg.forest.n_trees);
    cfg.forest.m_try = f.value("m_try", cfg.forest.m_try);
    cfg.forest.min_leaf = f.value("min_leaf", cfg.forest.min_leaf);
  }
  cfg.train_fraction = j.value("train_fraction", cfg.train_fraction);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.forest.n_classes = cfg.qset.size();
  validate_config(cfg);
  return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  return config_from_json(io_detail::load_json_file(path), path.string());
}

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Stable hash of the canonical config serialization (jobs excluded).
inline std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a(config_to_json(cfg).dump());
}

}  // namespace pog
