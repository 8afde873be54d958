#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pog/error.hpp"
#include "pog/forest.hpp"
#include "pog/grid.hpp"
#include "pog/scenario.hpp"

namespace pog {

constexpr int kScenarioSchemaVersion = 1;
constexpr int kGridFormatVersion = 1;
constexpr int kModelFormatVersion = 1;

namespace io_detail {

using nlohmann::json;

inline json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  if (!out) throw Error("write failed: " + path.string());
}

inline void require_keys(const json& j, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) ok = true;
    }
    if (!ok) throw ConfigError(where + ": unknown field '" + key + "'");
  }
}

inline json points_to_json(const std::vector<Vec2>& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(json::array({p.x, p.y}));
  return arr;
}

inline std::vector<Vec2> points_from_json(const json& arr, const std::string& where) {
  if (!arr.is_array() || arr.size() < 2) throw ConfigError(where + ": need >= 2 points");
  std::vector<Vec2> pts;
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 2) throw ConfigError(where + ": point must be [x, y]");
    pts.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return pts;
}

// %.17g round-trips doubles exactly through strtod
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace io_detail

// ---------------------------------------------------------------------------
// Scenario file (JSON): road polylines, objects, sweep spec, seed
// ---------------------------------------------------------------------------

struct ScenarioFile {
  Scene scene;
  SweepSpec sweep;  // may be empty (no sweep axes)
};

inline nlohmann::json scenario_to_json(const Scene& scene, const SweepSpec& sweep) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kScenarioSchemaVersion;

  json lanes = json::array();
  for (const auto& lane : scene.road.lanes) {
    json jl;
    jl["id"] = lane.id;
    jl["width"] = lane.width;
    jl["centerline"] = io_detail::points_to_json(lane.centerline.points());
    json allowed = json::array();
    for (const auto m : lane.allowed) allowed.push_back(maneuver_name(m));
    jl["allowed"] = allowed;
    if (!lane.successors.empty()) {
      json succ;
      for (const auto& [m, id] : lane.successors) succ[maneuver_name(m)] = id;
      jl["successors"] = succ;
    }
    if (!lane.left_neighbor.empty()) jl["left_neighbor"] = lane.left_neighbor;
    if (!lane.right_neighbor.empty()) jl["right_neighbor"] = lane.right_neighbor;
    lanes.push_back(jl);
  }
  json limits = json::array();
  for (const auto& limit : scene.road.road_limits) {
    limits.push_back(io_detail::points_to_json(limit.points()));
  }
  j["road"] = {{"lanes", lanes}, {"road_limits", limits}};

  json objects = json::array();
  for (const auto& obj : scene.objects) {
    json jo;
    jo["id"] = obj.id;
    jo["kind"] = obj.kind == ObjectKind::kCar ? "car" : "bicycle";
    jo["lane"] = obj.lane_id;
    jo["state"] = {{"x", obj.state.X},     {"y", obj.state.Y},
                   {"v", obj.state.v},     {"beta", obj.state.beta},
                   {"psi", obj.state.psi}, {"psi_dot", obj.state.psi_dot},
                   {"ax", obj.state.ax},   {"ay", obj.state.ay}};
    jo["footprint"] = {{"length", obj.footprint.length}, {"width", obj.footprint.width}};
    jo["params"] = {{"m", obj.params.m},
                    {"iz", obj.params.Iz},
                    {"lf", obj.params.lf},
                    {"lr", obj.params.lr},
                    {"w", obj.params.w},
                    {"tire",
                     {{"mu_max", obj.params.tire.mu_max},
                      {"b_stiff", obj.params.tire.B_stiff},
                      {"c_shape", obj.params.tire.C_shape}}}};
    objects.push_back(jo);
  }
  j["objects"] = objects;
  if (scene.ego_id) j["ego"] = *scene.ego_id;

  if (!sweep.objects.empty()) {
    json js;
    js["seed"] = sweep.seed;
    json axes = json::array();
    for (const auto& os : sweep.objects) {
      auto axis = [](const AxisSweep& a) {
        return json{{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}};
      };
      axes.push_back(json{{"id", os.object_id},
                          {"position_m", axis(os.position_m)},
                          {"speed_kmh", axis(os.speed_kmh)},
                          {"accel_mps2", axis(os.accel_mps2)}});
    }
    js["objects"] = axes;
    j["sweep"] = js;
  }
  return j;
}

inline ScenarioFile scenario_from_json(const nlohmann::json& j, const std::string& where) {
  using nlohmann::json;
  io_detail::require_keys(j, {"schema_version", "road", "objects", "ego", "sweep"}, where);
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != kScenarioSchemaVersion) {
    throw ConfigError(where + ": unsupported schema_version");
  }

  ScenarioFile out;
  const json& road = j.at("road");
  io_detail::require_keys(road, {"lanes", "road_limits"}, where + ".road");
  for (const auto& jl : road.at("lanes")) {
    io_detail::require_keys(jl,
                            {"id", "width", "centerline", "allowed", "successors",
                             "left_neighbor", "right_neighbor"},
                            where + ".lane");
    Lane lane;
    lane.id = jl.at("id").get<std::string>();
    lane.width = jl.at("width").get<double>();
    if (lane.width <= 0.0) throw ConfigError(where + ": lane width must be positive");
    lane.centerline = Polyline(io_detail::points_from_json(jl.at("centerline"), where));
    for (const auto& m : jl.at("allowed")) {
      lane.allowed.push_back(maneuver_from_name(m.get<std::string>()));
    }
    if (jl.contains("successors")) {
      for (const auto& [m, id] : jl.at("successors").items()) {
        lane.successors[maneuver_from_name(m)] = id.get<std::string>();
      }
    }
    if (jl.contains("left_neighbor")) lane.left_neighbor = jl.at("left_neighbor");
    if (jl.contains("right_neighbor")) lane.right_neighbor = jl.at("right_neighbor");
    out.scene.road.lanes.push_back(std::move(lane));
  }
  for (const auto& jlim : road.at("road_limits")) {
    out.scene.road.road_limits.push_back(Polyline(io_detail::points_from_json(jlim, where)));
  }

  for (const auto& jo : j.at("objects")) {
    io_detail::require_keys(jo, {"id", "kind", "lane", "state", "footprint", "params"},
                            where + ".object");
    TrafficObject obj;
    obj.id = jo.at("id").get<int>();
    const std::string kind = jo.at("kind").get<std::string>();
    if (kind == "car") {
      obj.kind = ObjectKind::kCar;
    } else if (kind == "bicycle") {
      obj.kind = ObjectKind::kBicycle;
    } else {
      throw ConfigError(where + ": unknown object kind '" + kind + "'");
    }
    obj.lane_id = jo.at("lane").get<std::string>();
    const json& js = jo.at("state");
    obj.state.X = js.at("x").get<double>();
    obj.state.Y = js.at("y").get<double>();
    obj.state.v = js.at("v").get<double>();
    obj.state.beta = js.value("beta", 0.0);
    obj.state.psi = js.at("psi").get<double>();
    obj.state.psi_dot = js.value("psi_dot", 0.0);
    obj.state.ax = js.value("ax", 0.0);
    obj.state.ay = js.value("ay", 0.0);
    if (obj.state.v < 0.0) throw ConfigError(where + ": object speed must be >= 0");
    obj.footprint.length = jo.at("footprint").at("length").get<double>();
    obj.footprint.width = jo.at("footprint").at("width").get<double>();
    if (obj.footprint.length <= 0.0 || obj.footprint.width <= 0.0) {
      throw ConfigError(where + ": footprint must be positive");
    }
    const json& jp = jo.at("params");
    obj.params.m = jp.at("m").get<double>();
    obj.params.Iz = jp.at("iz").get<double>();
    obj.params.lf = jp.at("lf").get<double>();
    obj.params.lr = jp.at("lr").get<double>();
    obj.params.w = jp.at("w").get<double>();
    if (jp.contains("tire")) {
      obj.params.tire.mu_max = jp.at("tire").at("mu_max").get<double>();
      obj.params.tire.B_stiff = jp.at("tire").at("b_stiff").get<double>();
      obj.params.tire.C_shape = jp.at("tire").at("c_shape").get<double>();
    }
    out.scene.objects.push_back(std::move(obj));
  }
  if (j.contains("ego")) out.scene.ego_id = j.at("ego").get<int>();

  if (j.contains("sweep")) {
    const json& js = j.at("sweep");
    io_detail::require_keys(js, {"seed", "objects"}, where + ".sweep");
    out.sweep.seed = js.value("seed", std::uint64_t(0));
    for (const auto& ja : js.at("objects")) {
      ObjectSweep os;
      os.object_id = ja.at("id").get<int>();
      auto axis = [&](const char* name) {
        const json& a = ja.at(name);
        AxisSweep axis_out;
        axis_out.lo = a.at("lo").get<double>();
        axis_out.hi = a.at("hi").get<double>();
        axis_out.count = a.at("count").get<int>();
        if (axis_out.count < 1) throw ConfigError(where + ": axis count must be >= 1");
        return axis_out;
      };
      os.position_m = axis("position_m");
      os.speed_kmh = axis("speed_kmh");
      os.accel_mps2 = axis("accel_mps2");
      out.sweep.objects.push_back(os);
    }
  }

  // structural validation
  for (std::size_t a = 0; a < out.scene.objects.size(); ++a) {
    for (std::size_t b = a + 1; b < out.scene.objects.size(); ++b) {
      if (out.scene.objects[a].id == out.scene.objects[b].id) {
        throw ConfigError(where + ": duplicate object id " +
                          std::to_string(out.scene.objects[a].id));
      }
    }
  }
  for (const auto& obj : out.scene.objects) {
    const Lane& lane = out.scene.road.lane(obj.lane_id);
    const auto proj = lane.centerline.project({obj.state.X, obj.state.Y});
    if (proj.distance > lane.width) {
      throw ConfigError(where + ": object " + std::to_string(obj.id) +
                        " is more than one lane width from its lane");
    }
  }
  return out;
}

inline void save_scenario(const std::filesystem::path& path, const Scene& scene,
                          const SweepSpec& sweep = {}) {
  io_detail::write_text_file(path, scenario_to_json(scene, sweep).dump(2) + "\n");
}

inline ScenarioFile load_scenario(const std::filesystem::path& path) {
  return scenario_from_json(io_detail::load_json_file(path), path.string());
}

// ---------------------------------------------------------------------------
// Grid files: plain-text variant for fixtures, binary variant for datasets
// ---------------------------------------------------------------------------

namespace io_detail {

inline std::string spec_line(const GridSpec& s) {
  std::ostringstream os;
  os << "spec " << fmt_double(s.origin_x) << ' ' << fmt_double(s.origin_y) << ' '
     << fmt_double(s.cell_length) << ' ' << fmt_double(s.cell_width) << ' ' << s.cols << ' '
     << s.rows;
  return os.str();
}

inline GridSpec parse_spec_line(std::istream& in, const std::string& where) {
  std::string tag;
  GridSpec s;
  if (!(in >> tag >> s.origin_x >> s.origin_y >> s.cell_length >> s.cell_width >> s.cols >>
        s.rows) ||
      tag != "spec") {
    throw ConfigError(where + ": malformed spec line");
  }
  if (s.cell_length <= 0.0 || s.cell_width <= 0.0 || s.cols < 1 || s.rows < 1) {
    throw ConfigError(where + ": invalid grid spec");
  }
  return s;
}

template <typename T>
void write_raw(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& where) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ConfigError(where + ": truncated file");
  return v;
}

constexpr std::uint32_t kGridMagic = 0x44524750;   // "PGRD"
constexpr std::uint32_t kModelMagic = 0x4D474F50;  // "POGM"

inline void write_grid_binary(const std::filesystem::path& path, const GridSpec& spec,
                              double t_pred, std::uint16_t kind,
                              const std::vector<double>& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_raw(out, kGridMagic);
  write_raw(out, std::uint16_t(kGridFormatVersion));
  write_raw(out, kind);
  write_raw(out, spec.origin_x);
  write_raw(out, spec.origin_y);
  write_raw(out, spec.cell_length);
  write_raw(out, spec.cell_width);
  write_raw(out, std::int32_t(spec.cols));
  write_raw(out, std::int32_t(spec.rows));
  write_raw(out, t_pred);
  write_raw(out, std::uint64_t(payload.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            std::streamsize(payload.size() * sizeof(double)));
  if (!out) throw Error("write failed: " + path.string());
}

struct GridBinary {
  GridSpec spec;
  double t_pred = 0.0;
  std::uint16_t kind = 0;
  std::vector<double> payload;
};

inline GridBinary read_grid_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::string where = path.string();
  if (read_raw<std::uint32_t>(in, where) != kGridMagic) {
    throw ConfigError(where + ": not a grid file");
  }
  if (read_raw<std::uint16_t>(in, where) != kGridFormatVersion) {
    throw ConfigError(where + ": unsupported grid format version");
  }
  GridBinary g;
  g.kind = read_raw<std::uint16_t>(in, where);
  g.spec.origin_x = read_raw<double>(in, where);
  g.spec.origin_y = read_raw<double>(in, where);
  g.spec.cell_length = read_raw<double>(in, where);
  g.spec.cell_width = read_raw<double>(in, where);
  g.spec.cols = read_raw<std::int32_t>(in, where);
  g.spec.rows = read_raw<std::int32_t>(in, where);
  g.t_pred = read_raw<double>(in, where);
  const auto n = read_raw<std::uint64_t>(in, where);
  g.payload.resize(n);
  in.read(reinterpret_cast<char*>(g.payload.data()), std::streamsize(n * sizeof(double)));
  if (!in) throw ConfigError(where + ": truncated payload");
  return g;
}

}  // namespace io_detail

inline void save_aog_binary(const std::filesystem::path& path,
                            const AugmentedOccupancyGrid& aog) {
  io_detail::write_grid_binary(path, aog.spec, 0.0, 0, aog.data);
}

inline AugmentedOccupancyGrid load_aog_binary(const std::filesystem::path& path) {
  const auto g = io_detail::read_grid_binary(path);
  if (g.kind != 0) throw ConfigError(path.string() + ": not an AOG file");
  AugmentedOccupancyGrid aog(g.spec);
  if (g.payload.size() != aog.data.size()) {
    throw ConfigError(path.string() + ": payload size mismatch");
  }
  aog.data = g.payload;
  return aog;
}

inline void save_pog_binary(const std::filesystem::path& path,
                            const PredictedOccupancyGrid& pog) {
  io_detail::write_grid_binary(path, pog.spec, pog.t_pred, 1, pog.p);
}

inline PredictedOccupancyGrid load_pog_binary(const std::filesystem::path& path) {
  const auto g = io_detail::read_grid_binary(path);
  if (g.kind != 1) throw ConfigError(path.string() + ": not a POG file");
  PredictedOccupancyGrid pog(g.spec, g.t_pred);
  if (g.payload.size() != pog.p.size()) {
    throw ConfigError(path.string() + ": payload size mismatch");
  }
  pog.p = g.payload;
  return pog;
}

inline void save_aog_text(const std::filesystem::path& path,
                          const AugmentedOccupancyGrid& aog) {
  std::ostringstream os;
  os << "pogcast-grid " << kGridFormatVersion << "\nkind aog\n"
     << io_detail::spec_line(aog.spec) << "\nt_pred 0\nattrs occupancy v psi ax ay\n";
  for (int j = 0; j < aog.spec.rows; ++j) {
    for (int i = 0; i < aog.spec.cols; ++i) {
      for (int a = 0; a < kAogAttributes; ++a) {
        if (i != 0 || a != 0) os << ' ';
        os << io_detail::fmt_double(aog.at({i, j}, a));
      }
    }
    os << '\n';
  }
  io_detail::write_text_file(path, os.str());
}

inline void save_pog_text(const std::filesystem::path& path,
                          const PredictedOccupancyGrid& pog) {
  std::ostringstream os;
  os << "pogcast-grid " << kGridFormatVersion << "\nkind pog\n"
     << io_detail::spec_line(pog.spec) << "\nt_pred " << io_detail::fmt_double(pog.t_pred)
     << "\nattrs p\n";
  for (int j = 0; j < pog.spec.rows; ++j) {
    for (int i = 0; i < pog.spec.cols; ++i) {
      if (i != 0) os << ' ';
      os << io_detail::fmt_double(pog.at({i, j}));
    }
    os << '\n';
  }
  io_detail::write_text_file(path, os.str());
}

namespace io_detail {

struct TextGridHeader {
  std::string kind;
  GridSpec spec;
  double t_pred = 0.0;
};

inline TextGridHeader read_text_header(std::istream& in, const std::string& where) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "pogcast-grid" || version != kGridFormatVersion) {
    throw ConfigError(where + ": not a pogcast grid text file");
  }
  TextGridHeader h;
  if (!(in >> tag >> h.kind) || tag != "kind") throw ConfigError(where + ": missing kind");
  h.spec = parse_spec_line(in, where);
  if (!(in >> tag >> h.t_pred) || tag != "t_pred") throw ConfigError(where + ": missing t_pred");
  std::string line;
  std::getline(in, line);  // rest of t_pred line
  std::getline(in, line);  // attrs line
  if (line.rfind("attrs ", 0) != 0) throw ConfigError(where + ": missing attrs");
  return h;
}

}  // namespace io_detail

inline AugmentedOccupancyGrid load_aog_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const auto h = io_detail::read_text_header(in, path.string());
  if (h.kind != "aog") throw ConfigError(path.string() + ": not an AOG text file");
  AugmentedOccupancyGrid aog(h.spec);
  for (auto& v : aog.data) {
    if (!(in >> v)) throw ConfigError(path.string() + ": truncated payload");
  }
  return aog;
}

inline PredictedOccupancyGrid load_pog_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  const auto h = io_detail::read_text_header(in, path.string());
  if (h.kind != "pog") throw ConfigError(path.string() + ": not a POG text file");
  PredictedOccupancyGrid pog(h.spec, h.t_pred);
  for (auto& v : pog.p) {
    if (!(in >> v)) throw ConfigError(path.string() + ": truncated payload");
  }
  return pog;
}

// ---------------------------------------------------------------------------
// Model file: versioned binary container with per-classifier offsets so a
// single cell can be deserialized without reading the rest
// ---------------------------------------------------------------------------

namespace io_detail {

inline void write_tree(std::ostream& out, const DecisionTree& tree, int n_classes) {
  write_raw(out, std::uint32_t(tree.nodes().size()));
  for (const auto& node : tree.nodes()) {
    write_raw(out, node.feature);
    if (node.feature < 0) {
      if (int(node.counts.size()) != n_classes) throw Error("model: bad leaf counts");
      for (const auto c : node.counts) write_raw(out, c);
    } else {
      write_raw(out, node.threshold);
      write_raw(out, node.left);
      write_raw(out, node.right);
    }
  }
}

inline DecisionTree read_tree(std::istream& in, int n_classes, const std::string& where) {
  const auto n_nodes = read_raw<std::uint32_t>(in, where);
  std::vector<TreeNode> nodes(n_nodes);
  for (auto& node : nodes) {
    node.feature = read_raw<std::int32_t>(in, where);
    if (node.feature < 0) {
      node.counts.resize(std::size_t(n_classes));
      for (auto& c : node.counts) c = read_raw<std::uint32_t>(in, where);
    } else {
      node.threshold = read_raw<double>(in, where);
      node.left = read_raw<std::int32_t>(in, where);
      node.right = read_raw<std::int32_t>(in, where);
    }
  }
  return DecisionTree(std::move(nodes));
}

inline void write_cell_model(std::ostream& out, const CellModel& model, int n_classes,
                             std::size_t n_features) {
  if (model.is_stub()) {
    write_raw(out, std::uint8_t(0));
    write_raw(out, model.constant_class);
    return;
  }
  write_raw(out, std::uint8_t(1));
  write_raw(out, std::uint64_t(n_features));
  write_raw(out, std::uint32_t(model.forest.trees.size()));
  for (const auto& tree : model.forest.trees) write_tree(out, tree, n_classes);
}

inline CellModel read_cell_model(std::istream& in, const ForestConfig& cfg,
                                 const std::string& where) {
  CellModel model;
  const auto tag = read_raw<std::uint8_t>(in, where);
  if (tag == 0) {
    model.constant_class = read_raw<std::int16_t>(in, where);
    return model;
  }
  if (tag != 1) throw ConfigError(where + ": corrupt cell model tag");
  model.constant_class = -1;
  model.forest.config = cfg;
  model.forest.n_features = read_raw<std::uint64_t>(in, where);
  const auto n_trees = read_raw<std::uint32_t>(in, where);
  model.forest.trees.reserve(n_trees);
  for (std::uint32_t t = 0; t < n_trees; ++t) {
    model.forest.trees.push_back(read_tree(in, cfg.n_classes, where));
  }
  return model;
}

struct ModelHeader {
  GridSpec spec;
  std::vector<double> instants;
  QuantizationSet qset;
  ForestConfig forest_config;
  std::uint64_t dataset_hash = 0;
  std::uint64_t config_hash = 0;
  std::vector<std::uint64_t> offsets;
};

inline ModelHeader read_model_header(std::istream& in, const std::string& where) {
  if (read_raw<std::uint32_t>(in, where) != kModelMagic) {
    throw ConfigError(where + ": not a model file");
  }
  if (read_raw<std::uint32_t>(in, where) != kModelFormatVersion) {
    throw ConfigError(where + ": unsupported model format version");
  }
  ModelHeader h;
  h.spec.origin_x = read_raw<double>(in, where);
  h.spec.origin_y = read_raw<double>(in, where);
  h.spec.cell_length = read_raw<double>(in, where);
  h.spec.cell_width = read_raw<double>(in, where);
  h.spec.cols = read_raw<std::int32_t>(in, where);
  h.spec.rows = read_raw<std::int32_t>(in, where);
  const auto n_instants = read_raw<std::uint32_t>(in, where);
  h.instants.resize(n_instants);
  for (auto& t : h.instants) t = read_raw<double>(in, where);
  const auto n_classes = read_raw<std::uint32_t>(in, where);
  h.qset.values.resize(n_classes);
  for (auto& v : h.qset.values) v = read_raw<double>(in, where);
  h.forest_config.n_trees = read_raw<std::int32_t>(in, where);
  h.forest_config.m_try = read_raw<std::int32_t>(in, where);
  h.forest_config.min_leaf = read_raw<std::int32_t>(in, where);
  h.forest_config.n_classes = int(n_classes);
  h.forest_config.seed = read_raw<std::uint64_t>(in, where);
  h.dataset_hash = read_raw<std::uint64_t>(in, where);
  h.config_hash = read_raw<std::uint64_t>(in, where);
  const auto n_slots = read_raw<std::uint64_t>(in, where);
  h.offsets.resize(n_slots);
  for (auto& o : h.offsets) o = read_raw<std::uint64_t>(in, where);
  return h;
}

}  // namespace io_detail

inline void save_model(const std::filesystem::path& path, const PogEstimator& est,
                       std::uint64_t dataset_hash = 0, std::uint64_t config_hash = 0) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  using io_detail::write_raw;
  write_raw(out, io_detail::kModelMagic);
  write_raw(out, std::uint32_t(kModelFormatVersion));
  write_raw(out, est.spec.origin_x);
  write_raw(out, est.spec.origin_y);
  write_raw(out, est.spec.cell_length);
  write_raw(out, est.spec.cell_width);
  write_raw(out, std::int32_t(est.spec.cols));
  write_raw(out, std::int32_t(est.spec.rows));
  write_raw(out, std::uint32_t(est.instants.size()));
  for (const double t : est.instants) write_raw(out, t);
  write_raw(out, std::uint32_t(est.qset.values.size()));
  for (const double v : est.qset.values) write_raw(out, v);
  write_raw(out, std::int32_t(est.forest_config.n_trees));
  write_raw(out, std::int32_t(est.forest_config.m_try));
  write_raw(out, std::int32_t(est.forest_config.min_leaf));
  write_raw(out, est.forest_config.seed);
  write_raw(out, dataset_hash);
  write_raw(out, config_hash);
  write_raw(out, std::uint64_t(est.cells.size()));

  const std::streampos dir_pos = out.tellp();
  for (std::size_t k = 0; k < est.cells.size(); ++k) {
    write_raw(out, std::uint64_t(0));  // placeholder
  }
  std::vector<std::uint64_t> offsets(est.cells.size());
  const std::size_t n_features = est.spec.cell_count() * kAogAttributes;
  for (std::size_t k = 0; k < est.cells.size(); ++k) {
    offsets[k] = std::uint64_t(out.tellp());
    io_detail::write_cell_model(out, est.cells[k], est.qset.size(), n_features);
  }
  out.seekp(dir_pos);
  for (const auto o : offsets) write_raw(out, o);
  if (!out) throw Error("write failed: " + path.string());
}

inline PogEstimator load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::string where = path.string();
  const auto h = io_detail::read_model_header(in, where);
  PogEstimator est;
  est.spec = h.spec;
  est.instants = h.instants;
  est.qset = h.qset;
  est.forest_config = h.forest_config;
  est.cells.reserve(h.offsets.size());
  for (const auto offset : h.offsets) {
    in.seekg(std::streamoff(offset));
    est.cells.push_back(io_detail::read_cell_model(in, h.forest_config, where));
  }
  return est;
}

/// Reads exactly one (instance, cell) classifier through the offset
/// directory, without touching the other blobs.
inline CellModel load_model_cell(const std::filesystem::path& path, std::size_t instant_index,
                                 std::size_t cell_index) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  const std::string where = path.string();
  const auto h = io_detail::read_model_header(in, where);
  const std::size_t slot = instant_index * h.spec.cell_count() + cell_index;
  if (slot >= h.offsets.size()) throw Error("load_model_cell: slot out of range");
  in.seekg(std::streamoff(h.offsets[slot]));
  return io_detail::read_cell_model(in, h.forest_config, where);
}

inline std::pair<std::uint64_t, std::uint64_t> model_hashes(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  const auto h = io_detail::read_model_header(in, path.string());
  return {h.dataset_hash, h.config_hash};
}

}  // namespace pog
