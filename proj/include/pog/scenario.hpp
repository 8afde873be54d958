#pragma once

#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pog/dynamics.hpp"
#include "pog/error.hpp"
#include "pog/geometry.hpp"
#include "pog/rng.hpp"

namespace pog {

enum class ManeuverLabel { kFollowLane, kDriveStraight, kChangeLane, kTurnLeft, kTurnRight };

inline const char* maneuver_name(ManeuverLabel m) {
  switch (m) {
    case ManeuverLabel::kFollowLane: return "follow_lane";
    case ManeuverLabel::kDriveStraight: return "drive_straight";
    case ManeuverLabel::kChangeLane: return "change_lane";
    case ManeuverLabel::kTurnLeft: return "turn_left";
    case ManeuverLabel::kTurnRight: return "turn_right";
  }
  return "?";
}

inline ManeuverLabel maneuver_from_name(const std::string& s) {
  if (s == "follow_lane") return ManeuverLabel::kFollowLane;
  if (s == "drive_straight") return ManeuverLabel::kDriveStraight;
  if (s == "change_lane") return ManeuverLabel::kChangeLane;
  if (s == "turn_left") return ManeuverLabel::kTurnLeft;
  if (s == "turn_right") return ManeuverLabel::kTurnRight;
  throw ConfigError("unknown maneuver label: " + s);
}

struct Lane {
  std::string id;
  Polyline centerline;
  double width = 3.5;
  std::vector<ManeuverLabel> allowed;
  std::map<ManeuverLabel, std::string> successors;
  std::string left_neighbor;   // adjacent same-direction lane, if any
  std::string right_neighbor;

  bool allows(ManeuverLabel m) const {
    for (const auto a : allowed)
      if (a == m) return true;
    return false;
  }
};

struct RoadNetwork {
  std::vector<Lane> lanes;
  std::vector<Polyline> road_limits;

  const Lane* find_lane(const std::string& id) const {
    for (const auto& l : lanes)
      if (l.id == id) return &l;
    return nullptr;
  }

  const Lane& lane(const std::string& id) const {
    const Lane* l = find_lane(id);
    if (!l) throw Error("unknown lane id: " + id);
    return *l;
  }
};

enum class ObjectKind { kCar, kBicycle };

struct Footprint {
  double length = 4.5;
  double width = 2.0;
};

struct TrafficObject {
  int id = 0;
  ObjectKind kind = ObjectKind::kCar;
  VehicleState state;
  Footprint footprint;
  TwoTrackParams params = TwoTrackParams::default_car();
  std::string lane_id;
};

struct Scene {
  RoadNetwork road;
  std::vector<TrafficObject> objects;
  std::optional<int> ego_id;

  const TrafficObject& object(int id) const {
    for (const auto& o : objects)
      if (o.id == id) return o;
    throw Error("unknown object id: " + std::to_string(id));
  }

  TrafficObject& object(int id) {
    for (auto& o : objects)
      if (o.id == id) return o;
    throw Error("unknown object id: " + std::to_string(id));
  }
};

/// One sweep axis: `count` grid points over [lo, hi] added as offsets to the
/// base value. A single-point axis is the degenerate sweep (offset 0).
struct AxisSweep {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;

  double at(int k) const {
    if (count <= 1) return 0.0;
    return lo + (hi - lo) * double(k) / double(count - 1);
  }
};

struct ObjectSweep {
  int object_id = 0;
  AxisSweep position_m;    // displacement along the lane centerline
  AxisSweep speed_kmh;     // speed offset
  AxisSweep accel_mps2;    // longitudinal-acceleration offset
};

struct SweepSpec {
  std::vector<ObjectSweep> objects;
  std::uint64_t seed = 0;

  std::size_t scene_count() const {
    std::size_t n = 1;
    for (const auto& o : objects) {
      n *= std::size_t(o.position_m.count) * std::size_t(o.speed_kmh.count) *
           std::size_t(o.accel_mps2.count);
    }
    return n;
  }
};

namespace detail {

/// Moves an object along its lane by `ds`, keeping its lateral offset and
/// heading offset relative to the centerline.
inline void displace_along_lane(TrafficObject& obj, const Lane& lane, double ds) {
  const auto proj = lane.centerline.project({obj.state.X, obj.state.Y});
  const double s_new = proj.s + ds;
  if (s_new < 0.0 || s_new > lane.centerline.length()) {
    throw Error("sweep pushes object " + std::to_string(obj.id) + " off lane " + lane.id);
  }
  const double heading_offset = angle_diff(obj.state.psi, lane.centerline.heading_at(proj.s));
  const Vec2 base = lane.centerline.point_at(s_new);
  const Vec2 normal = lane.centerline.tangent_at(s_new).perp();
  const Vec2 pos = base + normal * proj.lateral;
  obj.state.X = pos.x;
  obj.state.Y = pos.y;
  obj.state.psi = wrap_angle(lane.centerline.heading_at(s_new) + heading_offset);
}

}  // namespace detail

/// Deterministic Cartesian-grid expansion of the sweep axes: one scene per
/// grid point, positions displaced along each object's lane.
inline std::vector<Scene> generate_scenes(const Scene& base, const SweepSpec& sweep) {
  for (const auto& os : sweep.objects) {
    base.object(os.object_id);  // validates the id
    if (os.position_m.count < 1 || os.speed_kmh.count < 1 || os.accel_mps2.count < 1) {
      throw Error("sweep axis counts must be >= 1");
    }
  }

  // mixed-radix counter over (object, axis) in declaration order
  std::vector<int> radix, digit;
  for (const auto& os : sweep.objects) {
    radix.push_back(os.position_m.count);
    radix.push_back(os.speed_kmh.count);
    radix.push_back(os.accel_mps2.count);
  }
  digit.assign(radix.size(), 0);

  std::vector<Scene> out;
  out.reserve(sweep.scene_count());
  for (;;) {
    Scene scene = base;
    for (std::size_t i = 0; i < sweep.objects.size(); ++i) {
      const ObjectSweep& os = sweep.objects[i];
      TrafficObject& obj = scene.object(os.object_id);
      const double d_pos = os.position_m.at(digit[3 * i]);
      const double d_v = os.speed_kmh.at(digit[3 * i + 1]) / 3.6;
      const double d_ax = os.accel_mps2.at(digit[3 * i + 2]);

      if (d_pos != 0.0) {
        detail::displace_along_lane(obj, scene.road.lane(obj.lane_id), d_pos);
      }
      obj.state.v += d_v;
      if (obj.state.v < 0.0) throw Error("sweep drives speed negative");
      obj.state.ax += d_ax;
    }
    out.push_back(std::move(scene));

    // increment, least significant digit last
    std::size_t k = radix.size();
    while (k > 0) {
      --k;
      if (++digit[k] < radix[k]) break;
      digit[k] = 0;
      if (k == 0) return out;
    }
    if (radix.empty()) return out;
  }
}

/// Seeded shuffle followed by an exact floor split.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0, 1)");
  }
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  Rng rng(derive_seed(seed, 0x73706c69));  // split stream
  rng.shuffle(idx);
  const auto n_train = std::size_t(double(n) * train_fraction);
  std::vector<std::size_t> train(idx.begin(), idx.begin() + n_train);
  std::vector<std::size_t> validation(idx.begin() + n_train, idx.end());
  return {train, validation};
}

inline std::pair<std::vector<Scene>, std::vector<Scene>> split_dataset(
    const std::vector<Scene>& scenes, double train_fraction, std::uint64_t seed) {
  const auto [ti, vi] = split_indices(scenes.size(), train_fraction, seed);
  std::pair<std::vector<Scene>, std::vector<Scene>> out;
  for (const auto i : ti) out.first.push_back(scenes[i]);
  for (const auto i : vi) out.second.push_back(scenes[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Built-in preset: an intersection on a curved road, 40 x 40 m. A two-lane
// curved main road (one lane per direction) with a straight side road
// branching off at mid-arc; two cars on the main road, one bicycle on the
// side road.
// ---------------------------------------------------------------------------

namespace preset_detail {

constexpr double kDeg = std::numbers::pi / 180.0;
inline const Vec2 kArcCenter{40.0, 0.0};
constexpr double kAxisRadius = 30.0;
constexpr double kLaneOffset = 1.75;
constexpr double kRoadHalfWidth = 3.5;
constexpr double kJunctionDeg = 135.0;

inline std::vector<Vec2> arc_points(double radius, double deg0, double deg1, int n) {
  std::vector<Vec2> out;
  out.reserve(std::size_t(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double th = (deg0 + (deg1 - deg0) * double(k) / n) * kDeg;
    out.push_back(kArcCenter + Vec2{radius * std::cos(th), radius * std::sin(th)});
  }
  return out;
}

inline Vec2 side_axis(double t) {
  const Vec2 u{-std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};
  return kArcCenter + Vec2{kAxisRadius * std::cos(kJunctionDeg * kDeg),
                           kAxisRadius * std::sin(kJunctionDeg * kDeg)} +
         u * t;
}

inline std::vector<Vec2> side_points(double t0, double t1, Vec2 offset, int n) {
  std::vector<Vec2> out;
  out.reserve(std::size_t(n) + 1);
  for (int k = 0; k <= n; ++k) {
    out.push_back(side_axis(t0 + (t1 - t0) * double(k) / n) + offset);
  }
  return out;
}

}  // namespace preset_detail

inline Scene preset_intersection_scene() {
  using namespace preset_detail;
  const Vec2 u{-std::numbers::sqrt2 / 2.0, std::numbers::sqrt2 / 2.0};
  const Vec2 off_out = Vec2{u.y, -u.x} * kLaneOffset;   // right of outbound travel
  const Vec2 off_in = Vec2{-u.y, u.x} * kLaneOffset;    // right of inbound travel
  const double r_dir1 = kAxisRadius + kLaneOffset;      // travel theta 90 -> 180 deg
  const double r_dir2 = kAxisRadius - kLaneOffset;      // travel theta 180 -> 90 deg

  // the side-road lanes start where they cross the outer road edge
  const double t_edge = std::sqrt(
      (kAxisRadius + kRoadHalfWidth) * (kAxisRadius + kRoadHalfWidth) -
      kLaneOffset * kLaneOffset) - kAxisRadius;
  const double t_far = 21.0;
  const double t_join = 8.0;  // where turn connectors meet the side road

  Scene scene;
  RoadNetwork& road = scene.road;

  auto add_lane = [&](std::string id, std::vector<Vec2> pts,
                      std::vector<ManeuverLabel> allowed,
                      std::map<ManeuverLabel, std::string> successors) {
    Lane lane;
    lane.id = std::move(id);
    lane.centerline = Polyline(std::move(pts));
    lane.allowed = std::move(allowed);
    lane.successors = std::move(successors);
    road.lanes.push_back(std::move(lane));
  };

  using M = ManeuverLabel;
  add_lane("main_1a", arc_points(r_dir1, 90, 120, 20), {M::kFollowLane, M::kTurnRight},
           {{M::kFollowLane, "main_1b"}, {M::kTurnRight, "ramp_r1"}});
  add_lane("main_1b", arc_points(r_dir1, 120, 180, 30), {M::kFollowLane}, {});
  add_lane("main_2a", arc_points(r_dir2, 180, 143, 24), {M::kFollowLane, M::kTurnLeft},
           {{M::kFollowLane, "main_2b"}, {M::kTurnLeft, "ramp_l2"}});
  add_lane("main_2b", arc_points(r_dir2, 143, 90, 30), {M::kFollowLane}, {});
  add_lane("side_out", side_points(t_edge, t_far, off_out, 12), {M::kFollowLane}, {});
  add_lane("side_in", side_points(t_far, t_edge, off_in, 12), {M::kTurnLeft, M::kTurnRight},
           {{M::kTurnLeft, "turn_sl"}, {M::kTurnRight, "turn_sr"}});

  // turn connectors: bezier blend plus the downstream lane geometry
  auto connector = [&](Vec2 p0, Vec2 t0, Vec2 p3, Vec2 t3, std::vector<Vec2> tail) {
    const double pull = (p3 - p0).norm() / 3.0;
    std::vector<Vec2> pts = sample_bezier(p0, t0, p3, t3, pull, 16);
    for (std::size_t i = 1; i < tail.size(); ++i) pts.push_back(tail[i]);
    return pts;
  };

  {
    // right turn from main_1a onto the side road
    const Vec2 p0 = road.lane("main_1a").centerline.back();
    const Vec2 t0{-std::sin(120 * kDeg), std::cos(120 * kDeg)};
    const Vec2 p3 = side_axis(t_join) + off_out;
    add_lane("ramp_r1", connector(p0, t0, p3, u, side_points(t_join, t_far, off_out, 10)),
             {M::kFollowLane}, {});
  }
  {
    // left turn from main_2a onto the side road
    const Vec2 p0 = road.lane("main_2a").centerline.back();
    const Vec2 t0{std::sin(143 * kDeg), -std::cos(143 * kDeg)};
    const Vec2 p3 = side_axis(t_join) + off_out;
    add_lane("ramp_l2", connector(p0, t0, p3, u, side_points(t_join, t_far, off_out, 10)),
             {M::kFollowLane}, {});
  }
  {
    // side-road turns onto the main road
    const Vec2 p0 = road.lane("side_in").centerline.back();
    const Vec2 arrive = Vec2{u.x, u.y} * -1.0;
    const double th_sr = 150 * kDeg;
    const Vec2 p3_sr = kArcCenter + Vec2{r_dir1 * std::cos(th_sr), r_dir1 * std::sin(th_sr)};
    const Vec2 t3_sr{-std::sin(th_sr), std::cos(th_sr)};
    add_lane("turn_sr", connector(p0, arrive, p3_sr, t3_sr, arc_points(r_dir1, 150, 180, 16)),
             {M::kFollowLane}, {});

    const double th_sl = 128 * kDeg;
    const Vec2 p3_sl = kArcCenter + Vec2{r_dir2 * std::cos(th_sl), r_dir2 * std::sin(th_sl)};
    const Vec2 t3_sl{std::sin(th_sl), -std::cos(th_sl)};
    add_lane("turn_sl", connector(p0, arrive, p3_sl, t3_sl, arc_points(r_dir2, 128, 90, 20)),
             {M::kFollowLane}, {});
  }

  // road limits: inner edge, and the outer edge split by the side road
  const double t_gap = std::sqrt(
      (kAxisRadius + kRoadHalfWidth) * (kAxisRadius + kRoadHalfWidth) -
      kRoadHalfWidth * kRoadHalfWidth) - kAxisRadius;
  const Vec2 edge_a_off = Vec2{u.y, -u.x} * kRoadHalfWidth;
  const Vec2 edge_b_off = Vec2{-u.y, u.x} * kRoadHalfWidth;
  const Vec2 gap_a = side_axis(t_gap) + edge_a_off;
  const Vec2 gap_b = side_axis(t_gap) + edge_b_off;
  const double th_a = std::atan2(gap_a.y - kArcCenter.y, gap_a.x - kArcCenter.x) / kDeg;
  const double th_b = std::atan2(gap_b.y - kArcCenter.y, gap_b.x - kArcCenter.x) / kDeg;

  road.road_limits.push_back(Polyline(arc_points(kAxisRadius - kRoadHalfWidth, 90, 180, 45)));
  {
    std::vector<Vec2> pts = arc_points(kAxisRadius + kRoadHalfWidth, 90, th_a, 24);
    auto edge = side_points(t_gap, t_far, edge_a_off, 10);
    for (std::size_t i = 1; i < edge.size(); ++i) pts.push_back(edge[i]);
    road.road_limits.push_back(Polyline(std::move(pts)));
  }
  {
    std::vector<Vec2> pts = side_points(t_far, t_gap, edge_b_off, 10);
    auto arc = arc_points(kAxisRadius + kRoadHalfWidth, th_b, 180, 24);
    for (std::size_t i = 1; i < arc.size(); ++i) pts.push_back(arc[i]);
    road.road_limits.push_back(Polyline(std::move(pts)));
  }

  // traffic objects
  auto on_lane = [&](const std::string& lane_id, double s, double v_kmh, double ax) {
    const Lane& lane = road.lane(lane_id);
    TrafficObject obj;
    obj.lane_id = lane_id;
    const Vec2 p = lane.centerline.point_at(s);
    obj.state.X = p.x;
    obj.state.Y = p.y;
    obj.state.psi = lane.centerline.heading_at(s);
    obj.state.v = v_kmh / 3.6;
    obj.state.ax = ax;
    return obj;
  };

  {
    TrafficObject car1 = on_lane("main_1a", 10.0 * kDeg * (kAxisRadius + kLaneOffset) / 1.0,
                                 30.0, -1.0);
    car1.id = 1;
    car1.state.psi_dot = car1.state.v / (kAxisRadius + kLaneOffset);
    car1.state.ay = car1.state.v * car1.state.psi_dot;
    scene.objects.push_back(car1);
  }
  {
    TrafficObject car2 = on_lane("main_2a", 10.0 * kDeg * (kAxisRadius - kLaneOffset), 30.0, 0.0);
    car2.id = 2;
    car2.state.psi_dot = -car2.state.v / (kAxisRadius - kLaneOffset);
    car2.state.ay = car2.state.v * car2.state.psi_dot;
    scene.objects.push_back(car2);
  }
  {
    TrafficObject bike = on_lane("side_in", 4.0, 15.0, 0.0);
    bike.id = 3;
    bike.kind = ObjectKind::kBicycle;
    bike.footprint = {1.8, 0.6};
    bike.params = TwoTrackParams::default_bicycle();
    scene.objects.push_back(bike);
  }
  scene.ego_id = 2;
  return scene;
}

/// Sweep matching the reported scenario-family size: 9 x 9 x 12 = 972 scenes.
inline SweepSpec preset_intersection_sweep() {
  SweepSpec sweep;
  sweep.seed = 1234;
  ObjectSweep car1;
  car1.object_id = 1;
  car1.position_m = {0.0, 10.0, 3};
  car1.speed_kmh = {-10.0, 10.0, 3};
  car1.accel_mps2 = {-1.25, 1.25, 1};
  ObjectSweep car2 = car1;
  car2.object_id = 2;
  ObjectSweep bike;
  bike.object_id = 3;
  bike.position_m = {0.0, 6.0, 3};
  bike.speed_kmh = {-5.0, 5.0, 2};
  bike.accel_mps2 = {-0.5, 0.5, 2};
  sweep.objects = {car1, car2, bike};
  return sweep;
}

}  // namespace pog
