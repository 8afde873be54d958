#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "pog/dynamics.hpp"
#include "pog/error.hpp"
#include "pog/geometry.hpp"
#include "pog/scenario.hpp"

namespace pog {

/// Rule table for main-maneuver probabilities: per-maneuver base weight times
/// logistic factors of the current speed and longitudinal acceleration.
/// Deceleration and low speed favor turns; near-zero acceleration favors
/// staying on the lane.
struct RuleCoefficients {
  double base_follow = 1.0;
  double base_straight = 0.8;
  double base_change = 0.4;
  double base_turn = 0.5;

  double turn_speed_ref = 8.0;    // [m/s]
  double turn_speed_gain = 0.4;   // [s/m]
  double turn_decel_gain = 0.8;   // [s^2/m]
  double steady_accel_band = 0.5; // [m/s^2]
  double steady_accel_gain = 2.0; // [s^2/m]
};

struct HypothesisConfig {
  int n_lon = 9;  // odd
  int n_lat = 7;  // odd
  double a_decel_max = 9.0;  // [m/s^2]
  double a_accel_max = 4.5;  // [m/s^2]
  double a_lat_max = 7.0;    // [m/s^2]
  double horizon = 2.0;      // [s] trajectory horizon
  double dt = 0.01;          // [s] integration step
  RuleCoefficients rules;
};

struct MainHypothesis {
  ManeuverLabel label = ManeuverLabel::kFollowLane;
  double probability = 0.0;
  Trajectory trajectory;
};

struct DeviationBounds {
  double lon_min = 0.0;
  double lon_max = 0.0;
  double lat_min = 0.0;
  double lat_max = 0.0;
};

struct SubHypothesis {
  double d_lon = 0.0;
  double d_lat = 0.0;
  double probability = 0.0;  // conditional on the main hypothesis
};

struct WeightedPose {
  Pose2 pose;
  double weight = 0.0;
  int main_index = 0;
};

/// All hypotheses of one object at one prediction instance; weights are the
/// joint main-times-sub probabilities and sum to 1.
struct HypothesisSet {
  int object_id = 0;
  double t_pred = 0.0;
  std::vector<WeightedPose> entries;

  double weight_sum() const {
    double s = 0.0;
    for (const auto& e : entries) s += e.weight;
    return s;
  }
};

namespace detail {

inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double rule_factor(ManeuverLabel label, double v, double ax,
                          const RuleCoefficients& r) {
  switch (label) {
    case ManeuverLabel::kTurnLeft:
    case ManeuverLabel::kTurnRight:
      return logistic(r.turn_speed_gain * (r.turn_speed_ref - v)) *
             logistic(r.turn_decel_gain * (-ax));
    case ManeuverLabel::kFollowLane:
    case ManeuverLabel::kDriveStraight:
      return logistic(r.steady_accel_gain * (r.steady_accel_band - std::abs(ax)));
    case ManeuverLabel::kChangeLane:
      return 1.0;
  }
  return 1.0;
}

inline double rule_base(ManeuverLabel label, const RuleCoefficients& r) {
  switch (label) {
    case ManeuverLabel::kFollowLane: return r.base_follow;
    case ManeuverLabel::kDriveStraight: return r.base_straight;
    case ManeuverLabel::kChangeLane: return r.base_change;
    case ManeuverLabel::kTurnLeft:
    case ManeuverLabel::kTurnRight: return r.base_turn;
  }
  return 1.0;
}

inline void append_points(std::vector<Vec2>& pts, const std::vector<Vec2>& more) {
  for (const auto& p : more) {
    if (!pts.empty() && (pts.back() - p).norm() < 1e-9) continue;
    pts.push_back(p);
  }
}

}  // namespace detail

/// Rule-based probabilities over the maneuvers instantiable from the
/// object's current lane, normalized to sum to 1.
inline std::vector<std::pair<ManeuverLabel, double>> main_hypothesis_probabilities(
    const Scene& scene, int object_id, const HypothesisConfig& cfg = {}) {
  const TrafficObject& obj = scene.object(object_id);
  const Lane& lane = scene.road.lane(obj.lane_id);

  std::vector<std::pair<ManeuverLabel, double>> weights;
  for (const ManeuverLabel label : lane.allowed) {
    if (label == ManeuverLabel::kChangeLane && lane.left_neighbor.empty() &&
        lane.right_neighbor.empty()) {
      continue;  // no adjacent lane to change into
    }
    const double w = detail::rule_base(label, cfg.rules) *
                     detail::rule_factor(label, obj.state.v, obj.state.ax, cfg.rules);
    weights.emplace_back(label, w);
  }
  if (weights.empty()) {
    throw Error("object " + std::to_string(object_id) + " has no instantiable maneuver");
  }
  double total = 0.0;
  for (const auto& [label, w] : weights) total += w;
  for (auto& [label, w] : weights) w /= total;
  return weights;
}

/// Centerline chain for one maneuver: the current lane from the object's
/// position, the maneuver's successor lanes, and a straight runway past the
/// network edge so trackers never run out of path.
inline Polyline build_maneuver_path(const RoadNetwork& road, const TrafficObject& obj,
                                    ManeuverLabel label, double horizon) {
  const Lane* lane = &road.lane(obj.lane_id);
  const Vec2 pos{obj.state.X, obj.state.Y};
  std::vector<Vec2> pts;

  if (label == ManeuverLabel::kChangeLane) {
    const std::string& target_id =
        !lane->left_neighbor.empty() ? lane->left_neighbor : lane->right_neighbor;
    if (target_id.empty()) throw Error("change lane without an adjacent lane");
    lane = &road.lane(target_id);
    const auto proj = lane->centerline.project(pos);
    pts.push_back(lane->centerline.point_at(proj.s));
    for (double s = proj.s; s < lane->centerline.length(); s += 2.0) {
      pts.push_back(lane->centerline.point_at(std::min(s + 2.0, lane->centerline.length())));
    }
  } else {
    const auto proj = lane->centerline.project(pos);
    pts.push_back(lane->centerline.point_at(proj.s));
    for (double s = proj.s; s < lane->centerline.length(); s += 2.0) {
      pts.push_back(lane->centerline.point_at(std::min(s + 2.0, lane->centerline.length())));
    }
    // the maneuver-specific successor, then keep following the road
    auto it = lane->successors.find(label);
    if (label != ManeuverLabel::kFollowLane) {
      if (it == lane->successors.end()) {
        throw Error(std::string("maneuver ") + maneuver_name(label) + " has no successor on " +
                    lane->id);
      }
      lane = &road.lane(it->second);
      detail::append_points(pts, lane->centerline.points());
    }
  }
  for (int hop = 0; hop < 8; ++hop) {
    auto next = lane->successors.find(ManeuverLabel::kFollowLane);
    if (next == lane->successors.end()) break;
    lane = &road.lane(next->second);
    detail::append_points(pts, lane->centerline.points());
  }

  // straight runway along the final tangent
  const Vec2 tangent = (pts.back() - pts[pts.size() - 2]).normalized();
  const double runway = std::max(30.0, 2.0 * obj.state.v * horizon);
  pts.push_back(pts.back() + tangent * runway);
  return Polyline(std::move(pts));
}

/// Dynamics-model trajectory following the maneuver path with a pure-pursuit
/// tracker at the object's current speed profile (v0 + ax0 * t). Cars use the
/// two-track model, bicycles the single-track model.
inline Trajectory main_trajectory(const Scene& scene, int object_id, ManeuverLabel label,
                                  const HypothesisConfig& cfg = {}) {
  const TrafficObject& obj = scene.object(object_id);
  const Lane& lane = scene.road.lane(obj.lane_id);
  const Polyline path = build_maneuver_path(scene.road, obj, label, cfg.horizon);
  const double diverge_limit = 2.0 * lane.width;
  const double v0 = obj.state.v;
  const double ax0 = obj.state.ax;
  const double wheel_base = obj.params.wheel_base();
  const double a_lat_budget = 0.5 * obj.params.tire.mu_max * kGravity;

  // maximum path curvature over a preview window, from heading differences
  auto preview_curvature = [&](double s_from, double window) {
    double kappa = 0.0;
    const double step = 2.0;
    for (double s = s_from; s < s_from + window; s += step) {
      const double dh =
          std::abs(angle_diff(path.heading_at(s + step), path.heading_at(s)));
      kappa = std::max(kappa, dh / step);
    }
    return kappa;
  };

  auto pursue = [&, s_hint = 0.0](double t, const VehicleState& s) mutable {
    const auto proj = path.project_near({s.X, s.Y}, s_hint, 25.0);
    s_hint = proj.s;
    if (proj.distance > diverge_limit) {
      throw Error("tracker diverged from maneuver path (object " + std::to_string(object_id) +
                  ", " + maneuver_name(label) + ")");
    }
    const double lookahead = std::clamp(0.6 * s.v, 1.5, 8.0);
    const Vec2 target = path.point_at(proj.s + lookahead);
    const double target_angle = std::atan2(target.y - s.Y, target.x - s.X);
    const double eta = angle_diff(target_angle, s.psi);
    const double steer =
        std::clamp(std::atan2(2.0 * wheel_base * std::sin(eta), lookahead), -0.5, 0.5);

    // speed profile capped by what the upcoming curvature allows
    double v_ref = std::max(0.0, v0 + ax0 * t);
    const double kappa = preview_curvature(proj.s, std::max(1.5 * s.v, 6.0));
    if (kappa > 1e-6) {
      v_ref = std::min(v_ref, std::sqrt(a_lat_budget / kappa));
    }
    const double a_des = ax0 + 1.0 * (v_ref - s.v);
    return std::pair{steer, a_des};
  };

  if (obj.kind == ObjectKind::kBicycle) {
    auto ctl = [&](double t, const VehicleState& s) {
      const auto [steer, a_des] = pursue(t, s);
      SingleTrackInput in;
      in.steering_angle = steer;
      in.a_long = a_des;
      return in;
    };
    return integrate_single_track(obj.state, obj.params, ctl, cfg.horizon, cfg.dt);
  }
  const TireParams& tire = obj.params.tire;
  const double a_full = tire.mu_max * kGravity *
                        std::sin(tire.C_shape * std::atan(tire.B_stiff * kMaxPedalSlip));
  auto ctl = [&](double t, const VehicleState& s) {
    const auto [steer, a_des] = pursue(t, s);
    DriverInput in;
    in.steering_wheel_angle = steer * kSteeringRatio;
    const double pedal = a_des / a_full;
    in.throttle = std::clamp(pedal, 0.0, 1.0);
    in.brake = std::clamp(-pedal, 0.0, 1.0);
    return in;
  };
  return integrate_two_track(obj.state, obj.params, ctl, cfg.horizon, cfg.dt);
}

/// Main hypotheses of one object: rule-based probabilities with one tracked
/// trajectory each.
inline std::vector<MainHypothesis> main_hypotheses(const Scene& scene, int object_id,
                                                   const HypothesisConfig& cfg = {}) {
  std::vector<MainHypothesis> out;
  for (const auto& [label, prob] : main_hypothesis_probabilities(scene, object_id, cfg)) {
    MainHypothesis mh;
    mh.label = label;
    mh.probability = prob;
    mh.trajectory = main_trajectory(scene, object_id, label, cfg);
    out.push_back(std::move(mh));
  }
  return out;
}

/// Deviation bounds at t_pred: constant-acceleration envelopes, with the
/// longitudinal lower bound capped at the distance actually travelled and the
/// lateral bounds clipped at the road limits.
inline DeviationBounds deviation_bounds(const MainHypothesis& main, double t_pred,
                                        const RoadNetwork& road,
                                        const HypothesisConfig& cfg = {}) {
  DeviationBounds b;
  if (t_pred <= 0.0) return b;

  const double travelled = main.trajectory.arc_length_to(t_pred);
  b.lon_min = std::max(-0.5 * cfg.a_decel_max * t_pred * t_pred, -travelled);
  b.lon_max = 0.5 * cfg.a_accel_max * t_pred * t_pred;

  const VehicleState& s = main.trajectory.state_at(t_pred);
  const double tangent_heading = s.psi + s.beta;
  const Vec2 pos{s.X, s.Y};
  const Vec2 left{-std::sin(tangent_heading), std::cos(tangent_heading)};

  double free_left = std::numeric_limits<double>::infinity();
  double free_right = std::numeric_limits<double>::infinity();
  for (const auto& limit : road.road_limits) {
    if (const auto hit = limit.ray_hit(pos, left)) free_left = std::min(free_left, *hit);
    if (const auto hit = limit.ray_hit(pos, left * -1.0)) free_right = std::min(free_right, *hit);
  }
  const double lat_free = 0.5 * cfg.a_lat_max * t_pred * t_pred;
  b.lat_max = std::min(lat_free, free_left);
  b.lat_min = -std::min(lat_free, free_right);
  return b;
}

namespace detail {

/// CDF of the triangular pdf on [a, b] with mode 0 (a <= 0 <= b).
inline double triangle_cdf(double x, double a, double b) {
  if (x <= a) return 0.0;
  if (x >= b) return 1.0;
  const double span = b - a;
  if (x < 0.0) return (x - a) * (x - a) / (span * (0.0 - a));
  if (b == 0.0) return 1.0;
  return 1.0 - (b - x) * (b - x) / (span * b);
}

/// Per-axis deviation grid: uniformly spaced points on each side of zero so
/// that the zero deviation is always a grid point. Returns point/probability
/// pairs; degenerate sides collapse.
inline std::vector<std::pair<double, double>> quantize_axis(double lo, double hi, int n) {
  if (n < 1 || n % 2 == 0) throw Error("sub-hypothesis axis count must be odd and >= 1");
  if (lo > 0.0 || hi < 0.0) throw Error("deviation bounds must bracket zero");

  std::vector<double> points;
  if (lo == 0.0 && hi == 0.0) {
    points = {0.0};
  } else {
    const int half = (n + 1) / 2;
    if (lo < 0.0 && half > 1) {
      for (int k = 0; k < half; ++k) points.push_back(lo * double(half - 1 - k) / (half - 1));
    } else {
      points.push_back(0.0);
    }
    if (hi > 0.0 && half > 1) {
      for (int k = 1; k < half; ++k) points.push_back(hi * double(k) / (half - 1));
    }
  }

  std::vector<std::pair<double, double>> out;
  out.reserve(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const double lo_edge = (k == 0) ? lo : 0.5 * (points[k - 1] + points[k]);
    const double hi_edge = (k + 1 == points.size()) ? hi : 0.5 * (points[k] + points[k + 1]);
    const double p = (points.size() == 1)
                         ? 1.0
                         : triangle_cdf(hi_edge, lo, hi) - triangle_cdf(lo_edge, lo, hi);
    out.emplace_back(points[k], p);
  }
  return out;
}

}  // namespace detail

/// Quantized sub-hypotheses: a grid of deviation pairs with probabilities
/// from the product of the two triangular pdfs, renormalized to sum to 1.
inline std::vector<SubHypothesis> sub_hypotheses(const DeviationBounds& bounds, int n_lon,
                                                 int n_lat) {
  const auto lon = detail::quantize_axis(bounds.lon_min, bounds.lon_max, n_lon);
  const auto lat = detail::quantize_axis(bounds.lat_min, bounds.lat_max, n_lat);

  std::vector<SubHypothesis> out;
  out.reserve(lon.size() * lat.size());
  double total = 0.0;
  for (const auto& [dl, pl] : lon) {
    for (const auto& [dt, pt] : lat) {
      out.push_back({dl, dt, pl * pt});
      total += pl * pt;
    }
  }
  for (auto& sh : out) sh.probability /= total;
  return out;
}

namespace detail {

/// Joins main hypotheses and their sub-hypothesis grids into the flat
/// weighted pose set at one prediction instance.
inline HypothesisSet assemble_hypothesis_set(
    int object_id, double t_pred, const std::vector<MainHypothesis>& mains,
    const std::vector<std::vector<SubHypothesis>>& subs_per_main) {
  HypothesisSet set;
  set.object_id = object_id;
  set.t_pred = t_pred;
  for (std::size_t m = 0; m < mains.size(); ++m) {
    const VehicleState& s = mains[m].trajectory.state_at(t_pred);
    const double heading = s.psi + s.beta;  // path tangent
    const Vec2 tangent{std::cos(heading), std::sin(heading)};
    const Vec2 normal = tangent.perp();
    for (const auto& sh : subs_per_main[m]) {
      WeightedPose wp;
      const Vec2 p = Vec2{s.X, s.Y} + tangent * sh.d_lon + normal * sh.d_lat;
      wp.pose = {p.x, p.y, heading};
      wp.weight = mains[m].probability * sh.probability;
      wp.main_index = int(m);
      set.entries.push_back(wp);
    }
  }
  return set;
}

}  // namespace detail

/// Full hypothesis sets of one object for several prediction instances;
/// main-maneuver trajectories are shared across instances.
inline std::vector<HypothesisSet> hypothesis_sets(const Scene& scene, int object_id,
                                                  const std::vector<double>& instants,
                                                  const HypothesisConfig& cfg = {}) {
  for (const double t : instants) {
    if (t > cfg.horizon + 1e-9) throw Error("prediction instance beyond trajectory horizon");
  }
  const std::vector<MainHypothesis> mains = main_hypotheses(scene, object_id, cfg);
  std::vector<HypothesisSet> out;
  out.reserve(instants.size());
  for (const double t : instants) {
    std::vector<std::vector<SubHypothesis>> subs;
    subs.reserve(mains.size());
    for (const auto& mh : mains) {
      subs.push_back(sub_hypotheses(deviation_bounds(mh, t, scene.road, cfg), cfg.n_lon,
                                    cfg.n_lat));
    }
    out.push_back(detail::assemble_hypothesis_set(object_id, t, mains, subs));
  }
  return out;
}

inline HypothesisSet hypothesis_set(const Scene& scene, int object_id, double t_pred,
                                    const HypothesisConfig& cfg = {}) {
  return hypothesis_sets(scene, object_id, {t_pred}, cfg)[0];
}

}  // namespace pog
