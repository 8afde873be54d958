#include "pog/hypotheses.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>

using namespace pog;

namespace {

Scene follow_only_fixture() {
  Scene scene;
  Lane a;
  a.id = "lane";
  a.centerline = Polyline({{0.0, 0.0}, {80.0, 0.0}});
  a.allowed = {ManeuverLabel::kFollowLane};
  scene.road.lanes = {a};
  scene.road.road_limits.push_back(Polyline({{0.0, -1.75}, {80.0, -1.75}}));
  scene.road.road_limits.push_back(Polyline({{0.0, 1.75}, {80.0, 1.75}}));

  TrafficObject car;
  car.id = 1;
  car.lane_id = "lane";
  car.state.X = 5.0;
  car.state.v = 10.0;
  scene.objects.push_back(car);
  return scene;
}

Scene two_lane_fixture() {
  Scene scene;
  Lane a;
  a.id = "lane_a";
  a.centerline = Polyline({{0.0, 0.0}, {120.0, 0.0}});
  a.allowed = {ManeuverLabel::kFollowLane, ManeuverLabel::kChangeLane};
  a.left_neighbor = "lane_b";
  Lane b;
  b.id = "lane_b";
  b.centerline = Polyline({{0.0, 3.5}, {120.0, 3.5}});
  b.allowed = {ManeuverLabel::kFollowLane};
  scene.road.lanes = {a, b};

  TrafficObject car;
  car.id = 1;
  car.lane_id = "lane_a";
  car.state.X = 5.0;
  car.state.v = 10.0;
  scene.objects.push_back(car);
  return scene;
}

/// Triangular pdf with mode 0 on [a, b]; oracle-side evaluation.
double tri_pdf(double x, double a, double b) {
  if (x < a || x > b) return 0.0;
  const double span = b - a;
  if (x < 0.0) return 2.0 * (x - a) / (span * (0.0 - a));
  if (b == 0.0) return (x == 0.0) ? 2.0 / span : 0.0;
  return 2.0 * (b - x) / (span * b);
}

/// Midpoint-rule integral of the triangular pdf over [lo, hi].
double tri_integral(double lo, double hi, double a, double b, int n = 10000) {
  double acc = 0.0;
  const double h = (hi - lo) / n;
  for (int k = 0; k < n; ++k) {
    acc += tri_pdf(lo + (k + 0.5) * h, a, b);
  }
  return acc * h;
}

}  // namespace

TEST_CASE("single allowed maneuver gets probability one") {
  const Scene scene = follow_only_fixture();
  const auto probs = main_hypothesis_probabilities(scene, 1);
  REQUIRE(probs.size() == 1);
  CHECK(probs[0].first == ManeuverLabel::kFollowLane);
  CHECK(probs[0].second == 1.0);
}

TEST_CASE("deceleration raises the turn probability") {
  Scene scene = preset_intersection_scene();

  auto turn_prob = [&](double v_kmh, double ax) {
    scene.object(1).state.v = v_kmh / 3.6;
    scene.object(1).state.ax = ax;
    for (const auto& [label, p] : main_hypothesis_probabilities(scene, 1)) {
      if (label == ManeuverLabel::kTurnRight) return p;
    }
    FAIL("turn right not offered");
    return 0.0;
  };

  const double slow_braking = turn_prob(20.0, -2.0);
  const double fast_steady = turn_prob(50.0, 0.0);
  CHECK(slow_braking > fast_steady);
}

TEST_CASE("maneuver probabilities normalize") {
  Scene scene = preset_intersection_scene();
  for (const double v : {2.0, 8.0, 14.0}) {
    for (const double ax : {-3.0, 0.0, 2.0}) {
      for (const int id : {1, 2, 3}) {
        scene.object(id).state.v = v;
        scene.object(id).state.ax = ax;
        const auto probs = main_hypothesis_probabilities(scene, id);
        double total = 0.0;
        for (const auto& [label, p] : probs) {
          CHECK(p >= 0.0);
          CHECK(p <= 1.0);
          total += p;
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("change lane requires an adjacent lane") {
  Scene scene = follow_only_fixture();
  scene.road.lanes[0].allowed.push_back(ManeuverLabel::kChangeLane);
  // no neighbor configured: the maneuver is not instantiable
  const auto probs = main_hypothesis_probabilities(scene, 1);
  REQUIRE(probs.size() == 1);
  CHECK(probs[0].first == ManeuverLabel::kFollowLane);
}

TEST_CASE("no instantiable maneuver is an error") {
  Scene scene = follow_only_fixture();
  scene.road.lanes[0].allowed.clear();
  CHECK_THROWS_AS(main_hypothesis_probabilities(scene, 1), Error);
}

TEST_CASE("follow lane on a straight lane tracks the centerline") {
  const Scene scene = follow_only_fixture();
  const Trajectory traj = main_trajectory(scene, 1, ManeuverLabel::kFollowLane);
  for (const auto& s : traj.samples) {
    CHECK(std::abs(s.state.Y) < 0.05);
  }
  const VehicleState& end = traj.samples.back().state;
  CHECK(end.X == Catch::Approx(5.0 + 10.0 * 2.0).epsilon(0.02));
}

TEST_CASE("turn right ends aligned with the successor lane") {
  Scene scene = preset_intersection_scene();
  HypothesisConfig cfg;
  cfg.horizon = 6.0;
  const Trajectory traj = main_trajectory(scene, 1, ManeuverLabel::kTurnRight, cfg);
  const VehicleState& end = traj.samples.back().state;

  const Lane& ramp = scene.road.lane("ramp_r1");
  const auto proj = ramp.centerline.project({end.X, end.Y});
  CHECK(proj.distance < 1.0);
  const double lane_heading = ramp.centerline.heading_at(proj.s);
  CHECK(std::abs(angle_diff(end.psi, lane_heading)) < 15.0 * std::numbers::pi / 180.0);
}

TEST_CASE("bicycle turns through the junction on the single-track model") {
  Scene scene = preset_intersection_scene();
  HypothesisConfig cfg;
  cfg.horizon = 8.0;
  const Trajectory traj = main_trajectory(scene, 3, ManeuverLabel::kTurnLeft, cfg);
  const VehicleState& end = traj.samples.back().state;
  const Lane& target = scene.road.lane("turn_sl");
  const auto proj = target.centerline.project({end.X, end.Y});
  CHECK(proj.distance < 1.0);
}

TEST_CASE("lane change settles on the adjacent centerline") {
  const Scene scene = two_lane_fixture();
  HypothesisConfig cfg;
  cfg.horizon = 5.0;
  const Trajectory traj = main_trajectory(scene, 1, ManeuverLabel::kChangeLane, cfg);
  const VehicleState& end = traj.samples.back().state;
  CHECK(std::abs(end.Y - 3.5) < 0.25);
}

TEST_CASE("tracker divergence is reported") {
  Scene scene = follow_only_fixture();
  scene.objects[0].state.psi = std::numbers::pi;  // facing against the lane
  scene.objects[0].state.v = 15.0;
  CHECK_THROWS_AS(main_trajectory(scene, 1, ManeuverLabel::kFollowLane), Error);
}

TEST_CASE("deviation bounds follow the kinematic envelopes") {
  const Scene scene = follow_only_fixture();
  MainHypothesis mh;
  mh.label = ManeuverLabel::kFollowLane;
  mh.probability = 1.0;
  mh.trajectory = main_trajectory(scene, 1, ManeuverLabel::kFollowLane);

  HypothesisConfig cfg;  // a_decel 9, a_accel 4.5, a_lat 7
  const DeviationBounds b = deviation_bounds(mh, 1.0, scene.road, cfg);
  CHECK(b.lon_min == Catch::Approx(-4.5));
  CHECK(b.lon_max == Catch::Approx(2.25));
  // fixture limits sit 1.75 m to each side, closer than the 3.5 m envelope
  CHECK(b.lat_max == Catch::Approx(1.75).margin(0.05));
  CHECK(b.lat_min == Catch::Approx(-1.75).margin(0.05));

  const DeviationBounds b0 = deviation_bounds(mh, 0.0, scene.road, cfg);
  CHECK(b0.lon_min == 0.0);
  CHECK(b0.lon_max == 0.0);
  CHECK(b0.lat_min == 0.0);
  CHECK(b0.lat_max == 0.0);
}

TEST_CASE("lateral bounds clip at an asymmetric road limit") {
  Scene scene = follow_only_fixture();
  scene.road.road_limits.clear();
  scene.road.road_limits.push_back(Polyline({{0.0, 1.0}, {80.0, 1.0}}));  // 1 m to the left
  MainHypothesis mh;
  mh.trajectory = main_trajectory(scene, 1, ManeuverLabel::kFollowLane);
  const DeviationBounds b = deviation_bounds(mh, 1.0, scene.road, HypothesisConfig{});
  CHECK(b.lat_max == Catch::Approx(1.0).margin(0.01));
  CHECK(b.lat_min == Catch::Approx(-3.5));
}

TEST_CASE("braking caps the longitudinal lower bound at the distance travelled") {
  Scene scene = follow_only_fixture();
  scene.objects[0].state.v = 1.0;  // travels only ~2 m in 2 s
  MainHypothesis mh;
  mh.trajectory = main_trajectory(scene, 1, ManeuverLabel::kFollowLane);
  const DeviationBounds b = deviation_bounds(mh, 2.0, scene.road, HypothesisConfig{});
  CHECK(b.lon_min == Catch::Approx(-mh.trajectory.arc_length_to(2.0)));
  CHECK(b.lon_min > -18.0);
}

TEST_CASE("bounds grow with the prediction time") {
  const Scene scene = follow_only_fixture();
  MainHypothesis mh;
  mh.trajectory = main_trajectory(scene, 1, ManeuverLabel::kFollowLane);
  DeviationBounds prev;
  for (const double t : {0.5, 1.0, 2.0}) {
    const DeviationBounds b = deviation_bounds(mh, t, scene.road, HypothesisConfig{});
    CHECK(b.lon_min <= prev.lon_min);
    CHECK(b.lon_max >= prev.lon_max);
    CHECK(b.lat_min <= prev.lat_min);
    CHECK(b.lat_max >= prev.lat_max);
    prev = b;
  }
}

TEST_CASE("single sub-hypothesis collapses to zero deviation") {
  DeviationBounds b{-4.5, 2.25, -2.0, 2.0};
  const auto subs = sub_hypotheses(b, 1, 1);
  REQUIRE(subs.size() == 1);
  CHECK(subs[0].d_lon == 0.0);
  CHECK(subs[0].d_lat == 0.0);
  CHECK(subs[0].probability == 1.0);
}

TEST_CASE("symmetric bounds give a symmetric peaked distribution") {
  DeviationBounds b{-3.0, 3.0, -2.0, 2.0};
  const auto subs = sub_hypotheses(b, 3, 1);
  REQUIRE(subs.size() == 3);
  CHECK(subs[0].d_lon == Catch::Approx(-3.0));
  CHECK(subs[1].d_lon == 0.0);
  CHECK(subs[2].d_lon == Catch::Approx(3.0));
  CHECK(subs[1].probability > subs[0].probability);
  CHECK(subs[0].probability == Catch::Approx(subs[2].probability));
}

TEST_CASE("degenerate bounds collapse an axis") {
  DeviationBounds b{0.0, 0.0, -2.0, 2.0};
  const auto subs = sub_hypotheses(b, 9, 3);
  REQUIRE(subs.size() == 3);  // lon axis collapsed
  double total = 0.0;
  for (const auto& sh : subs) {
    CHECK(sh.d_lon == 0.0);
    total += sh.probability;
  }
  CHECK(total == Catch::Approx(1.0));
}

TEST_CASE("even or non-positive axis counts are rejected") {
  DeviationBounds b{-1.0, 1.0, -1.0, 1.0};
  CHECK_THROWS_AS(sub_hypotheses(b, 4, 3), Error);
  CHECK_THROWS_AS(sub_hypotheses(b, 3, 0), Error);
  DeviationBounds bad{0.5, 1.0, -1.0, 1.0};  // does not bracket zero
  CHECK_THROWS_AS(sub_hypotheses(bad, 3, 3), Error);
}

TEST_CASE("bin probabilities match the quadrature oracle") {
  DeviationBounds b{-4.5, 2.25, -2.0, 2.0};
  const auto subs = sub_hypotheses(b, 3, 3);
  REQUIRE(subs.size() == 9);

  // recover the per-axis grids from the returned deviations
  std::vector<double> lon_pts = {subs[0].d_lon, subs[3].d_lon, subs[6].d_lon};
  std::vector<double> lat_pts = {subs[0].d_lat, subs[1].d_lat, subs[2].d_lat};

  auto cell_edges = [](const std::vector<double>& pts, double lo, double hi) {
    std::vector<double> e{lo};
    for (std::size_t k = 1; k < pts.size(); ++k) e.push_back(0.5 * (pts[k - 1] + pts[k]));
    e.push_back(hi);
    return e;
  };
  const auto lon_e = cell_edges(lon_pts, b.lon_min, b.lon_max);
  const auto lat_e = cell_edges(lat_pts, b.lat_min, b.lat_max);

  double total = 0.0;
  std::vector<double> expected;
  for (std::size_t i = 0; i < lon_pts.size(); ++i) {
    for (std::size_t j = 0; j < lat_pts.size(); ++j) {
      const double p = tri_integral(lon_e[i], lon_e[i + 1], b.lon_min, b.lon_max) *
                       tri_integral(lat_e[j], lat_e[j + 1], b.lat_min, b.lat_max);
      expected.push_back(p);
      total += p;
    }
  }
  for (auto& p : expected) p /= total;

  for (std::size_t k = 0; k < subs.size(); ++k) {
    CHECK(std::abs(subs[k].probability - expected[k]) < 1e-6);
  }
}

TEST_CASE("hypothesis set weights sum to one across instances") {
  const Scene scene = preset_intersection_scene();
  for (const int id : {1, 2, 3}) {
    const auto sets = hypothesis_sets(scene, id, {0.5, 1.0, 2.0});
    for (const auto& set : sets) {
      CHECK(std::abs(set.weight_sum() - 1.0) < 1e-9);
      CHECK(!set.entries.empty());
    }
  }
}

TEST_CASE("single main and sub reproduces the trajectory pose") {
  const Scene scene = follow_only_fixture();
  HypothesisConfig cfg;
  cfg.n_lon = 1;
  cfg.n_lat = 1;
  const HypothesisSet set = hypothesis_set(scene, 1, 1.0, cfg);
  REQUIRE(set.entries.size() == 1);
  CHECK(set.entries[0].weight == Catch::Approx(1.0));
  const Trajectory traj = main_trajectory(scene, 1, ManeuverLabel::kFollowLane, cfg);
  const VehicleState& s = traj.state_at(1.0);
  CHECK(set.entries[0].pose.x == Catch::Approx(s.X));
  CHECK(set.entries[0].pose.y == Catch::Approx(s.Y));
}

TEST_CASE("zero-deviation entry lies exactly on the main trajectory") {
  const Scene scene = follow_only_fixture();
  HypothesisConfig cfg;
  cfg.n_lon = 9;
  cfg.n_lat = 7;
  const HypothesisSet set = hypothesis_set(scene, 1, 1.0, cfg);
  const Trajectory traj = main_trajectory(scene, 1, ManeuverLabel::kFollowLane, cfg);
  const VehicleState& s = traj.state_at(1.0);
  bool found = false;
  for (const auto& e : set.entries) {
    if (std::abs(e.pose.x - s.X) < 1e-12 && std::abs(e.pose.y - s.Y) < 1e-12) found = true;
  }
  CHECK(found);
}

TEST_CASE("assembled weights factor into main times sub") {
  // three mains with probabilities (0.5, 0.3, 0.2), four uniform subs each
  std::vector<MainHypothesis> mains(3);
  const double probs[] = {0.5, 0.3, 0.2};
  for (int m = 0; m < 3; ++m) {
    mains[m].probability = probs[m];
    mains[m].trajectory.dt = 1.0;
    mains[m].trajectory.samples = {{0.0, VehicleState{}}, {1.0, VehicleState{}}};
  }
  std::vector<std::vector<SubHypothesis>> subs(3);
  for (auto& list : subs) {
    for (int k = 0; k < 4; ++k) list.push_back({double(k), 0.0, 0.25});
  }
  const HypothesisSet set = pog::detail::assemble_hypothesis_set(1, 1.0, mains, subs);
  REQUIRE(set.entries.size() == 12);
  double per_main[3] = {0, 0, 0};
  for (const auto& e : set.entries) per_main[e.main_index] += e.weight;
  for (int m = 0; m < 3; ++m) {
    CHECK(std::abs(per_main[m] - probs[m]) < 1e-9);
  }
  CHECK(std::abs(set.weight_sum() - 1.0) < 1e-9);
}
