#include "pog/grid.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <set>

#include "pog/rng.hpp"

using namespace pog;

namespace {

GridSpec small_grid() {
  GridSpec spec;
  spec.cols = 40;
  spec.rows = 40;
  spec.cell_length = 0.5;
  spec.cell_width = 0.5;
  return spec;
}

/// Independent containment check for the brute-force POG oracle: point in
/// oriented rectangle via an explicit corner/edge formulation, plus the
/// anchor-cell rule.
bool oracle_covers(const Pose2& pose, const Footprint& fp, const GridSpec& spec,
                   CellIndex cell) {
  const Vec2 center = spec.cell_center(cell);
  const Vec2 rel = center - Vec2{pose.x, pose.y};
  const Vec2 axis_u{std::cos(pose.heading), std::sin(pose.heading)};
  const Vec2 axis_v = axis_u.perp();
  const double u = rel.dot(axis_u);
  const double v = rel.dot(axis_v);
  if (u >= -fp.length / 2 && u < fp.length / 2 && v >= -fp.width / 2 && v < fp.width / 2) {
    return true;
  }
  const auto anchor = spec.cell_at(pose.x, pose.y);
  return anchor && *anchor == cell;
}

/// Eq.-style brute force: loops over every (object, hypothesis, cell) triple
/// through the binary indicator vector.
PredictedOccupancyGrid brute_force_pog(const std::vector<HypothesisSet>& sets,
                                       const std::vector<Footprint>& fps, const GridSpec& spec,
                                       double t_pred) {
  PredictedOccupancyGrid pog(spec, t_pred);
  for (int j = 0; j < spec.rows; ++j) {
    for (int i = 0; i < spec.cols; ++i) {
      const CellIndex c{i, j};
      double total = 0.0;
      for (std::size_t l = 0; l < sets.size(); ++l) {
        double dot = 0.0;
        for (const auto& e : sets[l].entries) {
          if (oracle_covers(e.pose, fps[l], spec, c)) dot += e.weight;
        }
        total += dot;
      }
      pog.at(c) = std::min(1.0, total);
    }
  }
  return pog;
}

HypothesisSet make_set(int id, double t, std::vector<WeightedPose> entries) {
  HypothesisSet set;
  set.object_id = id;
  set.t_pred = t;
  set.entries = std::move(entries);
  return set;
}

}  // namespace

TEST_CASE("axis-aligned car footprint covers 9x4 cells") {
  const GridSpec spec = small_grid();
  // footprint center on a cell center
  const Pose2 pose{5.25, 5.25, 0.0};
  const auto cells = rasterize_footprint(pose, {4.5, 2.0}, spec);
  CHECK(cells.size() == 36);
  int i_min = 1000, i_max = -1, j_min = 1000, j_max = -1;
  for (const auto c : cells) {
    i_min = std::min(i_min, c.i);
    i_max = std::max(i_max, c.i);
    j_min = std::min(j_min, c.j);
    j_max = std::max(j_max, c.j);
  }
  CHECK(i_max - i_min + 1 == 9);
  CHECK(j_max - j_min + 1 == 4);
}

TEST_CASE("tiny footprint still occupies its anchor cell") {
  const GridSpec spec = small_grid();
  const auto cells = rasterize_footprint({7.1, 3.3, 0.4}, {0.2, 0.1}, spec);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0] == CellIndex{14, 6});
}

TEST_CASE("rotation by pi keeps the cell set") {
  const GridSpec spec = small_grid();
  const Footprint fp{4.5, 2.0};
  const Pose2 a{7.13, 6.41, 0.37};
  const Pose2 b{7.13, 6.41, 0.37 + std::numbers::pi};
  const auto ca = rasterize_footprint(a, fp, spec);
  const auto cb = rasterize_footprint(b, fp, spec);
  CHECK(ca == cb);
}

TEST_CASE("raster clips to the grid") {
  const GridSpec spec = small_grid();
  const auto outside = rasterize_footprint({-30.0, -30.0, 0.0}, {4.5, 2.0}, spec);
  CHECK(outside.empty());
  const auto edge = rasterize_footprint({0.0, 5.0, 0.0}, {4.5, 2.0}, spec);
  CHECK(!edge.empty());
  for (const auto c : edge) CHECK(spec.contains(c));
}

TEST_CASE("AOG carries the object attributes") {
  Scene scene;
  scene.road.road_limits.push_back(Polyline({{0.0, 0.25}, {19.9, 0.25}}));
  TrafficObject car;
  car.id = 1;
  car.state.X = 10.0;
  car.state.Y = 10.0;
  car.state.v = 10.0;
  car.state.psi = 0.2;
  car.state.ax = 1.0;
  car.state.ay = 0.0;
  scene.objects.push_back(car);

  const GridSpec spec = small_grid();
  const AugmentedOccupancyGrid aog = build_aog(scene, spec);

  const auto cells = rasterize_footprint({10.0, 10.0, 0.2}, car.footprint, spec);
  for (const auto c : cells) {
    CHECK(aog.at(c, 0) == 1.0);
    CHECK(aog.at(c, 1) == 10.0);
    CHECK(aog.at(c, 2) == 0.2);
    CHECK(aog.at(c, 3) == 1.0);
    CHECK(aog.at(c, 4) == 0.0);
  }
  // road-limit row: [1,0,0,0,0]
  CHECK(aog.at({5, 0}, 0) == 1.0);
  CHECK(aog.at({5, 0}, 1) == 0.0);
  // everything else zero
  CHECK(aog.at({5, 30}, 0) == 0.0);
}

TEST_CASE("empty scene leaves only road limits") {
  Scene scene;
  scene.road.road_limits.push_back(Polyline({{0.0, 0.25}, {19.9, 0.25}}));
  const AugmentedOccupancyGrid aog = build_aog(scene, small_grid());
  double sum = 0.0;
  for (const double x : aog.data) sum += std::abs(x);
  const auto limit_cells = road_limit_cells(scene.road, small_grid());
  CHECK(sum == double(limit_cells.size()));
}

TEST_CASE("single certain hypothesis paints its footprint") {
  const GridSpec spec = small_grid();
  const Footprint fp{4.5, 2.0};
  const auto set = make_set(1, 1.0, {{{10.0, 10.0, 0.0}, 1.0, 0}});
  const PredictedOccupancyGrid pog = build_pog({set}, {fp}, spec, 1.0);
  const auto cells = rasterize_footprint({10.0, 10.0, 0.0}, fp, spec);
  double total = 0.0;
  for (const double p : pog.p) total += p;
  CHECK(total == double(cells.size()));
  for (const auto c : cells) CHECK(pog.at(c) == 1.0);
}

TEST_CASE("crash overlap clamps at one") {
  const GridSpec spec = small_grid();
  const Footprint fp{0.4, 0.4};  // single cell
  // two objects, each with 0.6 mass on the same cell
  const auto set1 = make_set(1, 1.0, {{{10.1, 10.1, 0.0}, 0.6, 0}, {{3.1, 3.1, 0.0}, 0.4, 0}});
  const auto set2 = make_set(2, 1.0, {{{10.1, 10.1, 0.0}, 0.6, 0}, {{5.1, 5.1, 0.0}, 0.4, 0}});
  const PredictedOccupancyGrid pog = build_pog({set1, set2}, {fp, fp}, spec, 1.0);
  CHECK(pog.at(*spec.cell_at(10.1, 10.1)) == 1.0);
  CHECK(pog.at(*spec.cell_at(3.1, 3.1)) == Catch::Approx(0.4));
}

TEST_CASE("weight-sum violation fails before any cell is written") {
  const GridSpec spec = small_grid();
  const auto bad = make_set(1, 1.0, {{{10.0, 10.0, 0.0}, 0.7, 0}});
  CHECK_THROWS_AS(build_pog({bad}, {Footprint{}}, spec, 1.0), Error);
  const auto mismatch = make_set(1, 2.0, {{{10.0, 10.0, 0.0}, 1.0, 0}});
  CHECK_THROWS_AS(build_pog({mismatch}, {Footprint{}}, spec, 1.0), Error);
}

TEST_CASE("single-cell footprints conserve the unit mass exactly") {
  const GridSpec spec = small_grid();
  const Footprint fp{0.3, 0.3};
  // binary-fraction weights at distinct cells: the sum over the grid is exact
  std::vector<WeightedPose> entries;
  const double w[4] = {0.5, 0.25, 0.125, 0.125};
  for (int k = 0; k < 4; ++k) {
    entries.push_back({{2.25 + 2.0 * k, 6.25, 0.0}, w[k], 0});
  }
  const PredictedOccupancyGrid pog = build_pog({make_set(1, 0.5, entries)}, {fp}, spec, 0.5);
  double total = 0.0;
  for (const double p : pog.p) total += p;
  CHECK(total == 1.0);
}

TEST_CASE("POG equals the brute-force triple loop on random instances") {
  GridSpec spec;
  spec.cols = 10;
  spec.rows = 10;
  spec.cell_length = 1.0;
  spec.cell_width = 1.0;

  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const int n_objects = 1 + int(rng.below(3));
    std::vector<HypothesisSet> sets;
    std::vector<Footprint> fps;
    for (int l = 0; l < n_objects; ++l) {
      const int n_hyp = 1 + int(rng.below(12));
      std::vector<WeightedPose> entries;
      double total = 0.0;
      for (int s = 0; s < n_hyp; ++s) {
        WeightedPose wp;
        wp.pose = {rng.uniform(-2.0, 12.0), rng.uniform(-2.0, 12.0),
                   rng.uniform(0.0, 6.28)};
        wp.weight = rng.uniform(0.05, 1.0);
        total += wp.weight;
        entries.push_back(wp);
      }
      for (auto& e : entries) e.weight /= total;
      // fix rounding so the sum is exactly 1 within tolerance
      sets.push_back(make_set(l, 1.0, entries));
      fps.push_back({rng.uniform(0.8, 4.0), rng.uniform(0.5, 2.0)});
    }
    const PredictedOccupancyGrid fast = build_pog(sets, fps, spec, 1.0);
    const PredictedOccupancyGrid slow = brute_force_pog(sets, fps, spec, 1.0);
    for (std::size_t k = 0; k < fast.p.size(); ++k) {
      CHECK(fast.p[k] == slow.p[k]);
      CHECK(fast.p[k] >= 0.0);
      CHECK(fast.p[k] <= 1.0);
    }
  }
}

TEST_CASE("object order does not change the POG") {
  const GridSpec spec = small_grid();
  const Footprint fp{2.0, 1.0};
  const auto set1 = make_set(1, 1.0, {{{8.0, 8.0, 0.3}, 0.5, 0}, {{9.0, 8.5, 0.1}, 0.5, 0}});
  const auto set2 = make_set(2, 1.0, {{{8.5, 8.2, 1.2}, 0.25, 0}, {{7.5, 7.9, 0.9}, 0.75, 0}});
  const PredictedOccupancyGrid a = build_pog({set1, set2}, {fp, fp}, spec, 1.0);
  const PredictedOccupancyGrid b = build_pog({set2, set1}, {fp, fp}, spec, 1.0);
  for (std::size_t k = 0; k < a.p.size(); ++k) {
    CHECK(a.p[k] == Catch::Approx(b.p[k]).margin(1e-12));
  }
}

TEST_CASE("adding an object never decreases a cell") {
  const GridSpec spec = small_grid();
  const Footprint fp{2.0, 1.0};
  const auto set1 = make_set(1, 1.0, {{{8.0, 8.0, 0.3}, 1.0, 0}});
  const auto set2 = make_set(2, 1.0, {{{8.5, 8.2, 1.2}, 1.0, 0}});
  const PredictedOccupancyGrid one = build_pog({set1}, {fp}, spec, 1.0);
  const PredictedOccupancyGrid two = build_pog({set1, set2}, {fp, fp}, spec, 1.0);
  for (std::size_t k = 0; k < one.p.size(); ++k) {
    CHECK(two.p[k] >= one.p[k]);
  }
}

TEST_CASE("road-limit cells read one in the POG") {
  const GridSpec spec = small_grid();
  RoadNetwork road;
  road.road_limits.push_back(Polyline({{0.0, 0.25}, {19.9, 0.25}}));
  const auto limits = road_limit_cells(road, spec);
  const auto set = make_set(1, 1.0, {{{10.0, 10.0, 0.0}, 1.0, 0}});
  const PredictedOccupancyGrid pog = build_pog({set}, {Footprint{}}, spec, 1.0, limits);
  for (const auto c : limits) CHECK(pog.at(c) == 1.0);
}

TEST_CASE("occupancy indicator matches the rasterizer") {
  const GridSpec spec = small_grid();
  const Footprint fp{3.0, 1.4};
  const auto set = make_set(
      1, 1.0, {{{6.0, 6.0, 0.7}, 0.5, 0}, {{9.0, 9.0, 2.1}, 0.3, 0}, {{12.0, 6.0, 4.0}, 0.2, 0}});
  for (int j = 0; j < spec.rows; j += 3) {
    for (int i = 0; i < spec.cols; i += 3) {
      const auto r = occupancy_indicator(set, fp, spec, {i, j});
      for (std::size_t s = 0; s < set.entries.size(); ++s) {
        const auto cells = rasterize_footprint(set.entries[s].pose, fp, spec);
        const bool in_raster =
            std::find(cells.begin(), cells.end(), CellIndex{i, j}) != cells.end();
        CHECK(bool(r[s]) == in_raster);
      }
    }
  }
}
