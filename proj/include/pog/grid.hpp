#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "pog/error.hpp"
#include "pog/geometry.hpp"
#include "pog/hypotheses.hpp"
#include "pog/scenario.hpp"

namespace pog {

struct CellIndex {
  int i = 0;  // column
  int j = 0;  // row
  auto operator<=>(const CellIndex&) const = default;
};

struct GridSpec {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double cell_length = 0.5;  // [m] along x
  double cell_width = 0.5;   // [m] along y
  int cols = 80;             // I
  int rows = 80;             // J

  bool operator==(const GridSpec&) const = default;

  std::size_t cell_count() const { return std::size_t(cols) * std::size_t(rows); }

  std::size_t index(CellIndex c) const { return std::size_t(c.j) * cols + c.i; }

  bool contains(CellIndex c) const {
    return c.i >= 0 && c.i < cols && c.j >= 0 && c.j < rows;
  }

  std::optional<CellIndex> cell_at(double x, double y) const {
    const CellIndex c{int(std::floor((x - origin_x) / cell_length)),
                      int(std::floor((y - origin_y) / cell_width))};
    if (!contains(c)) return std::nullopt;
    return c;
  }

  Vec2 cell_center(CellIndex c) const {
    return {origin_x + (c.i + 0.5) * cell_length, origin_y + (c.j + 0.5) * cell_width};
  }
};

constexpr int kAogAttributes = 5;  // occupancy, v, psi, ax, ay

/// Current-scene grid: per cell [occupancy, speed, heading, longitudinal
/// acceleration, lateral acceleration]; road-limit cells carry [1,0,0,0,0].
struct AugmentedOccupancyGrid {
  GridSpec spec;
  std::vector<double> data;  // cell-major, kAogAttributes values per cell

  explicit AugmentedOccupancyGrid(GridSpec s = {})
      : spec(s), data(s.cell_count() * kAogAttributes, 0.0) {}

  double& at(CellIndex c, int attr) { return data[spec.index(c) * kAogAttributes + attr]; }
  double at(CellIndex c, int attr) const {
    return data[spec.index(c) * kAogAttributes + attr];
  }

  /// The flattened attribute array is the feature vector of every
  /// per-cell classifier.
  const std::vector<double>& features() const { return data; }
};

/// Per-cell occupancy probability at one prediction instance.
struct PredictedOccupancyGrid {
  GridSpec spec;
  double t_pred = 0.0;
  std::vector<double> p;

  explicit PredictedOccupancyGrid(GridSpec s = {}, double t = 0.0)
      : spec(s), t_pred(t), p(s.cell_count(), 0.0) {}

  double& at(CellIndex c) { return p[spec.index(c)]; }
  double at(CellIndex c) const { return p[spec.index(c)]; }
};

namespace detail {

/// Cell-center containment in the oriented footprint rectangle. Half-open in
/// the footprint's local frame so grids of touching footprints do not double
/// count boundary centers.
inline bool footprint_covers(const Pose2& pose, const Footprint& fp, Vec2 center) {
  const double dx = center.x - pose.x;
  const double dy = center.y - pose.y;
  const double c = std::cos(pose.heading), s = std::sin(pose.heading);
  const double u = c * dx + s * dy;
  const double v = -s * dx + c * dy;
  return u >= -fp.length / 2 && u < fp.length / 2 && v >= -fp.width / 2 && v < fp.width / 2;
}

}  // namespace detail

/// Cells whose center lies inside the oriented rectangle, clipped to the
/// grid; the cell containing the reference point itself is always included.
/// Returned sorted row-major.
inline std::vector<CellIndex> rasterize_footprint(const Pose2& pose, const Footprint& fp,
                                                  const GridSpec& spec) {
  if (fp.length <= 0.0 || fp.width <= 0.0) throw Error("footprint must be positive");

  const double radius = 0.5 * std::hypot(fp.length, fp.width);
  const int i_lo = std::max(0, int(std::floor((pose.x - radius - spec.origin_x) / spec.cell_length)));
  const int i_hi = std::min(spec.cols - 1,
                            int(std::floor((pose.x + radius - spec.origin_x) / spec.cell_length)));
  const int j_lo = std::max(0, int(std::floor((pose.y - radius - spec.origin_y) / spec.cell_width)));
  const int j_hi = std::min(spec.rows - 1,
                            int(std::floor((pose.y + radius - spec.origin_y) / spec.cell_width)));

  std::vector<CellIndex> out;
  for (int j = j_lo; j <= j_hi; ++j) {
    for (int i = i_lo; i <= i_hi; ++i) {
      const CellIndex c{i, j};
      if (detail::footprint_covers(pose, fp, spec.cell_center(c))) out.push_back(c);
    }
  }
  if (const auto anchor = spec.cell_at(pose.x, pose.y)) {
    if (!std::binary_search(out.begin(), out.end(), *anchor,
                            [&](CellIndex a, CellIndex b) { return spec.index(a) < spec.index(b); })) {
      out.push_back(*anchor);
      std::sort(out.begin(), out.end(),
                [&](CellIndex a, CellIndex b) { return spec.index(a) < spec.index(b); });
    }
  }
  return out;
}

/// Cells traversed by a polyline, from sub-cell sampling along each segment.
inline std::vector<CellIndex> rasterize_polyline(const Polyline& line, const GridSpec& spec) {
  const double step = 0.5 * std::min(spec.cell_length, spec.cell_width);
  std::vector<CellIndex> out;
  for (double s = 0.0;; s += step) {
    const bool last = s >= line.length();
    const Vec2 p = line.point_at(last ? line.length() : s);
    if (const auto c = spec.cell_at(p.x, p.y)) out.push_back(*c);
    if (last) break;
  }
  std::sort(out.begin(), out.end(),
            [&](CellIndex a, CellIndex b) { return spec.index(a) < spec.index(b); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// All road-limit cells of a network on the given grid.
inline std::vector<CellIndex> road_limit_cells(const RoadNetwork& road, const GridSpec& spec) {
  std::vector<CellIndex> out;
  for (const auto& limit : road.road_limits) {
    const auto cells = rasterize_polyline(limit, spec);
    out.insert(out.end(), cells.begin(), cells.end());
  }
  std::sort(out.begin(), out.end(),
            [&](CellIndex a, CellIndex b) { return spec.index(a) < spec.index(b); });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Augmented Occupancy Grid of the current scene: road limits as [1,0,0,0,0],
/// object footprints carrying the object's state attributes (objects win on
/// overlap, later objects overwrite earlier ones).
inline AugmentedOccupancyGrid build_aog(const Scene& scene, const GridSpec& spec) {
  AugmentedOccupancyGrid aog(spec);
  for (const CellIndex c : road_limit_cells(scene.road, spec)) {
    aog.at(c, 0) = 1.0;
  }
  for (const auto& obj : scene.objects) {
    const Pose2 pose{obj.state.X, obj.state.Y, obj.state.psi};
    for (const CellIndex c : rasterize_footprint(pose, obj.footprint, spec)) {
      aog.at(c, 0) = 1.0;
      aog.at(c, 1) = obj.state.v;
      aog.at(c, 2) = obj.state.psi;
      aog.at(c, 3) = obj.state.ax;
      aog.at(c, 4) = obj.state.ay;
    }
  }
  return aog;
}

/// Binary occupancy vector of one cell over all S hypotheses of one object.
inline std::vector<std::uint8_t> occupancy_indicator(const HypothesisSet& set,
                                                     const Footprint& fp, const GridSpec& spec,
                                                     CellIndex cell) {
  std::vector<std::uint8_t> r(set.entries.size(), 0);
  const Vec2 center = spec.cell_center(cell);
  for (std::size_t s = 0; s < set.entries.size(); ++s) {
    const Pose2& pose = set.entries[s].pose;
    bool covered = detail::footprint_covers(pose, fp, center);
    if (!covered) {
      // anchor-cell guarantee of the rasterizer
      if (const auto anchor = spec.cell_at(pose.x, pose.y); anchor && *anchor == cell) {
        covered = true;
      }
    }
    r[s] = covered ? 1 : 0;
  }
  return r;
}

/// Ground-truth POG: per cell the weight mass of all hypotheses of all
/// objects covering it, clamped at 1 (overlapping objects represent a crash);
/// road-limit cells are forced to probability 1.
inline PredictedOccupancyGrid build_pog(const std::vector<HypothesisSet>& sets,
                                        const std::vector<Footprint>& footprints,
                                        const GridSpec& spec, double t_pred,
                                        const std::vector<CellIndex>& limit_cells = {}) {
  if (sets.size() != footprints.size()) {
    throw Error("build_pog: one footprint per hypothesis set required");
  }
  for (const auto& set : sets) {
    if (std::abs(set.weight_sum() - 1.0) > 1e-9) {
      throw Error("build_pog: hypothesis weights of object " +
                  std::to_string(set.object_id) + " do not sum to 1");
    }
    if (std::abs(set.t_pred - t_pred) > 1e-9) {
      throw Error("build_pog: hypothesis set instance does not match t_pred");
    }
  }

  PredictedOccupancyGrid pog(spec, t_pred);
  std::vector<double> contribution(spec.cell_count());
  for (std::size_t l = 0; l < sets.size(); ++l) {
    std::fill(contribution.begin(), contribution.end(), 0.0);
    for (const auto& entry : sets[l].entries) {
      for (const CellIndex c : rasterize_footprint(entry.pose, footprints[l], spec)) {
        contribution[spec.index(c)] += entry.weight;
      }
    }
    for (std::size_t k = 0; k < pog.p.size(); ++k) pog.p[k] += contribution[k];
  }
  for (auto& p : pog.p) p = std::min(1.0, p);
  for (const CellIndex c : limit_cells) pog.p[spec.index(c)] = 1.0;
  return pog;
}

}  // namespace pog
