#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

namespace pog {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double cross(Vec2 o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  Vec2 normalized() const {
    const double n = norm();
    return n > 0.0 ? Vec2{x / n, y / n} : Vec2{1.0, 0.0};
  }
  // counterclockwise perpendicular
  Vec2 perp() const { return {-y, x}; }
  Vec2 rotated(double angle) const {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * x - s * y, s * x + c * y};
  }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;

  Vec2 position() const { return {x, y}; }
  Vec2 direction() const { return {std::cos(heading), std::sin(heading)}; }
};

inline double wrap_angle(double a) {
  a = std::fmod(a + std::numbers::pi, 2.0 * std::numbers::pi);
  if (a < 0.0) a += 2.0 * std::numbers::pi;
  return a - std::numbers::pi;
}

inline double angle_diff(double a, double b) { return wrap_angle(a - b); }

/// Open polyline with precomputed cumulative arc length. Queries are in
/// arc-length coordinates s in [0, length()].
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points) : pts_(std::move(points)) {
    if (pts_.size() < 2) throw std::invalid_argument("Polyline: need >= 2 points");
    cum_.resize(pts_.size());
    cum_[0] = 0.0;
    for (std::size_t i = 1; i < pts_.size(); ++i) {
      cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
    }
    if (cum_.back() <= 0.0) throw std::invalid_argument("Polyline: zero length");
  }

  const std::vector<Vec2>& points() const { return pts_; }
  double length() const { return cum_.back(); }
  Vec2 front() const { return pts_.front(); }
  Vec2 back() const { return pts_.back(); }

  Vec2 point_at(double s) const {
    const auto [i, t] = locate(s);
    return pts_[i] + (pts_[i + 1] - pts_[i]) * t;
  }

  Vec2 tangent_at(double s) const {
    const auto [i, t] = locate(s);
    (void)t;
    return (pts_[i + 1] - pts_[i]).normalized();
  }

  double heading_at(double s) const {
    const Vec2 d = tangent_at(s);
    return std::atan2(d.y, d.x);
  }

  struct Projection {
    double s = 0.0;        // arc length of the closest point
    double distance = 0.0; // unsigned distance
    double lateral = 0.0;  // signed offset, positive left of travel direction
  };

  Projection project(Vec2 p) const { return project_range(p, 0.0, length()); }

  /// Restricted projection around a previous arc-length estimate; used by
  /// trackers that walk monotonically along the path.
  Projection project_near(Vec2 p, double s_hint, double window) const {
    return project_range(p, s_hint - window, s_hint + window);
  }

  /// First intersection of the ray (origin, direction) with this polyline.
  /// Returns the ray parameter (distance along the ray), if any.
  std::optional<double> ray_hit(Vec2 origin, Vec2 dir) const {
    std::optional<double> best;
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      const Vec2 a = pts_[i], b = pts_[i + 1];
      const Vec2 ab = b - a;
      const double denom = dir.cross(ab);
      if (std::abs(denom) < 1e-12) continue;
      const Vec2 ao = a - origin;
      const double t = ao.cross(ab) / denom;  // along ray
      const double u = ao.cross(dir) / denom; // along segment
      if (t >= 0.0 && u >= 0.0 && u <= 1.0) {
        if (!best || t < *best) best = t;
      }
    }
    return best;
  }

 private:
  std::pair<std::size_t, double> locate(double s) const {
    s = std::clamp(s, 0.0, length());
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    std::size_t i = (it == cum_.begin()) ? 0 : std::size_t(it - cum_.begin()) - 1;
    if (i + 1 >= pts_.size()) i = pts_.size() - 2;
    const double seg = cum_[i + 1] - cum_[i];
    const double t = seg > 0.0 ? (s - cum_[i]) / seg : 0.0;
    return {i, t};
  }

  Projection project_range(Vec2 p, double s_lo, double s_hi) const {
    s_lo = std::clamp(s_lo, 0.0, length());
    s_hi = std::clamp(s_hi, 0.0, length());
    Projection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
      if (cum_[i + 1] < s_lo || cum_[i] > s_hi) continue;
      const Vec2 a = pts_[i], b = pts_[i + 1];
      const Vec2 ab = b - a;
      const double len2 = ab.dot(ab);
      double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
      const Vec2 q = a + ab * t;
      const double d = (p - q).norm();
      if (d < best.distance) {
        best.distance = d;
        best.s = cum_[i] + t * std::sqrt(len2);
        const Vec2 tangent = ab.normalized();
        best.lateral = tangent.cross(p - q) >= 0.0 ? d : -d;
      }
    }
    return best;
  }

  std::vector<Vec2> pts_;
  std::vector<double> cum_;
};

/// Cubic Bezier sampled into a point list; tangent magnitudes control how far
/// the curve follows the end directions.
inline std::vector<Vec2> sample_bezier(Vec2 p0, Vec2 t0, Vec2 p3, Vec2 t3,
                                       double pull, int n_samples) {
  const Vec2 p1 = p0 + t0.normalized() * pull;
  const Vec2 p2 = p3 - t3.normalized() * pull;
  std::vector<Vec2> out;
  out.reserve(std::size_t(n_samples) + 1);
  for (int k = 0; k <= n_samples; ++k) {
    const double u = double(k) / n_samples;
    const double v = 1.0 - u;
    const Vec2 q = p0 * (v * v * v) + p1 * (3.0 * v * v * u) +
                   p2 * (3.0 * v * u * u) + p3 * (u * u * u);
    out.push_back(q);
  }
  return out;
}

}  // namespace pog
