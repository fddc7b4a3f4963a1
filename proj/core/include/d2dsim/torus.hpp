#pragma once

#include <cmath>
#include <optional>

namespace d2d {

/// Planar vector in meters.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator-(Vec2 a) { return {-a.x, -a.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Point of the square torus [-L, L)^2 in canonical form.
///
/// Only wrap() produces canonical points; the struct itself does not enforce it.
struct TorusPoint {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 vec() const { return {x, y}; }
  friend constexpr bool operator==(TorusPoint, TorusPoint) = default;
};

/// Geometric tolerance used for comparisons, in meters.
inline constexpr double kGeomTolerance = 1e-9;

/// Maps a planar point onto [-L, L)^2 by ((x + L) mod 2L) - L per axis.
/// Throws std::invalid_argument for non-finite input or L <= 0.
TorusPoint wrap(Vec2 p, double half_side);

/// Minimal-image displacement from p to q (per-axis choice among the three
/// translates q + 2Lk, k in {-1, 0, 1}).
Vec2 torus_displacement(TorusPoint p, TorusPoint q, double half_side);

/// Minimum over the nine periodic images of the Euclidean distance.
double torus_distance(TorusPoint p, TorusPoint q, double half_side);

struct BoundaryCrossing {
  Vec2 exit;     ///< where the minimal-image segment leaves [-L, L]^2
  Vec2 reentry;  ///< the same point seen from the opposite side
};

/// Exit/re-entry points of the minimal-image segment p -> q, or nothing if the
/// segment stays inside the fundamental cell. Display metadata only.
std::optional<BoundaryCrossing> boundary_crossing_points(TorusPoint p, TorusPoint q,
                                                         double half_side);

}  // namespace d2d
