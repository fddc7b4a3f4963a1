#include "d2dsim/torus.hpp"

#include <algorithm>
#include <stdexcept>

namespace d2d {
namespace {

double wrap_axis(double x, double half_side) {
  if (x >= -half_side && x < half_side) return x;
  const double side = 2.0 * half_side;
  double r = std::fmod(x + half_side, side);
  if (r < 0.0) r += side;
  double out = r - half_side;
  // The closed upper end is identified with the lower one.
  if (out >= half_side) out = -half_side;
  return out;
}

double min_image_axis(double from, double to, double half_side) {
  const double side = 2.0 * half_side;
  const double raw = to - from;
  double best = raw;
  for (double shift : {-side, side}) {
    const double d = raw + shift;
    if (std::abs(d) < std::abs(best)) best = d;
  }
  return best;
}

}  // namespace

TorusPoint wrap(Vec2 p, double half_side) {
  if (!(half_side > 0.0) || !std::isfinite(half_side)) {
    throw std::invalid_argument("wrap: half side must be positive and finite");
  }
  if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
    throw std::invalid_argument("wrap: point must be finite");
  }
  return {wrap_axis(p.x, half_side), wrap_axis(p.y, half_side)};
}

Vec2 torus_displacement(TorusPoint p, TorusPoint q, double half_side) {
  return {min_image_axis(p.x, q.x, half_side), min_image_axis(p.y, q.y, half_side)};
}

double torus_distance(TorusPoint p, TorusPoint q, double half_side) {
  return norm(torus_displacement(p, q, half_side));
}

std::optional<BoundaryCrossing> boundary_crossing_points(TorusPoint p, TorusPoint q,
                                                         double half_side) {
  const Vec2 d = torus_displacement(p, q, half_side);
  const Vec2 end = p.vec() + d;
  const double lim = half_side;
  const bool out_x = end.x < -lim || end.x > lim;
  const bool out_y = end.y < -lim || end.y > lim;
  if (!out_x && !out_y) return std::nullopt;

  // Intercept parameter along p + t d for each boundary line that is crossed.
  double t = 1.0;
  if (out_x) t = std::min(t, ((end.x > lim ? lim : -lim) - p.x) / d.x);
  if (out_y) t = std::min(t, ((end.y > lim ? lim : -lim) - p.y) / d.y);
  Vec2 exit = p.vec() + t * d;

  Vec2 reentry = exit;
  const double side = 2.0 * half_side;
  const double tol = kGeomTolerance * std::max(1.0, half_side);
  if (out_x && std::abs(std::abs(exit.x) - lim) <= tol) {
    exit.x = exit.x > 0 ? lim : -lim;
    reentry.x = exit.x > 0 ? exit.x - side : exit.x + side;
  }
  if (out_y && std::abs(std::abs(exit.y) - lim) <= tol) {
    exit.y = exit.y > 0 ? lim : -lim;
    reentry.y = exit.y > 0 ? exit.y - side : exit.y + side;
  }
  return BoundaryCrossing{exit, reentry};
}

}  // namespace d2d
