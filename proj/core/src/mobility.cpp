#include "d2dsim/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>

namespace d2d {

StreetPosition Path::start() const {
  const DirectedStreet& l = legs.at(0);
  return {l.street, l.from, l.to, start_p};
}

StreetPosition Path::end() const {
  const DirectedStreet& l = legs.at(legs.size() - 1);
  return {l.street, l.from, l.to, end_p};
}

std::vector<VertexId> Path::crossings() const {
  std::vector<VertexId> out;
  for (std::size_t i = 0; i + 1 < legs.size(); ++i) out.push_back(legs[i].to);
  return out;
}

double path_length(const Path& path, const StreetGraph& g) {
  if (path.empty()) return 0.0;
  if (path.legs.size() == 1) {
    return (path.end_p - path.start_p) * g.street(path.legs[0].street).length;
  }
  double total = (1.0 - path.start_p) * g.street(path.legs.front().street).length;
  for (std::size_t i = 1; i + 1 < path.legs.size(); ++i) total += g.street(path.legs[i].street).length;
  total += path.end_p * g.street(path.legs.back().street).length;
  return total;
}

Path reverse_path(const Path& path) {
  Path out;
  out.legs.reserve(path.legs.size());
  for (auto it = path.legs.rbegin(); it != path.legs.rend(); ++it) {
    out.legs.push_back({it->street, it->to, it->from});
  }
  out.start_p = 1.0 - path.end_p;
  out.end_p = 1.0 - path.start_p;
  return out;
}

namespace {

struct Hop {
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  StreetId street = 0;
};

void drop_empty_end_legs(Path& path) {
  if (path.legs.size() > 1 && path.end_p <= 0.0) {
    path.legs.pop_back();
    path.end_p = 1.0;
  }
  if (path.legs.size() > 1 && path.start_p >= 1.0) {
    path.legs.erase(path.legs.begin());
    path.start_p = 0.0;
  }
}

}  // namespace

Path shortest_path(const StreetGraph& g, const StreetPosition& from, const StreetPosition& to) {
  const std::size_t n = g.vertex_count();
  const std::size_t source = n;
  const std::size_t target = n + 1;
  const Street& s_from = g.street(from.street);
  const Street& s_to = g.street(to.street);
  const double t_from = fraction_from_u(g, from);
  const double t_to = fraction_from_u(g, to);

  std::vector<double> dist(n + 2, std::numeric_limits<double>::infinity());
  std::vector<Hop> hop(n + 2);
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

  auto relax = [&](std::size_t at, std::size_t next, double w, StreetId street) {
    const double d = dist[at] + w;
    if (d < dist[next]) {
      dist[next] = d;
      hop[next] = {at, street};
      heap.emplace(d, next);
    }
  };

  dist[source] = 0.0;
  heap.emplace(0.0, source);
  while (!heap.empty()) {
    const auto [d, at] = heap.top();
    heap.pop();
    if (d > dist[at]) continue;
    if (at == target) break;
    if (at == source) {
      relax(source, s_from.u, t_from * s_from.length, from.street);
      relax(source, s_from.v, (1.0 - t_from) * s_from.length, from.street);
      if (from.street == to.street) {
        relax(source, target, std::abs(t_to - t_from) * s_from.length, from.street);
      }
      continue;
    }
    const auto w = static_cast<VertexId>(at);
    for (StreetId sid : g.crossing(w).streets) {
      const Street& s = g.street(sid);
      relax(at, s.other(w), s.length, sid);
      if (sid == to.street) {
        relax(at, target, (w == s.u ? t_to : 1.0 - t_to) * s.length, sid);
      }
    }
  }
  if (!std::isfinite(dist[target])) throw std::runtime_error("shortest_path: target unreachable");

  Path path;
  if (dist[target] <= kGeomTolerance) return path;

  std::vector<std::size_t> nodes;
  std::vector<StreetId> via;
  for (std::size_t at = target; at != source; at = hop[at].prev) {
    nodes.push_back(at);
    via.push_back(hop[at].street);
  }
  nodes.push_back(source);
  std::reverse(nodes.begin(), nodes.end());
  std::reverse(via.begin(), via.end());

  if (nodes.size() == 2) {
    if (t_to >= t_from) {
      path.legs.push_back({from.street, s_from.u, s_from.v});
      path.start_p = t_from;
      path.end_p = t_to;
    } else {
      path.legs.push_back({from.street, s_from.v, s_from.u});
      path.start_p = 1.0 - t_from;
      path.end_p = 1.0 - t_to;
    }
    return path;
  }

  const auto first = static_cast<VertexId>(nodes[1]);
  if (first == s_from.v) {
    path.legs.push_back({from.street, s_from.u, s_from.v});
    path.start_p = t_from;
  } else {
    path.legs.push_back({from.street, s_from.v, s_from.u});
    path.start_p = 1.0 - t_from;
  }
  for (std::size_t i = 1; i + 2 < nodes.size(); ++i) {
    path.legs.push_back({via[i], static_cast<VertexId>(nodes[i]), static_cast<VertexId>(nodes[i + 1])});
  }
  const auto last = static_cast<VertexId>(nodes[nodes.size() - 2]);
  path.legs.push_back({to.street, last, s_to.other(last)});
  path.end_p = last == s_to.u ? t_to : 1.0 - t_to;
  drop_empty_end_legs(path);
  return path;
}

double Device::leg_limit() const {
  return leg + 1 == path.legs.size() ? path.end_p : 1.0;
}

// Velocity laws ------------------------------------------------------------

namespace {

double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
double std_normal_sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

}  // namespace

void validate(const VelocityDistribution& dist) {
  std::visit(
      [](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          if (!(d.value > 0.0) || !std::isfinite(d.value)) throw std::invalid_argument("dirac velocity must be positive");
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          if (!(d.pedestrian > 0.0) || !(d.driving > 0.0) || !std::isfinite(d.pedestrian) ||
              !std::isfinite(d.driving)) {
            throw std::invalid_argument("two-point velocities must be positive");
          }
          if (!(d.pedestrian_probability >= 0.0 && d.pedestrian_probability <= 1.0)) {
            throw std::invalid_argument("two-point probability must lie in [0, 1]");
          }
        } else {
          if (!(d.mean > 0.0) || !std::isfinite(d.mean)) throw std::invalid_argument("normal_plus mean must be positive");
          if (!(d.stddev >= 0.0) || !std::isfinite(d.stddev)) throw std::invalid_argument("normal_plus stddev must be non-negative");
        }
      },
      dist);
}

double sample_velocity(const VelocityDistribution& dist, RandomStream& rng) {
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return d.value;
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return rng.uniform() < d.pedestrian_probability ? d.pedestrian : d.driving;
        } else {
          if (d.stddev == 0.0) return d.mean;
          for (;;) {
            const double v = rng.normal(d.mean, d.stddev);
            if (v > 0.0) return v;
          }
        }
      },
      dist);
}

double mean_velocity(const VelocityDistribution& dist) {
  return std::visit(
      [](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return d.value;
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return d.pedestrian_probability * d.pedestrian + (1.0 - d.pedestrian_probability) * d.driving;
        } else {
          if (d.stddev == 0.0) return d.mean;
          const double alpha = -d.mean / d.stddev;
          return d.mean + d.stddev * std_normal_pdf(alpha) / std_normal_sf(alpha);
        }
      },
      dist);
}

double nominal_velocity(const VelocityDistribution& dist) {
  if (const auto* n = std::get_if<TruncatedNormalPositive>(&dist)) return n->mean;
  return mean_velocity(dist);
}

VelocityDistribution scaled(const VelocityDistribution& dist, double a) {
  return std::visit(
      [a](const auto& d) -> VelocityDistribution {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, Dirac>) {
          return Dirac{a * d.value};
        } else if constexpr (std::is_same_v<T, TwoPoint>) {
          return TwoPoint{a * d.pedestrian, a * d.driving, d.pedestrian_probability};
        } else {
          return TruncatedNormalPositive{a * d.mean, a * d.stddev};
        }
      },
      dist);
}

// Sampling -----------------------------------------------------------------

std::vector<Device> sample_devices(const StreetGraph& g, double lambda_per_m, RandomStream& rng) {
  if (!(lambda_per_m >= 0.0)) throw std::invalid_argument("sample_devices: lambda must be non-negative");
  std::vector<Device> out;
  if (lambda_per_m == 0.0) return out;
  for (StreetId sid = 0; sid < g.street_count(); ++sid) {
    const std::uint64_t count = rng.poisson(lambda_per_m * g.street(sid).length);
    for (std::uint64_t k = 0; k < count; ++k) {
      Device d;
      d.id = static_cast<DeviceId>(out.size());
      d.pos = canonical_position(g, sid, rng.uniform());
      d.home = d.pos;
      d.destination = d.pos;
      out.push_back(std::move(d));
    }
  }
  return out;
}

TorusPoint coords(const StreetPosition& pos, const StreetGraph& g) {
  return g.point_on(pos.street, fraction_from_u(g, pos));
}

TorusPoint kappa_prime_disc_point(TorusPoint home, double radius, double half_side, double u1,
                                  double u2) {
  const double rho = std::sqrt(u1) * radius;
  const double angle = 2.0 * std::numbers::pi * u2;
  return wrap({home.x + rho * std::sin(angle), home.y + rho * std::cos(angle)}, half_side);
}

StreetPosition kappa_prime_from_uniforms(const StreetPosition& home, double radius,
                                         const StreetGraph& g, const CellIndex& idx, double u1,
                                         double u2) {
  if (u1 == 0.0) return canonical_position(g, home.street, fraction_from_u(g, home));
  return project_to_street(kappa_prime_disc_point(coords(home, g), radius, g.half_side(), u1, u2), g, idx);
}

StreetPosition sample_destination_kappa_prime(const StreetPosition& home, double radius,
                                              const StreetGraph& g, const CellIndex& idx,
                                              RandomStream& rng) {
  if (!(radius > 0.0)) throw std::invalid_argument("kappa': radius must be positive");
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  return kappa_prime_from_uniforms(home, radius, g, idx, u1, u2);
}

std::vector<StreetPiece> streets_in_disc(const StreetGraph& g, TorusPoint centre, double radius) {
  std::vector<StreetPiece> pieces;
  if (!(radius > 0.0)) return pieces;
  const double side = g.side();
  const double r2 = radius * radius;
  for (StreetId sid = 0; sid < g.street_count(); ++sid) {
    const Street& s = g.street(sid);
    const double a = dot(s.offset, s.offset);
    for (int ky = -1; ky <= 1; ++ky) {
      for (int kx = -1; kx <= 1; ++kx) {
        const Vec2 base = g.crossing(s.u).pos.vec() + Vec2{kx * side, ky * side} - centre.vec();
        const double b = 2.0 * dot(base, s.offset);
        const double c = dot(base, base) - r2;
        const double disc = b * b - 4.0 * a * c;
        if (disc <= 0.0) continue;
        const double sq = std::sqrt(disc);
        const double t0 = std::max(0.0, (-b - sq) / (2.0 * a));
        const double t1 = std::min(1.0, (-b + sq) / (2.0 * a));
        if (t1 > t0) pieces.push_back({sid, t0, t1});
      }
    }
  }
  return pieces;
}

WaypointDraw sample_destination_kappa_doubleprime(const StreetPosition& home, double radius,
                                                  const StreetGraph& g, RandomStream& rng) {
  WaypointDraw draw{home, false};
  if (!(radius > 0.0)) return draw;
  const TorusPoint centre = coords(home, g);
  double r = radius;
  std::vector<StreetPiece> pieces = streets_in_disc(g, centre, r);
  while (pieces.empty()) {
    r *= 2.0;
    draw.radius_widened = true;
    if (r > 4.0 * g.side()) throw std::logic_error("kappa'': street system is empty");
    pieces = streets_in_disc(g, centre, r);
  }
  double total = 0.0;
  for (const StreetPiece& pc : pieces) total += (pc.t1 - pc.t0) * g.street(pc.street).length;
  double pick = rng.uniform() * total;
  for (const StreetPiece& pc : pieces) {
    const double len = (pc.t1 - pc.t0) * g.street(pc.street).length;
    if (pick < len || &pc == &pieces.back()) {
      const double t = pc.t0 + (pc.t1 - pc.t0) * std::min(1.0, pick / len);
      draw.position = canonical_position(g, pc.street, t);
      return draw;
    }
    pick -= len;
  }
  return draw;
}

double position_at(const Device& d, double t, const StreetGraph& g) {
  if (d.stationary()) return d.pos.p;
  if (t < d.time_of_pos - 1e-9) throw std::logic_error("position_at: time runs backwards");
  const double p = d.pos.p + (t - d.time_of_pos) * d.velocity / g.street(d.pos.street).length;
  const double limit = d.leg_limit();
  if (p > limit + 1e-9) throw std::logic_error("position_at: device passed the end of its leg");
  return std::min(p, limit);
}

void assign_route(Device& d, const StreetPosition& destination, const StreetGraph& g) {
  d.destination = destination;
  d.path = shortest_path(g, d.home, destination);
  d.leg = 0;
  d.time_of_pos = 0.0;
  d.pos = d.path.empty() ? d.home : d.path.start();
}

std::vector<Device> initialize_devices(const StreetGraph& g, const CellIndex& idx,
                                       double lambda_per_m, const WaypointKernel& kernel,
                                       const VelocityDistribution& velocity, RunStreams& streams) {
  validate(velocity);
  std::vector<Device> devices = sample_devices(g, lambda_per_m, streams.placement);
  for (Device& d : devices) {
    const StreetPosition dest = std::visit(
        [&](const auto& k) -> StreetPosition {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, KappaPrime>) {
            return sample_destination_kappa_prime(d.home, k.radius, g, idx, streams.waypoints);
          } else {
            return sample_destination_kappa_doubleprime(d.home, k.radius, g, streams.waypoints).position;
          }
        },
        kernel);
    assign_route(d, dest, g);
  }
  for (Device& d : devices) d.velocity = sample_velocity(velocity, streams.velocities);
  return devices;
}

}  // namespace d2d
