#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "d2dsim/random.hpp"
#include "d2dsim/street_graph.hpp"

namespace d2d {

using DeviceId = std::uint32_t;

/// One street of a route, traversed from `from` to `to`.
struct DirectedStreet {
  StreetId street = 0;
  VertexId from = 0;
  VertexId to = 0;
  friend bool operator==(const DirectedStreet&, const DirectedStreet&) = default;
};

/// Route [(v0, v1, start_p), v1, ..., v_{n-1}, (v_{n-1}, v_n, end_p)] stored as
/// the sequence of directed streets plus the two end fractions. A route with
/// no legs means the device does not move.
struct Path {
  std::vector<DirectedStreet> legs;
  double start_p = 0.0;
  double end_p = 0.0;

  bool empty() const { return legs.empty(); }
  StreetPosition start() const;
  StreetPosition end() const;
  /// Interior crossings v1 ... v_{n-1}.
  std::vector<VertexId> crossings() const;
  friend bool operator==(const Path&, const Path&) = default;
};

double path_length(const Path& path, const StreetGraph& g);

/// Path back along the same streets: [(v_n, v_{n-1}, 1 - end_p), ..., (v_1, v_0, 1 - start_p)].
Path reverse_path(const Path& path);

/// Shortest route along the streets. Both ends are attached to the graph as
/// temporary vertices (as an overlay; the graph is not modified). Zero-length
/// first/last legs, which arise when an end sits on a crossing, are dropped.
/// Throws std::runtime_error if the target is unreachable.
Path shortest_path(const StreetGraph& g, const StreetPosition& from, const StreetPosition& to);

enum class DeviceState : std::uint8_t { Susceptible, Infected, Cured };

struct Device {
  DeviceId id = 0;
  StreetPosition pos;       ///< oriented so that p grows along the motion
  double time_of_pos = 0.0;
  double velocity = 1.0;    ///< m/s, strictly positive
  Path path;                ///< current commute leg sequence
  std::size_t leg = 0;      ///< index into path.legs of the street pos lies on
  StreetPosition home;
  StreetPosition destination;
  DeviceState state = DeviceState::Susceptible;

  bool stationary() const { return path.empty(); }
  /// Fraction at which the current leg ends (1 unless it is the final leg).
  double leg_limit() const;
};

// Velocity laws ------------------------------------------------------------

struct Dirac {
  double value = 1.0;
};
struct TwoPoint {
  double pedestrian = 1.0;
  double driving = 10.0;
  double pedestrian_probability = 0.5;
};
/// N(mean, stddev) conditioned on being positive.
struct TruncatedNormalPositive {
  double mean = 1.0;
  double stddev = 0.2;
};
using VelocityDistribution = std::variant<Dirac, TwoPoint, TruncatedNormalPositive>;

void validate(const VelocityDistribution& dist);
double sample_velocity(const VelocityDistribution& dist, RandomStream& rng);
/// Expectation of the law (closed form).
double mean_velocity(const VelocityDistribution& dist);
/// The law of a * V.
VelocityDistribution scaled(const VelocityDistribution& dist, double a);
/// Location parameter of the law: v for Dirac and N+(v, .), the mixture mean
/// for TwoPoint. This is the value reported as the sweep's velocity.
double nominal_velocity(const VelocityDistribution& dist);

// Waypoint kernels ---------------------------------------------------------

/// Disc-then-project kernel with radius R.
struct KappaPrime {
  double radius = 100.0;
};
/// Uniform on the streets within distance L of home.
struct KappaDoublePrime {
  double radius = 100.0;
};
using WaypointKernel = std::variant<KappaPrime, KappaDoublePrime>;

/// Devices on every street with count Poisson(lambda * length) and uniform
/// fractions. Only positions are filled in; each device sits at its home.
std::vector<Device> sample_devices(const StreetGraph& g, double lambda_per_m, RandomStream& rng);

TorusPoint coords(const StreetPosition& pos, const StreetGraph& g);

/// D = home + sqrt(u1) R (sin 2 pi u2, cos 2 pi u2), wrapped.
TorusPoint kappa_prime_disc_point(TorusPoint home, double radius, double half_side, double u1,
                                  double u2);

/// q_S(D) for D = home + sqrt(u1) R (sin 2 pi u2, cos 2 pi u2), wrapped.
StreetPosition kappa_prime_from_uniforms(const StreetPosition& home, double radius,
                                         const StreetGraph& g, const CellIndex& idx, double u1,
                                         double u2);
StreetPosition sample_destination_kappa_prime(const StreetPosition& home, double radius,
                                              const StreetGraph& g, const CellIndex& idx,
                                              RandomStream& rng);

/// Part of one street inside a disc: fractions [t0, t1] from the street's u end.
struct StreetPiece {
  StreetId street = 0;
  double t0 = 0.0;
  double t1 = 0.0;
};
std::vector<StreetPiece> streets_in_disc(const StreetGraph& g, TorusPoint centre, double radius);

struct WaypointDraw {
  StreetPosition position;
  bool radius_widened = false;  ///< the disc had to be enlarged to meet a street
};
WaypointDraw sample_destination_kappa_doubleprime(const StreetPosition& home, double radius,
                                                  const StreetGraph& g, RandomStream& rng);

// Position algebra ---------------------------------------------------------

/// p + (t - time_of_pos) * velocity / length on the current street. Throws
/// std::logic_error when the device would have passed the end of its leg.
double position_at(const Device& d, double t, const StreetGraph& g);

/// Sets the device's route from its home to `destination` and places it at
/// the start of that route at time 0.
void assign_route(Device& d, const StreetPosition& destination, const StreetGraph& g);

/// Random streams of one run: independent named sub-streams of a master seed.
struct RunStreams {
  RandomStream placement;
  RandomStream waypoints;
  RandomStream velocities;
  explicit RunStreams(std::uint64_t master_seed)
      : placement(master_seed, "placement"),
        waypoints(master_seed, "waypoints"),
        velocities(master_seed, "velocities") {}
};

/// Samples devices, destinations, routes and velocities.
std::vector<Device> initialize_devices(const StreetGraph& g, const CellIndex& idx,
                                       double lambda_per_m, const WaypointKernel& kernel,
                                       const VelocityDistribution& velocity, RunStreams& streams);

}  // namespace d2d
