#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "d2dsim/random.hpp"
#include "d2dsim/torus.hpp"

namespace d2d {

using VertexId = std::uint32_t;
using StreetId = std::uint32_t;
using CellId = std::uint32_t;

inline constexpr CellId kNoCell = static_cast<CellId>(-1);

struct Crossing {
  TorusPoint pos;
  std::vector<StreetId> streets;  ///< incident streets in ascending id order
};

/// A street between two crossings. `offset` is the planar displacement from
/// u to v along the street; for streets through the torus boundary it differs
/// from pos(v) - pos(u) by a multiple of 2L.
struct Street {
  VertexId u = 0;
  VertexId v = 0;
  double length = 0.0;
  Vec2 offset;
  std::optional<BoundaryCrossing> wrap;
  std::array<CellId, 2> cells{kNoCell, kNoCell};

  VertexId other(VertexId w) const { return w == u ? v : u; }
};

struct VoronoiCell {
  TorusPoint seed;
  std::vector<StreetId> boundary;
};

/// Raised when the Voronoi construction hits a configuration it cannot turn
/// into a simple degree-3 torus graph (cocircular seeds, parallel edges, ...).
class DegenerateTessellation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Street system on the torus [-L, L)^2: crossings, streets and the Voronoi
/// cells whose boundaries they form. Geometry only; device occupancy belongs
/// to a simulation run.
class StreetGraph {
 public:
  explicit StreetGraph(double half_side);

  double half_side() const { return half_side_; }
  double side() const { return 2.0 * half_side_; }

  const std::vector<Crossing>& crossings() const { return crossings_; }
  const std::vector<Street>& streets() const { return streets_; }
  const std::vector<VoronoiCell>& cells() const { return cells_; }

  const Crossing& crossing(VertexId id) const { return crossings_.at(id); }
  const Street& street(StreetId id) const { return streets_.at(id); }

  std::size_t vertex_count() const { return crossings_.size(); }
  std::size_t street_count() const { return streets_.size(); }

  VertexId add_crossing(TorusPoint pos);

  /// Adds a street whose geometry is the minimal-image segment u -> v.
  StreetId add_street(VertexId u, VertexId v);
  /// Adds a street with an explicit planar offset from u to v.
  StreetId add_street(VertexId u, VertexId v, Vec2 offset);

  CellId add_cell(TorusPoint seed, std::vector<StreetId> boundary);
  /// Records the two Voronoi cells a street separates.
  void set_street_cells(StreetId id, CellId a, CellId b);

  /// Smallest-id street joining a and b, if any.
  std::optional<StreetId> find_street(VertexId a, VertexId b) const;

  /// Point at fraction t in [0, 1] from u towards v, wrapped.
  TorusPoint point_on(StreetId id, double t_from_u) const;

 private:
  double half_side_;
  std::vector<Crossing> crossings_;
  std::vector<Street> streets_;
  std::vector<VoronoiCell> cells_;
};

double total_street_length(const StreetGraph& g);

/// Seed intensity (per km^2) whose PVT has the given edge length per area
/// (km per km^2), from E[length/area] = 2 sqrt(seed intensity).
double calibrate_seed_intensity(double street_intensity_km_per_km2);

struct PvtParams {
  double half_side = 0.0;  ///< L in meters
  /// Exactly one of the two must be set.
  std::optional<double> street_intensity_km_per_km2;
  std::optional<std::size_t> seed_count;
  /// Resampling attempts after degenerate constructions.
  int max_attempts = 16;
};

/// Lattice on which seeds are snapped before the Voronoi construction: the
/// fundamental cell has 2^28 steps per side so that periodic copies stay exact.
inline constexpr std::int64_t kSeedLatticeSteps = std::int64_t{1} << 28;

/// Poisson-Voronoi street system on the torus from the 9-copy construction.
StreetGraph generate_pvt(const PvtParams& params, RandomStream& rng);

/// Voronoi street system of the given seeds (snapped to the seed lattice).
/// Throws DegenerateTessellation or std::invalid_argument (fewer than 3 seeds).
StreetGraph build_torus_voronoi(std::span<const TorusPoint> seeds, double half_side);

/// Snaps a canonical point to the seed lattice of the given torus.
TorusPoint snap_to_seed_lattice(TorusPoint p, double half_side);

/// Uniform grid over the torus listing, per square, every Voronoi cell that
/// can contain a point of that square.
class CellIndex {
 public:
  CellIndex(const StreetGraph& g, double cell_size);

  double cell_size() const { return cell_size_; }
  std::size_t dimension() const { return dim_; }

  std::span<const CellId> candidates(TorusPoint p) const;
  std::span<const CellId> square(std::size_t i, std::size_t j) const;

  /// Containing Voronoi cell: nearest seed under the torus metric, smallest id
  /// on ties.
  CellId locate(TorusPoint p) const;

 private:
  const StreetGraph* graph_;
  double cell_size_;
  std::size_t dim_;
  std::vector<std::vector<CellId>> squares_;
};

/// Default square size: 2L / ceil(2L / (1 / sqrt(seed intensity))).
double default_cell_size(const StreetGraph& g);

CellIndex build_cell_index(const StreetGraph& g, double cell_size);
inline CellIndex build_cell_index(const StreetGraph& g) {
  return build_cell_index(g, default_cell_size(g));
}

/// Point on a street at fraction p from `from` towards `to`. The same point is
/// also (street, to, from, 1 - p); simulations store the orientation in which
/// p grows along the direction of travel.
struct StreetPosition {
  StreetId street = 0;
  VertexId from = 0;
  VertexId to = 0;
  double p = 0.0;

  StreetPosition flipped() const { return {street, to, from, 1.0 - p}; }
  friend bool operator==(const StreetPosition&, const StreetPosition&) = default;
};

/// Position oriented from the street's u end.
StreetPosition canonical_position(const StreetGraph& g, StreetId id, double t_from_u);
/// Fraction of `pos` measured from the street's u end.
double fraction_from_u(const StreetGraph& g, const StreetPosition& pos);
/// True if both positions denote the same point of the same street.
bool same_point(const StreetGraph& g, const StreetPosition& a, const StreetPosition& b,
                double tol = kGeomTolerance);

/// Closest point of one street to p: fraction from the street's u end and the
/// distance, over the nine periodic images of p.
struct SegmentProjection {
  double t = 0.0;
  double distance = 0.0;
};
SegmentProjection project_onto_street(const StreetGraph& g, StreetId id, TorusPoint p);

/// Closest point of the street system to p. Searches the boundary of the
/// containing Voronoi cell (and cells whose seed is equally near); ties go to
/// the smallest street id.
StreetPosition project_to_street(TorusPoint p, const StreetGraph& g, const CellIndex& idx);

}  // namespace d2d
