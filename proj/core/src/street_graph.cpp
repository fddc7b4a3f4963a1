#include "d2dsim/street_graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <utility>

#include <boost/polygon/voronoi.hpp>

namespace {
struct LatticePoint {
  std::int32_t x;
  std::int32_t y;
};
}  // namespace

namespace boost::polygon {
template <>
struct geometry_concept<LatticePoint> {
  using type = point_concept;
};
template <>
struct point_traits<LatticePoint> {
  using coordinate_type = std::int32_t;
  static coordinate_type get(const LatticePoint& p, orientation_2d orient) {
    return orient == HORIZONTAL ? p.x : p.y;
  }
};
}  // namespace boost::polygon

namespace d2d {

StreetGraph::StreetGraph(double half_side) : half_side_(half_side) {
  if (!(half_side > 0.0) || !std::isfinite(half_side)) {
    throw std::invalid_argument("StreetGraph: half side must be positive");
  }
}

VertexId StreetGraph::add_crossing(TorusPoint pos) {
  crossings_.push_back({wrap(pos.vec(), half_side_), {}});
  return static_cast<VertexId>(crossings_.size() - 1);
}

void StreetGraph::set_street_cells(StreetId id, CellId a, CellId b) {
  streets_.at(id).cells = {std::min(a, b), std::max(a, b)};
}

StreetId StreetGraph::add_street(VertexId u, VertexId v) {
  return add_street(u, v, torus_displacement(crossing(u).pos, crossing(v).pos, half_side_));
}

StreetId StreetGraph::add_street(VertexId u, VertexId v, Vec2 offset) {
  if (u >= crossings_.size() || v >= crossings_.size()) {
    throw std::out_of_range("add_street: unknown crossing");
  }
  const double length = norm(offset);
  if (!(length > 0.0)) throw std::invalid_argument("add_street: street length must be positive");
  Street s;
  s.u = u;
  s.v = v;
  s.length = length;
  s.offset = offset;
  const Vec2 end = crossings_[u].pos.vec() + offset;
  if (std::abs(end.x) > half_side_ || std::abs(end.y) > half_side_) {
    s.wrap = boundary_crossing_points(crossings_[u].pos, crossings_[v].pos, half_side_);
  }
  const auto id = static_cast<StreetId>(streets_.size());
  streets_.push_back(std::move(s));
  crossings_[u].streets.push_back(id);
  if (v != u) crossings_[v].streets.push_back(id);
  return id;
}

CellId StreetGraph::add_cell(TorusPoint seed, std::vector<StreetId> boundary) {
  std::sort(boundary.begin(), boundary.end());
  cells_.push_back({wrap(seed.vec(), half_side_), std::move(boundary)});
  return static_cast<CellId>(cells_.size() - 1);
}

std::optional<StreetId> StreetGraph::find_street(VertexId a, VertexId b) const {
  for (StreetId id : crossing(a).streets) {
    const Street& s = streets_[id];
    if ((s.u == a && s.v == b) || (s.u == b && s.v == a)) return id;
  }
  return std::nullopt;
}

TorusPoint StreetGraph::point_on(StreetId id, double t_from_u) const {
  const Street& s = street(id);
  return wrap(crossings_[s.u].pos.vec() + t_from_u * s.offset, half_side_);
}

double total_street_length(const StreetGraph& g) {
  double total = 0.0;
  for (const Street& s : g.streets()) total += s.length;
  return total;
}

double calibrate_seed_intensity(double street_intensity_km_per_km2) {
  if (!(street_intensity_km_per_km2 > 0.0)) {
    throw std::invalid_argument("street intensity must be positive");
  }
  const double half = street_intensity_km_per_km2 / 2.0;
  return half * half;
}

StreetPosition canonical_position(const StreetGraph& g, StreetId id, double t_from_u) {
  const Street& s = g.street(id);
  return {id, s.u, s.v, t_from_u};
}

double fraction_from_u(const StreetGraph& g, const StreetPosition& pos) {
  return pos.from == g.street(pos.street).u ? pos.p : 1.0 - pos.p;
}

bool same_point(const StreetGraph& g, const StreetPosition& a, const StreetPosition& b,
                double tol) {
  return torus_distance(g.point_on(a.street, fraction_from_u(g, a)),
                        g.point_on(b.street, fraction_from_u(g, b)), g.half_side()) <= tol;
}

// ---------------------------------------------------------------------------
// Torus Voronoi from nine copies of the seeds.

namespace {

struct InsideVertex {
  double x;  // lattice units
  double y;
  VertexId id;
};

double lattice_unit(double half_side) {
  return 2.0 * half_side / static_cast<double>(kSeedLatticeSteps);
}

std::int64_t lattice_index(double coord, double half_side) {
  auto i = static_cast<std::int64_t>(std::llround((coord + half_side) / lattice_unit(half_side)));
  i %= kSeedLatticeSteps;
  if (i < 0) i += kSeedLatticeSteps;
  return i;
}

double periodic_gap(double a, double b) {
  const auto n = static_cast<double>(kSeedLatticeSteps);
  double d = std::fmod(a - b, n);
  if (d > n / 2) d -= n;
  if (d < -n / 2) d += n;
  return std::abs(d);
}

// Inside vertices sorted by x for the wrap-image lookup.
class VertexMatcher {
 public:
  explicit VertexMatcher(std::vector<InsideVertex> v, double tol_units)
      : verts_(std::move(v)), tol_(tol_units) {
    std::sort(verts_.begin(), verts_.end(),
              [](const InsideVertex& a, const InsideVertex& b) { return a.x < b.x; });
  }

  VertexId match(double x, double y) const {
    const auto n = static_cast<double>(kSeedLatticeSteps);
    std::optional<VertexId> found;
    auto scan = [&](double lo, double hi) {
      auto it = std::lower_bound(verts_.begin(), verts_.end(), lo,
                                 [](const InsideVertex& a, double key) { return a.x < key; });
      for (; it != verts_.end() && it->x <= hi; ++it) {
        if (periodic_gap(it->y, y) <= tol_) {
          if (found && *found != it->id) {
            throw DegenerateTessellation("ambiguous crossing image across the torus boundary");
          }
          found = it->id;
        }
      }
    };
    scan(x - tol_, x + tol_);
    if (x - tol_ < 0.0) scan(x - tol_ + n, n);
    if (x + tol_ >= n) scan(0.0, x + tol_ - n);
    if (!found) throw DegenerateTessellation("no crossing matches a wrapped street end");
    return *found;
  }

 private:
  std::vector<InsideVertex> verts_;
  double tol_;
};

}  // namespace

TorusPoint snap_to_seed_lattice(TorusPoint p, double half_side) {
  const double unit = lattice_unit(half_side);
  const auto ix = lattice_index(p.x, half_side);
  const auto iy = lattice_index(p.y, half_side);
  return wrap({-half_side + static_cast<double>(ix) * unit,
               -half_side + static_cast<double>(iy) * unit},
              half_side);
}

StreetGraph build_torus_voronoi(std::span<const TorusPoint> seeds, double half_side) {
  if (seeds.size() < 3) throw std::invalid_argument("a torus Voronoi street system needs at least 3 seeds");
  const std::int64_t n = kSeedLatticeSteps;
  const double unit = lattice_unit(half_side);

  std::vector<std::pair<std::int64_t, std::int64_t>> lattice;
  lattice.reserve(seeds.size());
  for (const TorusPoint& s : seeds) {
    lattice.emplace_back(lattice_index(s.x, half_side), lattice_index(s.y, half_side));
  }
  {
    auto sorted = lattice;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw DegenerateTessellation("two seeds share a lattice site");
    }
  }

  // Copy k = 4 is the central cell; the other eight surround it.
  std::vector<LatticePoint> points;
  points.reserve(9 * seeds.size());
  for (int ky = -1; ky <= 1; ++ky) {
    for (int kx = -1; kx <= 1; ++kx) {
      for (const auto& [ix, iy] : lattice) {
        points.push_back({static_cast<std::int32_t>(ix + kx * n), static_cast<std::int32_t>(iy + ky * n)});
      }
    }
  }
  const std::size_t seed_count = seeds.size();
  auto seed_of = [&](std::size_t source_index) { return static_cast<CellId>(source_index % seed_count); };

  boost::polygon::voronoi_diagram<double> vd;
  boost::polygon::construct_voronoi(points.begin(), points.end(), &vd);

  StreetGraph g(half_side);
  const auto nd = static_cast<double>(n);
  auto inside = [nd](double x, double y) { return x >= 0.0 && x < nd && y >= 0.0 && y < nd; };
  auto to_meters = [&](double x, double y) {
    return wrap({-half_side + x * unit, -half_side + y * unit}, half_side);
  };

  std::map<const boost::polygon::voronoi_vertex<double>*, VertexId> ids;
  std::vector<InsideVertex> inside_vertices;
  for (const auto& vtx : vd.vertices()) {
    if (!inside(vtx.x(), vtx.y())) continue;
    const VertexId id = g.add_crossing(to_meters(vtx.x(), vtx.y()));
    ids.emplace(&vtx, id);
    inside_vertices.push_back({vtx.x(), vtx.y(), id});
  }
  const VertexMatcher matcher(std::move(inside_vertices), 1e-6 / unit);

  std::map<std::pair<VertexId, VertexId>, std::vector<StreetId>> by_ends;
  std::vector<std::set<StreetId>> cell_streets(seed_count);

  for (const auto& edge : vd.edges()) {
    if (&edge > edge.twin()) continue;  // each undirected edge once
    const auto* a = edge.vertex0();
    const auto* b = edge.vertex1();
    const bool a_in = a && inside(a->x(), a->y());
    const bool b_in = b && inside(b->x(), b->y());
    if (!a_in && !b_in) continue;
    if (!a || !b) throw DegenerateTessellation("unbounded Voronoi edge reaches the fundamental cell");

    if (!a_in) std::swap(a, b);
    VertexId u = ids.at(a);
    VertexId v;
    if (a_in && b_in) {
      v = ids.at(b);
    } else {
      double wx = std::fmod(b->x(), nd);
      double wy = std::fmod(b->y(), nd);
      if (wx < 0) wx += nd;
      if (wy < 0) wy += nd;
      v = matcher.match(wx, wy);
    }
    Vec2 offset{(b->x() - a->x()) * unit, (b->y() - a->y()) * unit};
    if (u == v) throw DegenerateTessellation("street closes on itself around the torus");
    if (u > v) {
      std::swap(u, v);
      offset = -offset;
    }
    if (!(norm(offset) > kGeomTolerance)) throw DegenerateTessellation("zero-length street");

    auto& same_ends = by_ends[{u, v}];
    const bool duplicate = std::any_of(same_ends.begin(), same_ends.end(), [&](StreetId id) {
      return norm(g.street(id).offset - offset) <= 1e-6;
    });
    if (duplicate) continue;

    const StreetId sid = g.add_street(u, v, offset);
    same_ends.push_back(sid);
    const CellId c0 = seed_of(edge.cell()->source_index());
    const CellId c1 = seed_of(edge.twin()->cell()->source_index());
    g.set_street_cells(sid, c0, c1);
    cell_streets[c0].insert(sid);
    cell_streets[c1].insert(sid);
  }

  for (std::size_t i = 0; i < g.vertex_count(); ++i) {
    if (g.crossings()[i].streets.size() != 3) {
      throw DegenerateTessellation("crossing of degree other than 3");
    }
  }

  for (std::size_t i = 0; i < seed_count; ++i) {
    const auto& [ix, iy] = lattice[i];
    g.add_cell(to_meters(static_cast<double>(ix), static_cast<double>(iy)),
               {cell_streets[i].begin(), cell_streets[i].end()});
  }
  return g;
}

StreetGraph generate_pvt(const PvtParams& params, RandomStream& rng) {
  if (!(params.half_side > 0.0)) throw std::invalid_argument("generate_pvt: L must be positive");
  if (params.street_intensity_km_per_km2.has_value() == params.seed_count.has_value()) {
    throw std::invalid_argument("generate_pvt: give exactly one of street intensity or seed count");
  }
  double expected = 0.0;
  if (params.street_intensity_km_per_km2) {
    const double area_km2 = std::pow(2.0 * params.half_side / 1000.0, 2);
    expected = calibrate_seed_intensity(*params.street_intensity_km_per_km2) * area_km2;
    if (expected < 3.0) {
      throw std::invalid_argument("generate_pvt: fewer than 3 expected seeds in the torus");
    }
  } else if (*params.seed_count < 3) {
    throw std::invalid_argument("generate_pvt: at least 3 seeds are required");
  }

  const double unit = lattice_unit(params.half_side);
  for (int attempt = 0; attempt < params.max_attempts; ++attempt) {
    std::size_t count = params.seed_count ? *params.seed_count : rng.poisson(expected);
    if (count < 3) continue;
    std::vector<TorusPoint> seeds;
    seeds.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto ix = rng.below(static_cast<std::uint64_t>(kSeedLatticeSteps));
      const auto iy = rng.below(static_cast<std::uint64_t>(kSeedLatticeSteps));
      seeds.push_back({-params.half_side + static_cast<double>(ix) * unit,
                       -params.half_side + static_cast<double>(iy) * unit});
    }
    try {
      return build_torus_voronoi(seeds, params.half_side);
    } catch (const DegenerateTessellation&) {
      // resample
    }
  }
  throw DegenerateTessellation("generate_pvt: no valid tessellation after resampling");
}

// ---------------------------------------------------------------------------
// Cell index and projection.

double default_cell_size(const StreetGraph& g) {
  const double side = g.side();
  if (g.cells().empty()) return side;
  const double seeds_per_m2 = static_cast<double>(g.cells().size()) / (side * side);
  const double diameter = 1.0 / std::sqrt(seeds_per_m2);
  return side / std::ceil(side / diameter);
}

CellIndex::CellIndex(const StreetGraph& g, double cell_size) : graph_(&g) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("CellIndex: cell size must be positive");
  const double side = g.side();
  dim_ = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(side / cell_size - 1e-12)));
  cell_size_ = side / static_cast<double>(dim_);
  squares_.resize(dim_ * dim_);

  const double L = g.half_side();
  const double half_diag = cell_size_ * std::sqrt(0.5);
  const auto& cells = g.cells();
  std::vector<double> dist(cells.size());
  for (std::size_t j = 0; j < dim_; ++j) {
    for (std::size_t i = 0; i < dim_; ++i) {
      const TorusPoint centre = wrap({-L + (static_cast<double>(i) + 0.5) * cell_size_,
                                      -L + (static_cast<double>(j) + 0.5) * cell_size_},
                                     L);
      double nearest = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < cells.size(); ++c) {
        dist[c] = torus_distance(centre, cells[c].seed, L);
        nearest = std::min(nearest, dist[c]);
      }
      // Any point of the square is within half_diag of the centre, so its
      // nearest seed lies within nearest + 2 * half_diag of the centre.
      const double reach = nearest + 2.0 * half_diag + 1e-9 * std::max(1.0, L);
      auto& list = squares_[j * dim_ + i];
      for (std::size_t c = 0; c < cells.size(); ++c) {
        if (dist[c] <= reach) list.push_back(static_cast<CellId>(c));
      }
    }
  }
}

std::span<const CellId> CellIndex::square(std::size_t i, std::size_t j) const {
  return squares_.at(j * dim_ + i);
}

std::span<const CellId> CellIndex::candidates(TorusPoint p) const {
  const TorusPoint q = wrap(p.vec(), graph_->half_side());
  const double L = graph_->half_side();
  auto axis = [&](double v) {
    auto k = static_cast<std::size_t>(std::floor((v + L) / cell_size_));
    return std::min(k, dim_ - 1);
  };
  return square(axis(q.x), axis(q.y));
}

CellId CellIndex::locate(TorusPoint p) const {
  CellId best = kNoCell;
  double best_d = std::numeric_limits<double>::infinity();
  for (CellId c : candidates(p)) {
    const double d = torus_distance(p, graph_->cells()[c].seed, graph_->half_side());
    if (d < best_d || (d == best_d && c < best)) {
      best = c;
      best_d = d;
    }
  }
  return best;
}

CellIndex build_cell_index(const StreetGraph& g, double cell_size) { return CellIndex(g, cell_size); }

SegmentProjection project_onto_street(const StreetGraph& g, StreetId id, TorusPoint p) {
  const Street& s = g.street(id);
  const Vec2 base = g.crossing(s.u).pos.vec();
  const double side = g.side();
  const double len2 = dot(s.offset, s.offset);
  SegmentProjection best{0.0, std::numeric_limits<double>::infinity()};
  for (int ky = -1; ky <= 1; ++ky) {
    for (int kx = -1; kx <= 1; ++kx) {
      const Vec2 q = Vec2{p.x + kx * side, p.y + ky * side} - base;
      const double t = std::clamp(dot(q, s.offset) / len2, 0.0, 1.0);
      const double d = norm(q - t * s.offset);
      if (d < best.distance) best = {t, d};
    }
  }
  return best;
}

StreetPosition project_to_street(TorusPoint p, const StreetGraph& g, const CellIndex& idx) {
  const CellId cell = g.cells().empty() ? kNoCell : idx.locate(p);
  std::vector<std::pair<StreetId, SegmentProjection>> found;
  auto consider = [&](StreetId id) { found.push_back({id, project_onto_street(g, id, p)}); };
  if (cell != kNoCell && !g.cells()[cell].boundary.empty()) {
    // points on or near a cell boundary also search the neighbouring cells,
    // so equidistant streets all compete for the tie rule
    const double d_min = torus_distance(p, g.cells()[cell].seed, g.half_side());
    for (CellId c : idx.candidates(p)) {
      if (torus_distance(p, g.cells()[c].seed, g.half_side()) <= d_min + 1e-6) {
        for (StreetId id : g.cells()[c].boundary) consider(id);
      }
    }
  } else {
    for (StreetId id = 0; id < g.street_count(); ++id) consider(id);
  }
  if (found.empty()) throw std::logic_error("project_to_street: street system is empty");
  double d_min = std::numeric_limits<double>::infinity();
  for (const auto& f : found) d_min = std::min(d_min, f.second.distance);
  // distances within the geometric tolerance count as ties
  const std::pair<StreetId, SegmentProjection>* best = nullptr;
  for (const auto& f : found) {
    if (f.second.distance <= d_min + kGeomTolerance && (!best || f.first < best->first)) best = &f;
  }
  return canonical_position(g, best->first, best->second.t);
}

}  // namespace d2d
