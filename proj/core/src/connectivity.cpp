#include "d2dsim/connectivity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include <boost/pending/disjoint_sets.hpp>

namespace d2d {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : rank_(n), parent_(n), sets_(rank_.data(), parent_.data()) {
    for (std::size_t i = 0; i < n; ++i) sets_.make_set(i);
  }
  void join(std::size_t a, std::size_t b) { sets_.union_set(a, b); }
  std::size_t find(std::size_t a) { return sets_.find_set(a); }

 private:
  std::vector<std::size_t> rank_;
  std::vector<std::size_t> parent_;
  boost::disjoint_sets<std::size_t*, std::size_t*> sets_;
};

}  // namespace

std::vector<std::size_t> component_sizes(const ConnectionGraph& cg) {
  UnionFind uf(cg.vertex_count);
  for (const DevicePair& e : cg.edges) uf.join(e.first, e.second);
  std::vector<std::size_t> count(cg.vertex_count, 0);
  for (std::size_t v = 0; v < cg.vertex_count; ++v) ++count[uf.find(v)];
  std::vector<std::size_t> sizes;
  for (std::size_t c : count) {
    if (c > 0) sizes.push_back(c);
  }
  std::sort(sizes.begin(), sizes.end(), std::greater<>());
  return sizes;
}

double largest_cluster_fraction(const ConnectionGraph& cg) {
  if (cg.vertex_count == 0) throw std::invalid_argument("largest_cluster_fraction: no vertices");
  return static_cast<double>(component_sizes(cg).front()) / static_cast<double>(cg.vertex_count);
}

ComponentCensus census_with_winding(std::size_t vertex_count, std::span<const LiftedEdge> edges,
                                    double half_side) {
  std::vector<std::vector<std::pair<std::uint32_t, Vec2>>> adj(vertex_count);
  for (const LiftedEdge& e : edges) {
    adj.at(e.a).push_back({e.b, e.offset});
    adj.at(e.b).push_back({e.a, -e.offset});
  }
  constexpr auto kUnset = static_cast<std::uint32_t>(-1);
  ComponentCensus out;
  out.label.assign(vertex_count, kUnset);
  std::vector<Vec2> lift(vertex_count);
  for (std::uint32_t root = 0; root < vertex_count; ++root) {
    if (out.label[root] != kUnset) continue;
    const auto comp = static_cast<std::uint32_t>(out.size.size());
    out.size.push_back(0);
    out.winds.push_back(false);
    std::queue<std::uint32_t> todo;
    out.label[root] = comp;
    lift[root] = {0.0, 0.0};
    todo.push(root);
    while (!todo.empty()) {
      const std::uint32_t v = todo.front();
      todo.pop();
      ++out.size[comp];
      for (const auto& [w, off] : adj[v]) {
        const Vec2 at = lift[v] + off;
        if (out.label[w] == kUnset) {
          out.label[w] = comp;
          lift[w] = at;
          todo.push(w);
        } else {
          // closing a cycle: the lifts disagree by a period iff it winds
          const Vec2 gap = at - lift[w];
          if (std::abs(gap.x) > half_side || std::abs(gap.y) > half_side) out.winds[comp] = true;
        }
      }
    }
  }
  return out;
}

std::vector<LiftedEdge> lift_by_home(const ConnectionGraph& cg, std::span<const Device> devices,
                                     const StreetGraph& g) {
  std::vector<TorusPoint> homes;
  homes.reserve(devices.size());
  for (const Device& d : devices) homes.push_back(coords(d.home, g));
  std::vector<LiftedEdge> out;
  out.reserve(cg.edges.size());
  for (const DevicePair& e : cg.edges) {
    out.push_back({e.first, e.second,
                   torus_displacement(homes.at(e.first), homes.at(e.second), g.half_side())});
  }
  return out;
}

// Velocity sweep -------------------------------------------------------------

double required_base_horizon(double horizon, std::span<const double> scales) {
  double a_max = 1.0;
  for (double a : scales) a_max = std::max(a_max, a);
  return a_max * horizon;
}

SweepResult velocity_sweep(const VelocitySweepInput& in) {
  SweepResult out;
  for (double a : in.scales) {
    if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("velocity_sweep: scale must be positive");
    if (a * in.horizon > in.base_horizon) {
      throw std::invalid_argument("velocity_sweep: base horizon too short for scale " + std::to_string(a));
    }
    SweepRow row;
    row.seed = in.seed;
    row.scale = a;
    row.velocity_mean = mean_velocity(scaled(in.base_velocity, a));
    row.horizon = in.horizon;
    row.rho = in.rho;
    row.range = in.range;
    row.lambda_per_m = in.lambda_per_m;
    row.n_devices = in.devices.size();
    if (!in.devices.empty()) {
      const ConnectionGraph cg =
          derive_connection_graph(in.history, in.devices.size(), a * in.horizon, a * in.rho);
      row.cluster_sizes = component_sizes(cg);
      row.largest_fraction =
          static_cast<double>(row.cluster_sizes.front()) / static_cast<double>(cg.vertex_count);
      const auto lifted = lift_by_home(cg, in.devices, *in.graph);
      const ComponentCensus census = census_with_winding(cg.vertex_count, lifted, in.graph->half_side());
      // report winding of the largest component (smallest label among equals)
      std::size_t best = 0;
      for (std::size_t c = 1; c < census.size.size(); ++c) {
        if (census.size[c] > census.size[best]) best = c;
      }
      row.wraps = census.winds[best];
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

// Street percolation graphs --------------------------------------------------

StreetGraph thinned_street_graph(const StreetGraph& g, double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("thinned_street_graph: a must be non-negative");
  StreetGraph out(g.half_side());
  std::vector<bool> keep_vertex(g.vertex_count(), false);
  std::vector<bool> keep_street(g.street_count(), false);
  for (StreetId s = 0; s < g.street_count(); ++s) {
    const Street& st = g.street(s);
    if (st.length >= a) {
      keep_street[s] = true;
      keep_vertex[st.u] = keep_vertex[st.v] = true;
    }
  }
  constexpr auto kGone = static_cast<std::uint32_t>(-1);
  std::vector<VertexId> vmap(g.vertex_count(), kGone);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (keep_vertex[v]) vmap[v] = out.add_crossing(g.crossing(v).pos);
  }
  std::vector<StreetId> smap(g.street_count(), kGone);
  for (StreetId s = 0; s < g.street_count(); ++s) {
    if (!keep_street[s]) continue;
    const Street& st = g.street(s);
    smap[s] = out.add_street(vmap[st.u], vmap[st.v], st.offset);
  }
  std::vector<CellId> cmap(g.cells().size(), kNoCell);
  for (CellId c = 0; c < g.cells().size(); ++c) {
    std::vector<StreetId> boundary;
    for (StreetId s : g.cells()[c].boundary) {
      if (smap[s] != kGone) boundary.push_back(smap[s]);
    }
    cmap[c] = out.add_cell(g.cells()[c].seed, std::move(boundary));
  }
  for (StreetId s = 0; s < g.street_count(); ++s) {
    if (smap[s] == kGone) continue;
    const auto& cells = g.street(s).cells;
    if (cells[0] != kNoCell && cells[1] != kNoCell) {
      out.set_street_cells(smap[s], cmap[cells[0]], cmap[cells[1]]);
    }
  }
  return out;
}

AuxGraph long_edge_percolation_graph(const StreetGraph& g, double a, double b) {
  if (!(a >= 0.0) || !(b >= 0.0)) throw std::invalid_argument("long_edge_percolation_graph: a, b must be non-negative");
  AuxGraph out;
  out.half_side = g.half_side();
  constexpr auto kNone = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> index(g.vertex_count(), kNone);
  for (const Street& st : g.streets()) {
    if (st.length >= a) index[st.u] = index[st.v] = 0;
  }
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (index[v] != kNone) {
      index[v] = static_cast<std::uint32_t>(out.vertices.size());
      out.vertices.push_back(v);
    }
  }
  for (const Street& st : g.streets()) {
    if (st.length < a) continue;
    out.edges.push_back({index[st.u], index[st.v], true, st.length, st.offset});
    out.long_length += st.length;
  }

  // truncated Dijkstra from every long-street endpoint, carrying the lift
  std::vector<double> dist(g.vertex_count(), kForever);
  std::vector<Vec2> lift(g.vertex_count());
  std::vector<VertexId> touched;
  using Item = std::pair<double, VertexId>;
  for (VertexId src : out.vertices) {
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    dist[src] = 0.0;
    lift[src] = {0.0, 0.0};
    touched.push_back(src);
    heap.push({0.0, src});
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (d > dist[v]) continue;
      if (v > src && index[v] != kNone) {
        out.edges.push_back({index[src], index[v], false, d, lift[v]});
      }
      for (StreetId s : g.crossing(v).streets) {
        const Street& st = g.street(s);
        const VertexId w = st.other(v);
        const double nd = d + st.length;
        if (nd > b || nd >= dist[w]) continue;
        if (dist[w] == kForever) touched.push_back(w);
        dist[w] = nd;
        lift[w] = lift[v] + (v == st.u ? st.offset : -st.offset);
        heap.push({nd, w});
      }
    }
    for (VertexId v : touched) dist[v] = kForever;
    touched.clear();
  }
  return out;
}

std::vector<std::pair<VertexId, VertexId>> aux_vertex_pairs(const AuxGraph& aux) {
  std::set<std::pair<VertexId, VertexId>> pairs;
  for (const AuxEdge& e : aux.edges) {
    const VertexId u = aux.vertices.at(e.a), v = aux.vertices.at(e.b);
    pairs.insert({std::min(u, v), std::max(u, v)});
  }
  return {pairs.begin(), pairs.end()};
}

AuxSummary aux_largest_component(const AuxGraph& aux) {
  AuxSummary out;
  if (aux.vertices.empty()) return out;
  std::vector<LiftedEdge> lifted;
  lifted.reserve(aux.edges.size());
  for (const AuxEdge& e : aux.edges) lifted.push_back({e.a, e.b, e.offset});
  const ComponentCensus census = census_with_winding(aux.vertices.size(), lifted, aux.half_side);
  std::vector<AuxComponent> comps(census.size.size());
  for (std::size_t c = 0; c < comps.size(); ++c) {
    comps[c].vertices = census.size[c];
    comps[c].wraps = census.winds[c];
  }
  for (const AuxEdge& e : aux.edges) {
    if (!e.street) continue;
    AuxComponent& c = comps[census.label[e.a]];
    ++c.long_streets;
    c.long_length += e.length;
  }
  for (AuxComponent& c : comps) {
    c.fraction = aux.long_length > 0.0 ? c.long_length / aux.long_length : 0.0;
  }
  std::stable_sort(comps.begin(), comps.end(), [](const AuxComponent& x, const AuxComponent& y) {
    if (x.long_length != y.long_length) return x.long_length > y.long_length;
    return x.vertices > y.vertices;
  });
  out.fraction = comps.front().fraction;
  out.wraps = comps.front().wraps;
  out.components = std::move(comps);
  return out;
}

}  // namespace d2d
