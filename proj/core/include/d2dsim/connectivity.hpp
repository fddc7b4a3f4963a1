#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "d2dsim/event_engine.hpp"
#include "d2dsim/mobility.hpp"
#include "d2dsim/street_graph.hpp"

namespace d2d {

/// Component sizes, largest first.
std::vector<std::size_t> component_sizes(const ConnectionGraph& cg);

/// Size of the largest component over the vertex count. Throws
/// std::invalid_argument for a graph without vertices.
double largest_cluster_fraction(const ConnectionGraph& cg);

// Components with winding ----------------------------------------------------

/// Undirected edge a - b with the planar displacement from a to b.
struct LiftedEdge {
  std::uint32_t a = 0;
  std::uint32_t b = 0;
  Vec2 offset;
};

struct ComponentCensus {
  std::vector<std::uint32_t> label;  ///< component per vertex, numbered by smallest member
  std::vector<std::size_t> size;     ///< per component
  std::vector<bool> winds;           ///< holds a cycle around the torus
};

/// Components of the graph, and for each whether some cycle in it has a
/// non-zero winding number around either axis of the torus of side 2L.
ComponentCensus census_with_winding(std::size_t vertex_count, std::span<const LiftedEdge> edges,
                                    double half_side);

/// Edge lifts of a device graph from the devices' homes (minimal image).
std::vector<LiftedEdge> lift_by_home(const ConnectionGraph& cg, std::span<const Device> devices,
                                     const StreetGraph& g);

// Velocity sweep -------------------------------------------------------------

struct SweepRow {
  std::uint64_t seed = 0;
  double scale = 1.0;
  double velocity_mean = 0.0;  ///< m/s
  double horizon = 0.0;        ///< s
  double rho = 0.0;            ///< s
  double range = 0.0;          ///< m
  double lambda_per_m = 0.0;
  std::size_t n_devices = 0;
  std::optional<double> largest_fraction;  ///< empty without devices
  bool wraps = false;
  std::vector<std::size_t> cluster_sizes;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// One base run recorded with contact history, evaluated for velocity law
/// a * V at each scale a through the graph derived at (a T, a rho).
struct VelocitySweepInput {
  const StreetGraph* graph = nullptr;
  std::span<const Device> devices;
  std::span<const ContactRecord> history;
  double base_horizon = 0.0;
  double horizon = 0.0;
  double rho = 0.0;
  double range = 0.0;
  double lambda_per_m = 0.0;
  VelocityDistribution base_velocity;
  std::vector<double> scales;
  std::uint64_t seed = 0;
};

/// Horizon the base run needs to serve every scale.
double required_base_horizon(double horizon, std::span<const double> scales);

/// Rows in scale order. Throws std::invalid_argument if a scale needs more
/// history than the base horizon.
SweepResult velocity_sweep(const VelocitySweepInput& in);

// Street percolation graphs --------------------------------------------------

/// Streets of length >= a and their endpoints; cells keep surviving streets.
/// Vertex and street ids are renumbered in increasing order of the originals.
StreetGraph thinned_street_graph(const StreetGraph& g, double a);

struct AuxEdge {
  std::uint32_t a = 0;  ///< indices into AuxGraph::vertices
  std::uint32_t b = 0;
  bool street = false;  ///< a long street (else a short-distance link)
  double length = 0.0;  ///< street length or street distance
  Vec2 offset;          ///< planar displacement from a to b
};

struct AuxGraph {
  double half_side = 0.0;
  std::vector<VertexId> vertices;  ///< original ids, ascending
  std::vector<AuxEdge> edges;
  double long_length = 0.0;        ///< total length of the long streets
};

/// S^{a,b}: long streets (length >= a) plus links between distinct long-street
/// endpoints at street distance <= b in the full system.
AuxGraph long_edge_percolation_graph(const StreetGraph& g, double a, double b);

/// Unordered original-vertex pairs joined by some edge of the graph.
std::vector<std::pair<VertexId, VertexId>> aux_vertex_pairs(const AuxGraph& aux);

struct AuxComponent {
  std::size_t vertices = 0;
  std::size_t long_streets = 0;
  double long_length = 0.0;
  double fraction = 0.0;  ///< share of all long-street length
  bool wraps = false;
};

struct AuxSummary {
  double fraction = 0.0;  ///< of the largest component (by long length)
  bool wraps = false;
  std::vector<AuxComponent> components;  ///< by decreasing long length
};

AuxSummary aux_largest_component(const AuxGraph& aux);

}  // namespace d2d
