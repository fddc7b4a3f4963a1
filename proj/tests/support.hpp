#pragma once
// Fixtures shared by the test binaries.

#include <cstdint>
#include <vector>

#include "d2dsim/event_engine.hpp"
#include "d2dsim/mobility.hpp"
#include "d2dsim/street_graph.hpp"

namespace d2d::fixtures {

// V0(-100,0) V1(0,0) V2(100,0) V3(200,0), streets 0: V0-V1, 1: V1-V2, 2: V2-V3.
inline StreetGraph line_graph(double half_side = 1000.0) {
  StreetGraph g(half_side);
  for (double x : {-100.0, 0.0, 100.0, 200.0}) g.add_crossing({x, 0.0});
  g.add_street(0, 1);
  g.add_street(1, 2);
  g.add_street(2, 3);
  return g;
}

// Collinear crossings at the given x positions, joined in order.
inline StreetGraph chain_graph(std::vector<double> xs, double half_side = 2000.0) {
  StreetGraph g(half_side);
  for (double x : xs) g.add_crossing({x, 0.0});
  for (VertexId v = 0; v + 1 < xs.size(); ++v) g.add_street(v, v + 1);
  return g;
}

inline Device make_device(DeviceId id, Path path, double velocity) {
  Device d;
  d.id = id;
  d.velocity = velocity;
  d.path = std::move(path);
  d.home = d.path.start();
  d.destination = d.path.end();
  d.pos = d.home;
  return d;
}

inline Device parked(DeviceId id, StreetPosition pos) {
  Device d;
  d.id = id;
  d.pos = d.home = d.destination = pos;
  return d;
}

inline Path straight(std::vector<DirectedStreet> legs, double start_p, double end_p) {
  Path p;
  p.legs = std::move(legs);
  p.start_p = start_p;
  p.end_p = end_p;
  return p;
}

struct Instance {
  StreetGraph graph{1.0};
  std::vector<Device> devices;
};

// PVT with a fixed seed count plus devices with kappa' waypoints.
inline Instance small_instance(std::uint64_t seed, std::size_t seeds, double half_side,
                               double lambda_per_m, double radius,
                               const VelocityDistribution& velocity) {
  RandomStream geometry(seed, "geometry");
  PvtParams params;
  params.half_side = half_side;
  params.seed_count = seeds;
  Instance inst;
  inst.graph = generate_pvt(params, geometry);
  const CellIndex idx = build_cell_index(inst.graph);
  RunStreams streams(seed);
  inst.devices = initialize_devices(inst.graph, idx, lambda_per_m, KappaPrime{radius}, velocity, streams);
  return inst;
}

inline std::vector<Device> scale_velocities(std::vector<Device> devices, double a) {
  for (Device& d : devices) d.velocity *= a;
  return devices;
}

}  // namespace d2d::fixtures
