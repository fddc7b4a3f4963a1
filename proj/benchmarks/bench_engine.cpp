#include <benchmark/benchmark.h>

#include "d2dsim/event_engine.hpp"
#include "d2dsim/oracle.hpp"
#include "d2dsim/street_graph.hpp"

using namespace d2d;

namespace {

struct Scene {
  StreetGraph graph{1.0};
  std::vector<Device> devices;
};

Scene scene(double half_side, double lambda_per_m) {
  RandomStream geometry(1, "geometry");
  PvtParams p;
  p.half_side = half_side;
  p.street_intensity_km_per_km2 = 20;
  Scene s;
  s.graph = generate_pvt(p, geometry);
  const CellIndex idx = build_cell_index(s.graph);
  RunStreams streams(1);
  s.devices = initialize_devices(s.graph, idx, lambda_per_m, KappaPrime{0.4 * half_side},
                                 TruncatedNormalPositive{1.5, 0.3}, streams);
  return s;
}

}  // namespace

static void BM_GeneratePvt(benchmark::State& state) {
  PvtParams p;
  p.half_side = static_cast<double>(state.range(0));
  p.street_intensity_km_per_km2 = 20;
  std::uint64_t seed = 0;
  for (auto _ : state) {
    RandomStream rng(++seed, "geometry");
    benchmark::DoNotOptimize(generate_pvt(p, rng));
  }
}
BENCHMARK(BM_GeneratePvt)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);

// T = 300 s on a torus of side 2 * range(0) metres, 20 devices/km.
static void BM_EventEngine(benchmark::State& state) {
  const Scene s = scene(static_cast<double>(state.range(0)), 0.02);
  SimulationParams p;
  p.horizon = 300;
  p.connection_time = 10;
  p.range = 20;
  std::size_t events = 0;
  for (auto _ : state) {
    Simulation sim(s.graph, s.devices, p);
    benchmark::DoNotOptimize(sim.run());
    events = sim.events_processed();
  }
  state.counters["devices"] = static_cast<double>(s.devices.size());
  state.counters["events"] = static_cast<double>(events);
}
BENCHMARK(BM_EventEngine)->Arg(500)->Arg(1500)->Unit(benchmark::kMillisecond);

// The same scene stepped with epsilon = 1 / range(0) seconds.
static void BM_DiscreteOracle(benchmark::State& state) {
  const Scene s = scene(500, 0.02);
  OracleConfig cfg;
  cfg.epsilon = 1.0 / static_cast<double>(state.range(0));
  cfg.horizon = 300;
  cfg.range = 20;
  cfg.rho = 10;
  for (auto _ : state) benchmark::DoNotOptimize(simulate_discrete(s.graph, s.devices, cfg));
  state.counters["devices"] = static_cast<double>(s.devices.size());
}
BENCHMARK(BM_DiscreteOracle)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
