// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run all criteria
//   acceptance 2 5        run the listed ones
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "d2dsim/connectivity.hpp"
#include "d2dsim/experiment.hpp"
#include "d2dsim/oracle.hpp"
#include "support.hpp"

using namespace d2d;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed checks; the first few are kept for the report.
struct Checks {
  std::size_t failed = 0;
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failed;
    if (notes.size() < 3) notes.push_back(what);
  }
  Outcome outcome(std::string summary) const {
    Outcome o{failed == 0, std::move(summary)};
    for (const auto& n : notes) o.detail += "; " + n;
    return o;
  }
};

StreetGraph pvt(std::uint64_t seed, std::size_t seeds, double L) {
  RandomStream rng(seed, "geometry");
  PvtParams p;
  p.half_side = L;
  p.seed_count = seeds;
  return generate_pvt(p, rng);
}

SimulationParams sim_params(double T, double rho, double r, bool history) {
  SimulationParams p;
  p.horizon = T;
  p.connection_time = rho;
  p.range = r;
  p.record_history = history;
  return p;
}

std::size_t symmetric_difference(const ConnectionGraph& x, const ConnectionGraph& y) {
  std::vector<DevicePair> d;
  std::set_symmetric_difference(x.edges.begin(), x.edges.end(), y.edges.begin(), y.edges.end(),
                                std::back_inserter(d));
  return d.size();
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

// 1 ---------------------------------------------------------------------------

Outcome in_and_out() {
  const std::filesystem::path path = std::filesystem::path(D2DSIM_SOURCE_DIR) / "figures" / "in_out_desk.json";
  ExperimentConfig cfg = parse_config(slurp(path));
  cfg.T_s = {270};
  if (!validate_config(cfg).empty()) return {false, "bundled config invalid"};
  if (cfg.torus_side_m < 3000 || cfg.seeds.size() < 10) return {false, "config below the required size"};
  const auto rows = run_experiment(cfg, {});
  const std::vector<double> scales = cfg.scales();
  std::vector<double> mean(scales.size(), 0.0), speed(scales.size(), 0.0);
  for (const SweepRow& row : rows) {
    const auto k = static_cast<std::size_t>(std::find(scales.begin(), scales.end(), row.scale) - scales.begin());
    mean[k] += row.largest_fraction.value_or(0.0) / static_cast<double>(cfg.seeds.size());
    speed[k] = row.velocity_mean;
  }
  const std::size_t peak = static_cast<std::size_t>(std::max_element(mean.begin(), mean.end()) - mean.begin());
  std::size_t blips = 0;
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < mean.size(); ++i) {
    const double step = i < peak ? mean[i] - mean[i + 1] : mean[i + 1] - mean[i];
    if (step > 0) {
      ++blips;
      worst = std::max(worst, step);
    }
  }
  std::string curve;
  for (std::size_t i = 0; i < mean.size(); ++i) curve += fmt::format(" {:g}:{:.3f}", speed[i], mean[i]);
  Checks c;
  c.expect(speed.front() <= 1.0 && speed.back() >= 10.0, "sweep does not cover 1-10 m/s");
  c.expect(mean[peak] >= 0.5, "peak below 0.5");
  c.expect(peak > 0 && peak + 1 < mean.size(), "peak at a sweep end");
  c.expect(mean.front() < 0.15 && mean.back() < 0.15, "ends not below 0.15");
  c.expect(blips <= 1 && worst <= 0.05, fmt::format("{} blips, worst {:.3f}", blips, worst));
  return c.outcome(fmt::format("peak {:.3f} at {:g} m/s, ends {:.3f}/{:.3f}; curve(m/s:fraction){}", mean[peak],
                               speed[peak], mean.front(), mean.back(), curve));
}

// 2 ---------------------------------------------------------------------------

struct OracleCase {
  fixtures::Instance inst;
  ConnectionGraph engine;
};

constexpr double kOracleT = 300, kOracleRho = 10, kOracleR = 20;

// Slack of every recorded contact: duration against rho, smallest gap
// against r, both measured beyond 5 eps max(1, v_max).
bool clear_of_boundaries(const fixtures::Instance& inst, const std::vector<ContactRecord>& history, double eps) {
  double vmax = 1.0;
  for (const Device& d : inst.devices) vmax = std::max(vmax, d.velocity);
  const double tol = 5 * eps * vmax;
  for (const ContactRecord& rec : history) {
    const double end = std::min(rec.end, kOracleT);
    if (std::abs((end - rec.begin) - kOracleRho) <= tol) return false;
    OracleTrack a(inst.devices[rec.pair.first], inst.graph);
    OracleTrack b(inst.devices[rec.pair.second], inst.graph);
    double gap = std::numeric_limits<double>::infinity();
    for (double t = rec.begin;; t = std::min(t + eps, end)) {
      a.advance_to(t);
      b.advance_to(t);
      if (a.position().street == b.position().street) {
        gap = std::min(gap, std::abs(a.street_coordinate() - b.street_coordinate()));
      }
      if (t >= end) break;
    }
    if (kOracleR - gap <= tol) return false;
  }
  return true;
}

Outcome engine_vs_oracle() {
  std::vector<OracleCase> cases;
  std::size_t rejected = 0;
  for (std::uint64_t seed = 1; cases.size() < 100 && seed < 1000; ++seed) {
    auto inst = fixtures::small_instance(seed, 30, 250, 0.004, 100, TruncatedNormalPositive{1.5, 0.3});
    if (inst.devices.size() > 20) inst.devices.resize(20);
    Simulation sim(inst.graph, inst.devices, sim_params(kOracleT, kOracleRho, kOracleR, true));
    ConnectionGraph engine = sim.run();
    if (!clear_of_boundaries(inst, sim.history(), 0.01)) {
      ++rejected;
      continue;
    }
    cases.push_back({std::move(inst), std::move(engine)});
  }
  const std::vector<double> steps{1.0, 0.1, 0.01};
  std::vector<std::size_t> diff(steps.size(), 0);
  std::size_t edges = 0, mismatched = 0;
  for (const OracleCase& oc : cases) {
    edges += oc.engine.edges.size();
    for (std::size_t k = 0; k < steps.size(); ++k) {
      OracleConfig cfg;
      cfg.epsilon = steps[k];
      cfg.horizon = kOracleT;
      cfg.range = kOracleR;
      cfg.rho = kOracleRho;
      const std::size_t d = symmetric_difference(oc.engine, simulate_discrete(oc.inst.graph, oc.inst.devices, cfg).graph);
      diff[k] += d;
      if (k + 1 == steps.size() && d != 0) ++mismatched;
    }
  }
  Checks c;
  c.expect(cases.size() == 100, "fewer than 100 instances");
  c.expect(mismatched == 0, fmt::format("{} instances differ at eps=0.01", mismatched));
  c.expect(diff[0] >= diff[1] && diff[1] >= diff[2], "symmetric difference increases as eps shrinks");
  return c.outcome(fmt::format("{} instances ({} slack-rejected), {} engine edges, symmetric difference "
                               "eps=1:{} eps=0.1:{} eps=0.01:{}",
                               cases.size(), rejected, edges, diff[0], diff[1], diff[2]));
}

// 3 ---------------------------------------------------------------------------

Outcome scaling_relation() {
  const VelocityDistribution law = TruncatedNormalPositive{1.5, 0.3};
  const double T = 300, rho = 10, r = 20;
  Checks c;
  std::size_t edges = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto inst = fixtures::small_instance(seed, 30, 400, 0.01, 180, law);
    Simulation base(inst.graph, inst.devices, sim_params(2 * T, rho, r, true));
    base.run();
    for (double a : {0.5, 2.0}) {
      const auto scaled_inst = fixtures::small_instance(seed, 30, 400, 0.01, 180, scaled(law, a));
      Simulation direct(inst.graph, scaled_inst.devices, sim_params(T, rho, r, false));
      const ConnectionGraph want = direct.run();
      edges += want.edges.size();
      c.expect(want == derive_connection_graph(base.history(), inst.devices.size(), a * T, a * rho),
               fmt::format("seed {} a={}", seed, a));
    }
  }
  return c.outcome(fmt::format("50 instances x a in {{0.5, 2}}, {} edges, {} mismatches", edges, c.failed));
}

// 4 ---------------------------------------------------------------------------

Outcome contact_solver() {
  const double len = 10000, r = 20, H = 60, dt = 1e-3;
  const StreetGraph g = fixtures::chain_graph({0, len}, 20000);
  RandomStream rng(404);
  auto device = [&](DeviceId id, double x, bool forward, double v) {
    const StreetPosition pos = forward ? StreetPosition{0, 0, 1, x / len} : StreetPosition{0, 1, 0, 1 - x / len};
    if (v == 0.0) return fixtures::parked(id, pos);
    return fixtures::make_device(id, fixtures::straight({{0, pos.from, pos.to}}, pos.p, 1.0), v);
  };
  auto x_at = [&](const Device& d, double t) {
    const double p = d.stationary() ? d.pos.p : position_at(d, t, g);
    return d.pos.from == 0 ? p * len : (1 - p) * len;
  };
  Checks c;
  std::size_t degenerate = 0, with_contact = 0;
  for (int k = 0; k < 10000; ++k) {
    const double xa = rng.uniform(1000, 9000);
    const bool fa = rng.uniform() < 0.5;
    const double va = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.2, 3.0);
    double xb, vb;
    bool fb;
    if (rng.uniform() < 0.2) {
      // same motion: contact forever or never
      ++degenerate;
      xb = xa + rng.uniform(-2 * r, 2 * r);
      fb = fa;
      vb = va;
    } else {
      xb = xa + rng.uniform(-250, 250);
      fb = rng.uniform() < 0.5;
      vb = rng.uniform() < 0.15 ? 0.0 : rng.uniform(0.2, 3.0);
    }
    const Device a = device(0, xa, fa, va), b = device(1, xb, fb, vb);
    const auto solved = compute_contact_interval(a, b, 0, g, 0.0, r);
    double first = -1, last = -1;
    const auto n = static_cast<long>(H / dt);
    for (long i = 0; i <= n; ++i) {
      const double t = static_cast<double>(i) * dt;
      if (std::abs(x_at(a, t) - x_at(b, t)) <= r) {
        if (first < 0) first = t;
        last = t;
      }
    }
    const std::string what = fmt::format("pair {}", k);
    if (first < 0) {
      c.expect(!solved || solved->begin > H || solved->end - solved->begin < dt, what + ": spurious interval");
      continue;
    }
    ++with_contact;
    if (!solved) {
      c.expect(false, what + ": missed interval");
      continue;
    }
    c.expect(std::abs(solved->begin - first) <= dt, what + ": begin");
    if (last >= H - dt) {
      c.expect(solved->end >= H - dt, what + ": end before horizon");
    } else {
      c.expect(std::abs(solved->end - last) <= dt, what + ": end");
    }
  }
  return c.outcome(fmt::format("10000 pairs ({} same-motion, {} with contact), {} disagreements", degenerate,
                               with_contact, c.failed));
}

// 5 ---------------------------------------------------------------------------

double brute_projection_distance(const StreetGraph& g, TorusPoint p) {
  double best = std::numeric_limits<double>::infinity();
  const double side = g.side();
  for (const Street& s : g.streets()) {
    const Vec2 a = g.crossing(s.u).pos.vec();
    for (int i = -1; i <= 1; ++i) {
      for (int j = -1; j <= 1; ++j) {
        const Vec2 q{p.x + i * side, p.y + j * side};
        const double t = std::clamp(dot(q - a, s.offset) / dot(s.offset, s.offset), 0.0, 1.0);
        best = std::min(best, norm(q - (a + t * s.offset)));
      }
    }
  }
  return best;
}

Outcome geometry_suite() {
  Checks c;
  RandomStream rng(505);
  const double L = 512;
  for (int i = 0; i < 10000; ++i) {
    const Vec2 p{static_cast<double>(rng.below(1 << 22)) / 1024.0 - 2048.0,
                 static_cast<double>(rng.below(1 << 22)) / 1024.0 - 2048.0};
    const TorusPoint w = wrap(p, L);
    c.expect(wrap(w.vec(), L) == w, "wrap not idempotent");
    const int k = static_cast<int>(rng.below(7)) - 3, j = static_cast<int>(rng.below(7)) - 3;
    c.expect(wrap(p + Vec2{2 * L * k, 2 * L * j}, L) == w, "wrap not periodic");
  }
  for (int i = 0; i < 10000; ++i) {
    const TorusPoint p = wrap({rng.uniform(-L, L), rng.uniform(-L, L)}, L);
    const TorusPoint q = wrap({rng.uniform(-L, L), rng.uniform(-L, L)}, L);
    double best = std::numeric_limits<double>::infinity();
    for (int a = -1; a <= 1; ++a) {
      for (int b = -1; b <= 1; ++b) best = std::min(best, std::hypot((q.x - p.x) + 2 * L * a, (q.y - p.y) + 2 * L * b));
    }
    c.expect(torus_distance(p, q, L) == best, "torus distance differs from nine images");
  }
  {
    const StreetGraph g = pvt(505, 80, 1000);
    const CellIndex idx = build_cell_index(g);
    for (int k = 0; k < 1000; ++k) {
      const TorusPoint p = wrap({rng.uniform(-1000, 1000), rng.uniform(-1000, 1000)}, 1000);
      const double got = torus_distance(coords(project_to_street(p, g, idx), g), p, 1000);
      c.expect(std::abs(got - brute_projection_distance(g, p)) <= 1e-9, "projection off the nearest street");
    }
  }
  std::vector<double> intensity;
  const double side = 2000;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    RandomStream geo(seed, "geometry");
    PvtParams p;
    p.half_side = side / 2;
    p.street_intensity_km_per_km2 = 20;
    const StreetGraph g = generate_pvt(p, geo);
    for (const Crossing& x : g.crossings()) c.expect(x.streets.size() == 3, fmt::format("degree != 3, seed {}", seed));
    intensity.push_back(total_street_length(g) / 1000.0 / (side * side * 1e-6));
  }
  double mean = 0, var = 0;
  for (double x : intensity) mean += x / 50;
  for (double x : intensity) var += (x - mean) * (x - mean) / 49;
  const double se = std::sqrt(var / 50);
  c.expect(std::abs(mean - 20) <= 3 * se, "street intensity outside 3 sigma");
  return c.outcome(fmt::format("street intensity {:.3f} km/km^2 (3 sigma {:.3f}) over 50 PVTs", mean, 3 * se));
}

// 6 ---------------------------------------------------------------------------

Outcome sampling_suite() {
  Checks c;
  const int n = 10000;
  std::string summary;
  {
    StreetGraph g(1000);
    g.add_crossing({0, 0});
    g.add_crossing({150, 0});
    g.add_street(0, 1);
    RandomStream rng(601);
    double s1 = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const auto k = static_cast<double>(sample_devices(g, 0.02, rng).size());
      s1 += k;
      s2 += k * k;
    }
    const double m = s1 / n, v = s2 / n - m * m;
    c.expect(std::abs(m - 3) <= 3 * std::sqrt(3.0 / n), "Poisson mean");
    c.expect(std::abs(v - 3) <= 3 * std::sqrt(21.0 / n), "Poisson variance");
    summary += fmt::format("count mean {:.3f} var {:.3f}", m, v);
  }
  {
    const double R = 120, L = 500;
    RandomStream rng(7);
    std::vector<double> u;
    for (int i = 0; i < n; ++i) {
      const TorusPoint home = wrap({rng.uniform(-L, L), rng.uniform(-L, L)}, L);
      const double u1 = rng.uniform(), u2 = rng.uniform();
      u.push_back(std::pow(torus_distance(home, kappa_prime_disc_point(home, R, L, u1, u2), L) / R, 2));
    }
    std::sort(u.begin(), u.end());
    double ks = 0;
    for (int i = 0; i < n; ++i) ks = std::max({ks, std::abs(u[i] - double(i) / n), std::abs(u[i] - double(i + 1) / n)});
    c.expect(ks < 1.628 / std::sqrt(double(n)), "kappa' radial KS");
    summary += fmt::format(", kappa' KS {:.4f}", ks);
  }
  {
    StreetGraph g(1000);
    g.add_crossing({0, 0});
    g.add_crossing({10, 0});
    g.add_street(0, 1);
    g.add_crossing({0, 5});
    g.add_crossing({30, 5});
    g.add_street(2, 3);
    RandomStream rng(603);
    int on_long = 0;
    for (int i = 0; i < n; ++i) {
      on_long += sample_destination_kappa_doubleprime({0, 0, 1, 0.5}, 40, g, rng).position.street == 1;
    }
    const double share = double(on_long) / n;
    c.expect(std::abs(share - 0.75) <= 3 * std::sqrt(0.75 * 0.25 / n), "kappa'' length weighting");
    summary += fmt::format(", kappa'' long share {:.3f}", share);
  }
  {
    RandomStream rng(604);
    const TruncatedNormalPositive law{1.0, 1.0};
    double s1 = 0, s2 = 0;
    bool positive = true;
    for (int i = 0; i < n; ++i) {
      const double v = sample_velocity(law, rng);
      positive = positive && v > 0;
      s1 += v;
      s2 += v * v;
    }
    const double m = s1 / n, sd = std::sqrt(s2 / n - m * m);
    const double a = -1.0, pdf = std::exp(-0.5 * a * a) / std::sqrt(2 * std::numbers::pi);
    const double want = 1.0 + pdf / (0.5 * std::erfc(a / std::sqrt(2.0)));
    c.expect(positive, "N+ non-positive draw");
    c.expect(std::abs(m - want) <= 3 * sd / std::sqrt(double(n)), "N+ mean");
    summary += fmt::format(", N+ mean {:.4f} (exact {:.4f})", m, want);
  }
  return c.outcome(summary);
}

// 7 ---------------------------------------------------------------------------

std::set<std::pair<VertexId, VertexId>> aux_pairs(const StreetGraph& g, double a, double b) {
  const auto v = aux_vertex_pairs(long_edge_percolation_graph(g, a, b));
  return {v.begin(), v.end()};
}

std::vector<std::vector<double>> all_pairs(const StreetGraph& g) {
  const std::size_t n = g.vertex_count();
  std::vector d(n, std::vector(n, std::numeric_limits<double>::infinity()));
  for (std::size_t v = 0; v < n; ++v) d[v][v] = 0;
  for (const Street& s : g.streets()) d[s.u][s.v] = d[s.v][s.u] = std::min(d[s.u][s.v], s.length);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

Outcome aux_suite() {
  Checks c;
  const std::vector<double> as{40, 80, 120, 160, 200}, bs{0, 25, 50, 100, 200};
  auto subset = [](const auto& x, const auto& y) { return std::includes(y.begin(), y.end(), x.begin(), x.end()); };
  std::size_t compared = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const StreetGraph g = pvt(700 + seed, 40, 500);
    for (std::size_t i = 0; i < as.size(); ++i) {
      for (std::size_t j = 0; j < bs.size(); ++j) {
        const auto here = aux_pairs(g, as[i], bs[j]);
        if (i + 1 < as.size()) c.expect(subset(aux_pairs(g, as[i + 1], bs[j]), here), "not monotone in a");
        if (j + 1 < bs.size()) c.expect(subset(here, aux_pairs(g, as[i], bs[j + 1])), "not monotone in b");
      }
    }
    const StreetGraph small = pvt(800 + seed, 10, 300);
    const auto d = all_pairs(small);
    for (double a : as) {
      for (double b : bs) {
        std::set<VertexId> ends;
        std::set<std::pair<VertexId, VertexId>> want;
        for (const Street& s : small.streets()) {
          if (s.length < a) continue;
          ends.insert(s.u);
          ends.insert(s.v);
          want.insert(std::minmax(s.u, s.v));
        }
        for (VertexId u : ends)
          for (VertexId v : ends)
            if (u < v && d[u][v] <= b) want.insert({u, v});
        c.expect(aux_pairs(small, a, b) == want, fmt::format("APSP mismatch seed {} a={} b={}", seed, a, b));
        ++compared;
      }
    }
  }
  return c.outcome(fmt::format("10 geometries x 25 grid points monotone, {} graphs vs APSP", compared));
}

// 8 ---------------------------------------------------------------------------

Outcome determinism() {
  const std::filesystem::path path = std::filesystem::path(D2DSIM_SOURCE_DIR) / "tests" / "data" / "small.json";
  const ExperimentConfig cfg = parse_config(slurp(path));
  auto csv = [&](unsigned jobs) {
    RunOptions opts;
    opts.jobs = jobs;
    std::ostringstream out;
    write_sweep_csv(out, run_experiment(cfg, opts));
    return out.str();
  };
  const std::string first = csv(1);
  Checks c;
  c.expect(first == csv(1), "rerun differs");
  c.expect(first == csv(3), "rerun with 3 jobs differs");
  return c.outcome(fmt::format("{} CSV bytes identical over 3 runs", first.size()));
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "in-and-out of percolation", in_and_out},
      {2, "event engine vs discrete oracle", engine_vs_oracle},
      {3, "scaling relation", scaling_relation},
      {4, "contact-interval solver", contact_solver},
      {5, "geometry suite", geometry_suite},
      {6, "sampling suite", sampling_suite},
      {7, "S^{a,b} suite", aux_suite},
      {8, "determinism", determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  bool ok = true;
  for (const Criterion& cr : all) {
    if (!wanted.empty() && !wanted.contains(cr.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = cr.run();
    } catch (const std::exception& ex) {
      o = {false, std::string("exception: ") + ex.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s (%.1f s) %s\n", cr.id, o.pass ? "PASS" : "FAIL", cr.name, secs, o.detail.c_str());
    std::fflush(stdout);
    ok = ok && o.pass;
  }
  return ok ? 0 : 1;
}
