#include "d2dsim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "d2dsim/event_engine.hpp"
#include "d2dsim/graph_io.hpp"

namespace d2d {

using nlohmann::json;

namespace {

std::string join_messages(const std::vector<ConfigViolation>& v) {
  std::string out;
  for (const auto& x : v) {
    if (!out.empty()) out += "; ";
    out += format_violation("config", x);
  }
  return out;
}

// Reads typed fields, collecting problems instead of stopping at the first.
class Reader {
 public:
  explicit Reader(const std::string& text) : text_(text) {}

  std::vector<ConfigViolation> problems;

  void fail(const std::string& path, const std::string& msg) {
    problems.push_back({path, msg, locate_field(text_, path)});
  }

  void only(const json& obj, const std::string& path, std::initializer_list<const char*> keys) {
    for (const auto& [k, v] : obj.items()) {
      if (std::find_if(keys.begin(), keys.end(), [&](const char* x) { return k == x; }) == keys.end()) {
        fail(path.empty() ? k : path + "." + k, "unknown field");
      }
    }
  }

  const json* field(const json& obj, const std::string& path, const char* key, bool required) {
    if (!obj.is_object()) return nullptr;
    auto it = obj.find(key);
    if (it == obj.end()) {
      if (required) problems.push_back({join(path, key), "missing required field", locate_field(text_, path)});
      return nullptr;
    }
    return &*it;
  }

  std::optional<double> number(const json& obj, const std::string& path, const char* key,
                               bool required = true) {
    const json* v = field(obj, path, key, required);
    if (!v) return std::nullopt;
    if (!v->is_number()) {
      fail(join(path, key), "must be a number");
      return std::nullopt;
    }
    return v->get<double>();
  }

  std::optional<bool> boolean(const json& obj, const std::string& path, const char* key) {
    const json* v = field(obj, path, key, false);
    if (!v) return std::nullopt;
    if (!v->is_boolean()) {
      fail(join(path, key), "must be true or false");
      return std::nullopt;
    }
    return v->get<bool>();
  }

  const json* object(const json& obj, const std::string& path, const char* key, bool required) {
    const json* v = field(obj, path, key, required);
    if (v && !v->is_object()) {
      fail(join(path, key), "must be an object");
      return nullptr;
    }
    return v;
  }

  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }

 private:
  const std::string& text_;
};

// {"name": {params}} with exactly one name
std::optional<std::pair<std::string, const json*>> single_choice(Reader& rd, const json& v,
                                                                 const std::string& path) {
  if (!v.is_object() || v.size() != 1 || !v.begin().value().is_object()) {
    rd.fail(path, "must be an object with exactly one variant");
    return std::nullopt;
  }
  return std::make_pair(v.begin().key(), &v.begin().value());
}

}  // namespace

std::vector<double> ExperimentConfig::scales() const {
  if (sweep && !sweep->values.empty()) return sweep->values;
  return {1.0};
}

ConfigError::ConfigError(std::vector<ConfigViolation> v)
    : std::runtime_error(join_messages(v)), violations_(std::move(v)) {}

int locate_field(const std::string& text, const std::string& dotted_path) {
  std::size_t pos = 0;
  std::size_t found = std::string::npos;
  std::stringstream parts(dotted_path);
  std::string key;
  while (std::getline(parts, key, '.')) {
    const std::string quoted = "\"" + key + "\"";
    std::size_t at = pos;
    while (true) {
      at = text.find(quoted, at);
      if (at == std::string::npos) return 0;
      std::size_t after = at + quoted.size();
      while (after < text.size() && std::isspace(static_cast<unsigned char>(text[after]))) ++after;
      if (after < text.size() && text[after] == ':') break;
      at += quoted.size();
    }
    found = at;
    pos = at + quoted.size();
  }
  if (found == std::string::npos) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(found), '\n'));
}

std::string format_violation(const std::string& file, const ConfigViolation& v) {
  if (v.line > 0) return fmt::format("{}:{}: {}: {}", file, v.line, v.field, v.message);
  return fmt::format("{}: {}: {}", file, v.field, v.message);
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& ex) {
    const std::size_t upto = std::min<std::size_t>(ex.byte > 0 ? ex.byte - 1 : 0, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    const auto nl = text.rfind('\n', upto == 0 ? 0 : upto - 1);
    const std::size_t col = nl == std::string::npos ? upto + 1 : upto - nl;
    throw ConfigError({{"<json>", fmt::format("syntax error at column {}: {}", col, ex.what()),
                        static_cast<int>(line)}});
  }
  Reader rd(text);
  ExperimentConfig cfg;
  if (!root.is_object()) {
    throw ConfigError({{"<root>", "configuration must be a JSON object", 1}});
  }
  rd.only(root, "", {"torus_side_m", "street_intensity_km_per_km2", "lambda_per_km", "r_m", "rho_s",
                     "T_s", "kernel", "velocity", "sweep", "seeds", "outputs"});

  auto set = [](double& dst, std::optional<double> v) {
    if (v) dst = *v;
  };
  set(cfg.torus_side_m, rd.number(root, "", "torus_side_m"));
  set(cfg.street_intensity_km_per_km2, rd.number(root, "", "street_intensity_km_per_km2"));
  set(cfg.lambda_per_km, rd.number(root, "", "lambda_per_km"));
  set(cfg.r_m, rd.number(root, "", "r_m"));
  set(cfg.rho_s, rd.number(root, "", "rho_s"));

  if (const json* t = rd.field(root, "", "T_s", true)) {
    if (t->is_number()) {
      cfg.T_s = {t->get<double>()};
    } else if (t->is_array() && !t->empty() &&
               std::all_of(t->begin(), t->end(), [](const json& x) { return x.is_number(); })) {
      cfg.T_s = t->get<std::vector<double>>();
    } else {
      rd.fail("T_s", "must be a number or a non-empty list of numbers");
    }
  }

  if (const json* k = rd.object(root, "", "kernel", true)) {
    if (auto choice = single_choice(rd, *k, "kernel")) {
      const auto& [name, params] = *choice;
      const std::string path = "kernel." + name;
      if (name == "kappa_prime") {
        rd.only(*params, path, {"R_m"});
        if (auto r = rd.number(*params, path, "R_m")) cfg.kernel = KappaPrime{*r};
      } else if (name == "kappa_doubleprime") {
        rd.only(*params, path, {"L_m"});
        if (auto r = rd.number(*params, path, "L_m")) cfg.kernel = KappaDoublePrime{*r};
      } else {
        rd.fail(path, "unknown kernel (expected kappa_prime or kappa_doubleprime)");
      }
    }
  }

  if (const json* v = rd.object(root, "", "velocity", true)) {
    if (auto choice = single_choice(rd, *v, "velocity")) {
      const auto& [name, params] = *choice;
      const std::string path = "velocity." + name;
      if (name == "dirac") {
        rd.only(*params, path, {"v_mps"});
        if (auto x = rd.number(*params, path, "v_mps")) cfg.velocity = Dirac{*x};
      } else if (name == "two_point") {
        rd.only(*params, path, {"pedestrian_mps", "driving_mps", "pedestrian_probability"});
        auto a = rd.number(*params, path, "pedestrian_mps");
        auto b = rd.number(*params, path, "driving_mps");
        auto p = rd.number(*params, path, "pedestrian_probability");
        if (a && b && p) cfg.velocity = TwoPoint{*a, *b, *p};
      } else if (name == "normal_plus") {
        rd.only(*params, path, {"mean_mps", "stddev_mps"});
        auto m = rd.number(*params, path, "mean_mps");
        auto s = rd.number(*params, path, "stddev_mps");
        if (m && s) cfg.velocity = TruncatedNormalPositive{*m, *s};
      } else {
        rd.fail(path, "unknown velocity law (expected dirac, two_point or normal_plus)");
      }
    }
  }

  if (const json* s = rd.object(root, "", "sweep", false)) {
    rd.only(*s, "sweep", {"parameter", "values"});
    SweepSpec sweep;
    if (const json* p = rd.field(*s, "sweep", "parameter", true)) {
      if (!p->is_string() || p->get<std::string>() != "velocity_scale") {
        rd.fail("sweep.parameter", "must be \"velocity_scale\"");
      }
    }
    if (const json* vals = rd.field(*s, "sweep", "values", true)) {
      if (vals->is_array() && !vals->empty() &&
          std::all_of(vals->begin(), vals->end(), [](const json& x) { return x.is_number(); })) {
        sweep.values = vals->get<std::vector<double>>();
      } else {
        rd.fail("sweep.values", "must be a non-empty list of numbers");
      }
    }
    cfg.sweep = std::move(sweep);
  }

  if (const json* seeds = rd.field(root, "", "seeds", true)) {
    if (seeds->is_array() && !seeds->empty() &&
        std::all_of(seeds->begin(), seeds->end(), [](const json& x) { return x.is_number_unsigned(); })) {
      cfg.seeds = seeds->get<std::vector<std::uint64_t>>();
    } else {
      rd.fail("seeds", "must be a non-empty list of non-negative integers");
    }
  }

  if (const json* o = rd.object(root, "", "outputs", false)) {
    rd.only(*o, "outputs", {"csv_path", "trace", "history"});
    if (const json* p = rd.field(*o, "outputs", "csv_path", false)) {
      if (p->is_string() && !p->get<std::string>().empty()) {
        cfg.outputs.csv_path = p->get<std::string>();
      } else {
        rd.fail("outputs.csv_path", "must be a non-empty string");
      }
    }
    if (auto b = rd.boolean(*o, "outputs", "trace")) cfg.outputs.trace = *b;
    if (auto b = rd.boolean(*o, "outputs", "history")) cfg.outputs.history = *b;
  }

  if (!rd.problems.empty()) throw ConfigError(std::move(rd.problems));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({{"<file>", "cannot read " + path.string(), 0}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<ConfigViolation> validate_config(const ExperimentConfig& cfg, const std::string* source) {
  std::vector<ConfigViolation> out;
  auto add = [&](const std::string& field, const std::string& msg) {
    out.push_back({field, msg, source ? locate_field(*source, field) : 0});
  };
  auto positive = [&](double x, const char* field) {
    if (!(x > 0.0) || !std::isfinite(x)) add(field, std::string(field) + " > 0");
  };
  positive(cfg.torus_side_m, "torus_side_m");
  positive(cfg.street_intensity_km_per_km2, "street_intensity_km_per_km2");
  if (!(cfg.lambda_per_km >= 0.0) || !std::isfinite(cfg.lambda_per_km)) add("lambda_per_km", "lambda_per_km >= 0");
  positive(cfg.r_m, "r_m");
  positive(cfg.rho_s, "rho_s");
  if (cfg.T_s.empty()) add("T_s", "at least one horizon");
  for (double t : cfg.T_s) {
    if (!(t > 0.0) || !std::isfinite(t)) {
      add("T_s", "T_s > 0");
    } else if (!(cfg.rho_s < t)) {
      add("rho_s", "rho_s < T_s");
    }
  }

  const double quarter = cfg.torus_side_m / 4.0;
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        const std::string field = std::is_same_v<K, KappaPrime> ? "kernel.kappa_prime.R_m" : "kernel.kappa_doubleprime.L_m";
        if (!(k.radius > 0.0) || !std::isfinite(k.radius)) add(field, "kernel radius > 0");
        else if (!(k.radius < quarter)) add(field, "kernel radius < torus_side/4");
      },
      cfg.kernel);

  try {
    validate(cfg.velocity);
  } catch (const std::invalid_argument& ex) {
    const char* name = std::visit(
        [](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, Dirac>) return "velocity.dirac";
          else if constexpr (std::is_same_v<V, TwoPoint>) return "velocity.two_point";
          else return "velocity.normal_plus";
        },
        cfg.velocity);
    add(name, ex.what());
  }

  if (cfg.sweep) {
    for (double a : cfg.sweep->values) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        add("sweep.values", "every scale > 0");
        break;
      }
    }
  }
  if (cfg.seeds.empty()) add("seeds", "at least one seed");
  if (std::set<std::uint64_t>(cfg.seeds.begin(), cfg.seeds.end()).size() != cfg.seeds.size()) {
    add("seeds", "seeds are distinct");
  }
  if (cfg.torus_side_m > 0.0 && cfg.street_intensity_km_per_km2 > 0.0) {
    const double area_km2 = cfg.torus_side_m * cfg.torus_side_m * 1e-6;
    if (calibrate_seed_intensity(cfg.street_intensity_km_per_km2) * area_km2 < 3.0) {
      add("street_intensity_km_per_km2", "expected seed count >= 3 on the torus");
    }
  }
  return out;
}

StreetGraph generate_streets(const ExperimentConfig& cfg, std::uint64_t master_seed) {
  RandomStream geometry(master_seed, "geometry");
  PvtParams params;
  params.half_side = cfg.half_side();
  params.street_intensity_km_per_km2 = cfg.street_intensity_km_per_km2;
  return generate_pvt(params, geometry);
}

std::vector<SweepRow> run_seed(const ExperimentConfig& cfg, std::uint64_t master_seed,
                               const RunOptions& opts) {
  const StreetGraph g = generate_streets(cfg, master_seed);
  const CellIndex idx = build_cell_index(g);
  RunStreams streams(master_seed);
  std::vector<Device> devices =
      initialize_devices(g, idx, cfg.lambda_per_m(), cfg.kernel, cfg.velocity, streams);

  const std::vector<double> scales = cfg.scales();
  double base_horizon = 0.0;
  for (double t : cfg.T_s) base_horizon = std::max(base_horizon, required_base_horizon(t, scales));

  SimulationParams params;
  params.horizon = base_horizon;
  params.connection_time = cfg.rho_s;
  params.range = cfg.r_m;
  params.record_history = true;
  Simulation sim(g, devices, params);

  std::ofstream trace;
  if (cfg.outputs.trace) {
    trace.open(opts.out_dir / fmt::format("trace_seed{}.jsonl", master_seed));
    sim.set_trace([&trace](const Event& ev, std::optional<StreetId> street) {
      trace << trace_line(ev, street) << '\n';
    });
  }
  sim.run();
  if (cfg.outputs.history) {
    std::ofstream hist(opts.out_dir / fmt::format("history_seed{}.csv", master_seed));
    write_history_csv(hist, sim.history());
  }

  std::vector<SweepRow> rows;
  for (double t : cfg.T_s) {
    VelocitySweepInput in;
    in.graph = &g;
    in.devices = devices;
    in.history = sim.history();
    in.base_horizon = base_horizon;
    in.horizon = t;
    in.rho = cfg.rho_s;
    in.range = cfg.r_m;
    in.lambda_per_m = cfg.lambda_per_m();
    in.base_velocity = cfg.velocity;
    in.scales = scales;
    in.seed = master_seed;
    SweepResult res = velocity_sweep(in);
    for (auto& row : res.rows) rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<SweepRow> run_experiment(const ExperimentConfig& cfg, const RunOptions& opts) {
  const std::size_t n = cfg.seeds.size();
  std::vector<std::vector<SweepRow>> per_seed(n);
  std::vector<std::exception_ptr> errors(n);
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&]() {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next == n) return;
        i = next++;
      }
      try {
        per_seed[i] = run_seed(cfg, cfg.seeds[i] + opts.seed_offset, opts);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned jobs = std::max(1u, std::min<unsigned>(opts.jobs, static_cast<unsigned>(n)));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<SweepRow> rows;
  for (auto& block : per_seed) {
    for (auto& row : block) rows.push_back(std::move(row));
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "seed,scale_a,velocity_mean_mps,T_s,rho_s,r_m,lambda_per_m,n_devices,largest_fraction,wraps\n";
  for (const SweepRow& r : rows) {
    out << r.seed << ',' << format_double(r.scale) << ',' << format_double(r.velocity_mean) << ','
        << format_double(r.horizon) << ',' << format_double(r.rho) << ',' << format_double(r.range) << ','
        << format_double(r.lambda_per_m) << ',' << r.n_devices << ','
        << (r.largest_fraction ? format_double(*r.largest_fraction) : std::string()) << ','
        << (r.wraps ? 1 : 0) << '\n';
  }
}

}  // namespace d2d
