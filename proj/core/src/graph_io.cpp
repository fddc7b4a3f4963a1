#include "d2dsim/graph_io.hpp"

#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace d2d {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

ordered_json point(Vec2 p) { return ordered_json::array({p.x, p.y}); }

const char* state_name(DeviceState s) {
  switch (s) {
    case DeviceState::Susceptible: return "susceptible";
    case DeviceState::Infected: return "infected";
    case DeviceState::Cured: return "cured";
  }
  return "?";
}

}  // namespace

std::string format_double(double x) { return fmt::format("{}", x); }

ordered_json graph_to_json(const StreetGraph& g) {
  ordered_json out;
  out["L"] = g.half_side();
  ordered_json vertices = ordered_json::array();
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    const TorusPoint p = g.crossing(v).pos;
    vertices.push_back({{"id", v}, {"x", p.x}, {"y", p.y}});
  }
  out["vertices"] = std::move(vertices);
  ordered_json edges = ordered_json::array();
  for (StreetId s = 0; s < g.street_count(); ++s) {
    const Street& st = g.street(s);
    ordered_json e;
    e["id"] = s;
    e["u"] = st.u;
    e["v"] = st.v;
    e["length"] = st.length;
    if (st.wrap) {
      e["wrap"] = {{"exit", point(st.wrap->exit)}, {"reentry", point(st.wrap->reentry)}};
    } else {
      e["wrap"] = nullptr;
    }
    e["dx"] = st.offset.x;
    e["dy"] = st.offset.y;
    edges.push_back(std::move(e));
  }
  out["edges"] = std::move(edges);
  ordered_json cells = ordered_json::array();
  for (CellId c = 0; c < g.cells().size(); ++c) {
    const VoronoiCell& cell = g.cells()[c];
    cells.push_back({{"id", c}, {"seed_x", cell.seed.x}, {"seed_y", cell.seed.y}, {"edge_ids", cell.boundary}});
  }
  out["cells"] = std::move(cells);
  return out;
}

StreetGraph graph_from_json(const json& j) {
  try {
    StreetGraph g(j.at("L").get<double>());
    for (const auto& v : j.at("vertices")) {
      if (v.at("id").get<std::size_t>() != g.vertex_count()) throw std::invalid_argument("vertex ids must be 0..n-1");
      g.add_crossing(TorusPoint{v.at("x").get<double>(), v.at("y").get<double>()});
    }
    for (const auto& e : j.at("edges")) {
      if (e.at("id").get<std::size_t>() != g.street_count()) throw std::invalid_argument("edge ids must be 0..m-1");
      const auto u = e.at("u").get<VertexId>(), v = e.at("v").get<VertexId>();
      if (e.contains("dx") && e.contains("dy")) {
        g.add_street(u, v, Vec2{e["dx"].get<double>(), e["dy"].get<double>()});
      } else {
        g.add_street(u, v);
      }
    }
    std::vector<std::vector<CellId>> owners(g.street_count());
    if (j.contains("cells")) {
      for (const auto& c : j.at("cells")) {
        const auto id = c.at("id").get<CellId>();
        if (id != g.cells().size()) throw std::invalid_argument("cell ids must be 0..k-1");
        auto edge_ids = c.at("edge_ids").get<std::vector<StreetId>>();
        for (StreetId s : edge_ids) owners.at(s).push_back(id);
        g.add_cell(TorusPoint{c.at("seed_x").get<double>(), c.at("seed_y").get<double>()}, std::move(edge_ids));
      }
    }
    for (StreetId s = 0; s < g.street_count(); ++s) {
      if (owners[s].size() == 2) g.set_street_cells(s, owners[s][0], owners[s][1]);
    }
    return g;
  } catch (const json::exception& ex) {
    throw std::invalid_argument(std::string("graph json: ") + ex.what());
  } catch (const std::out_of_range& ex) {
    throw std::invalid_argument(std::string("graph json: ") + ex.what());
  }
}

ordered_json position_to_json(const StreetPosition& pos) {
  return {{"street", pos.street}, {"v1", pos.from}, {"v2", pos.to}, {"p", pos.p}};
}

ordered_json devices_to_json(std::span<const Device> devices) {
  ordered_json out = ordered_json::array();
  for (const Device& d : devices) {
    ordered_json j;
    j["id"] = d.id;
    j["street"] = d.pos.street;
    j["v1"] = d.pos.from;
    j["v2"] = d.pos.to;
    j["p"] = d.pos.p;
    j["velocity"] = d.velocity;
    j["state"] = state_name(d.state);
    j["home"] = position_to_json(d.home);
    j["destination"] = position_to_json(d.destination);
    out.push_back(std::move(j));
  }
  return out;
}

std::string trace_line(const Event& ev, std::optional<StreetId> street) {
  ordered_json j;
  j["t"] = ev.time;
  j["kind"] = to_string(ev.kind);
  j["device"] = ev.device ? ordered_json(*ev.device) : ordered_json(nullptr);
  j["street"] = street ? ordered_json(*street) : ordered_json(nullptr);
  return j.dump();
}

void write_history_csv(std::ostream& out, std::span<const ContactRecord> history) {
  out << "pair_i,pair_j,u,w\n";
  for (const ContactRecord& r : history) {
    out << r.pair.first << ',' << r.pair.second << ',' << format_double(r.begin) << ','
        << format_double(r.end) << '\n';
  }
}

}  // namespace d2d
