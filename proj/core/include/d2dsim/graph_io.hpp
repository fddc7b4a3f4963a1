#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "d2dsim/event_engine.hpp"
#include "d2dsim/mobility.hpp"
#include "d2dsim/street_graph.hpp"

namespace d2d {

/// {L, vertices:[{id,x,y}], edges:[{id,u,v,length,wrap,dx,dy}],
///  cells:[{id,seed_x,seed_y,edge_ids}]}. `wrap` is null or
/// {exit:[x,y], reentry:[x,y]}; (dx, dy) is the planar offset u -> v.
nlohmann::ordered_json graph_to_json(const StreetGraph& g);

/// Inverse of graph_to_json. Edges without dx/dy take the minimal image.
/// Throws std::invalid_argument on malformed input.
StreetGraph graph_from_json(const nlohmann::json& j);

nlohmann::ordered_json position_to_json(const StreetPosition& pos);
nlohmann::ordered_json devices_to_json(std::span<const Device> devices);

/// One trace record {t, kind, device, street} without trailing newline.
std::string trace_line(const Event& ev, std::optional<StreetId> street);

/// pair_i,pair_j,u,w with a header row.
void write_history_csv(std::ostream& out, std::span<const ContactRecord> history);

/// Shortest decimal text that reads back as the same double.
std::string format_double(double x);

}  // namespace d2d
