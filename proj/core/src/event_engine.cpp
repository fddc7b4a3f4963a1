#include "d2dsim/event_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace d2d {

int kind_priority(EventKind kind) {
  switch (kind) {
    case EventKind::ReachCrossing: return 0;
    case EventKind::ReachDestination: return 1;
    case EventKind::GlobalUpdate: return 2;
    case EventKind::Infected: return 3;
    case EventKind::Cured: return 4;
    case EventKind::Finish: return 5;
  }
  return 6;
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::Infected: return "infected";
    case EventKind::Cured: return "cured";
    case EventKind::ReachCrossing: return "reach_crossing";
    case EventKind::ReachDestination: return "reach_destination";
    case EventKind::GlobalUpdate: return "global_update";
    case EventKind::Finish: return "finish";
  }
  return "?";
}

bool event_before(const Event& a, const Event& b) {
  if (a.time != b.time) return a.time < b.time;
  const int pa = kind_priority(a.kind), pb = kind_priority(b.kind);
  if (pa != pb) return pa < pb;
  // events without a device sort first
  const bool ha = a.device.has_value(), hb = b.device.has_value();
  if (ha != hb) return hb;
  return ha && *a.device < *b.device;
}

Event EventQueue::pop() {
  Event e = heap_.top();
  heap_.pop();
  return e;
}

std::vector<Event> EventQueue::snapshot() const {
  auto copy = heap_;
  std::vector<Event> out;
  out.reserve(copy.size());
  while (!copy.empty()) {
    out.push_back(copy.top());
    copy.pop();
  }
  return out;
}

// Contact algebra ------------------------------------------------------------

StreetMotion street_motion(const Device& d, const StreetGraph& g) {
  const Street& s = g.street(d.pos.street);
  const bool forward = d.pos.from == s.u;
  const double x = (forward ? d.pos.p : 1.0 - d.pos.p) * s.length;
  if (d.stationary()) return {x, 0.0};
  return {x, forward ? d.velocity : -d.velocity};
}

std::optional<ContactInterval> solve_contact(const StreetMotion& a, const StreetMotion& b,
                                             double t_now, double range) {
  const double dx = a.x - b.x;
  const double ds = a.speed - b.speed;
  if (ds == 0.0) {
    if (std::abs(dx) <= range) return ContactInterval{t_now, kForever};
    return std::nullopt;
  }
  const double t1 = t_now + (-range - dx) / ds;
  const double t2 = t_now + (range - dx) / ds;
  return ContactInterval{std::min(t1, t2), std::max(t1, t2)};
}

namespace {

StreetMotion motion_at(const Device& d, double t, const StreetGraph& g) {
  Device tmp = d;
  tmp.pos.p = position_at(d, t, g);
  return street_motion(tmp, g);
}

std::optional<ContactInterval> raw_contact(const Device& a, const Device& b, StreetId street,
                                           const StreetGraph& g, double t_now, double range) {
  if (a.pos.street != street || b.pos.street != street) {
    throw std::logic_error("compute_contact_interval: devices are not on the given street");
  }
  return solve_contact(motion_at(a, t_now, g), motion_at(b, t_now, g), t_now, range);
}

std::optional<ContactInterval> clamp_from(std::optional<ContactInterval> c, double t_now) {
  if (!c) return std::nullopt;
  const double begin = std::max(c->begin, t_now);
  if (begin > c->end) return std::nullopt;
  return ContactInterval{begin, c->end};
}

}  // namespace

std::optional<ContactInterval> compute_contact_interval(const Device& a, const Device& b,
                                                        StreetId street, const StreetGraph& g,
                                                        double t_now, double range) {
  return clamp_from(raw_contact(a, b, street, g, t_now, range), t_now);
}

bool try_establish(ContactEdge& edge, double t, double rho) {
  if (!edge.connection && std::min(edge.c_time.end, t) - edge.c_time.begin > rho) {
    edge.connection = true;
  }
  return edge.connection;
}

// Simulation -----------------------------------------------------------------

Simulation::Simulation(const StreetGraph& g, std::vector<Device> devices, SimulationParams params)
    : graph_(&g), params_(params), devices_(std::move(devices)), occupancy_(g.street_count()) {
  if (!(params_.horizon >= 0.0) || !std::isfinite(params_.horizon)) {
    throw std::invalid_argument("horizon must be finite and non-negative");
  }
  if (!(params_.connection_time >= 0.0) || !(params_.range >= 0.0)) {
    throw std::invalid_argument("connection time and range must be non-negative");
  }
  for (std::size_t i = 0; i < devices_.size(); ++i) {
    if (devices_[i].id != i) throw std::invalid_argument("device ids must be 0..n-1 in order");
  }
  init_queue();
}

void Simulation::init_queue() {
  queue_.clear();
  contacts_.clear();
  connections_.clear();
  history_.clear();
  for (auto& list : occupancy_) list.clear();
  now_ = 0.0;
  finishing_ = finished_ = false;
  processed_ = 0;

  for (Device& d : devices_) {
    d.time_of_pos = 0.0;
    occupancy_.at(d.pos.street).push_back(d.id);
  }
  const double range = params_.range;
  for (StreetId s = 0; s < occupancy_.size(); ++s) {
    const auto& list = occupancy_[s];
    for (std::size_t i = 0; i < list.size(); ++i) {
      for (std::size_t j = i + 1; j < list.size(); ++j) {
        const Device& a = devices_[list[i]];
        const Device& b = devices_[list[j]];
        if (auto c = compute_contact_interval(a, b, s, *graph_, 0.0, range)) {
          DevicePair key(a.id, b.id);
          contacts_[key] = ContactEdge{key, *c, false};
        }
      }
    }
  }
  for (const Device& d : devices_) schedule_next(d, 0.0);
  queue_.push(Event{params_.horizon, EventKind::Finish, std::nullopt});
}

void Simulation::schedule_next(const Device& d, double t) {
  if (d.stationary()) return;
  const double len = graph_->street(d.pos.street).length;
  const bool last = d.leg + 1 == d.path.legs.size();
  const double remaining = last ? d.path.end_p - d.pos.p : 1.0 - d.pos.p;
  const double when = t + std::max(remaining, 0.0) * len / d.velocity;
  if (when > params_.horizon) return;
  queue_.push(Event{when, last ? EventKind::ReachDestination : EventKind::ReachCrossing, d.id});
}

void Simulation::update_position(Device& d, double t) {
  d.pos.p = position_at(d, t, *graph_);
  d.time_of_pos = t;
}

void Simulation::close_contact(std::map<DevicePair, ContactEdge>::iterator it, double t) {
  ContactEdge& e = it->second;
  const double w = std::min(e.c_time.end, t);
  if (try_establish(e, t, params_.connection_time)) connections_.insert(e.pair);
  if (params_.record_history && w > e.c_time.begin) {
    history_.push_back(ContactRecord{e.pair, e.c_time.begin, w});
  }
  contacts_.erase(it);
}

void Simulation::leave_street(Device& d) {
  auto& list = occupancy_.at(d.pos.street);
  for (DeviceId other : list) {
    if (other == d.id) continue;
    auto it = contacts_.find(DevicePair(d.id, other));
    if (it != contacts_.end()) close_contact(it, now_);
  }
  list.erase(std::find(list.begin(), list.end(), d.id));
}

void Simulation::enter_street(Device& d, double t) {
  auto& list = occupancy_.at(d.pos.street);
  for (DeviceId other : list) {
    Device& o = devices_[other];
    update_position(o, t);
    if (auto c = compute_contact_interval(d, o, d.pos.street, *graph_, t, params_.range)) {
      DevicePair key(d.id, other);
      contacts_[key] = ContactEdge{key, *c, false};
    }
  }
  list.push_back(d.id);
}

bool Simulation::step() {
  if (queue_.empty()) return false;
  const Event ev = queue_.pop();
  if (ev.time < now_ - 1e-9) {
    throw InvariantBreach("event time regression: " + std::to_string(ev.time) + " < " +
                          std::to_string(now_));
  }
  now_ = std::max(now_, ev.time);
  dispatch(ev);
  ++processed_;
  return true;
}

ConnectionGraph Simulation::run() {
  while (step()) {
  }
  return connection_graph();
}

void Simulation::dispatch(const Event& ev) {
  switch (ev.kind) {
    case EventKind::ReachCrossing: handle_reach_crossing(ev); break;
    case EventKind::ReachDestination: handle_reach_destination(ev); break;
    case EventKind::GlobalUpdate: handle_global_update(ev); break;
    case EventKind::Finish: handle_finish(ev); break;
    case EventKind::Infected:
    case EventKind::Cured: handle_state_change(ev); break;
  }
  emit(ev);
}

void Simulation::handle_reach_crossing(const Event& ev) {
  Device& d = devices_.at(ev.device.value());
  if (d.stationary() || d.leg + 1 >= d.path.legs.size()) {
    throw std::logic_error("reach_crossing: device has no further street on its path");
  }
  const double t = ev.time;
  update_position(d, t);
  leave_street(d);
  ++d.leg;
  const DirectedStreet& next = d.path.legs[d.leg];
  d.pos = StreetPosition{next.street, next.from, next.to, 0.0};
  d.time_of_pos = t;
  enter_street(d, t);
  schedule_next(d, t);
}

void Simulation::handle_reach_destination(const Event& ev) {
  Device& d = devices_.at(ev.device.value());
  if (d.stationary()) throw std::logic_error("reach_destination: stationary device");
  const double t = ev.time;
  update_position(d, t);
  d.path = reverse_path(d.path);
  d.leg = 0;
  d.pos = d.path.start();
  d.time_of_pos = t;

  const StreetId street = d.pos.street;
  for (DeviceId other : occupancy_.at(street)) {
    if (other == d.id) continue;
    Device& o = devices_[other];
    update_position(o, t);
    const DevicePair key(d.id, other);
    const auto fresh = raw_contact(d, o, street, *graph_, t, params_.range);
    auto it = contacts_.find(key);
    if (it != contacts_.end()) {
      ContactEdge& e = it->second;
      if (try_establish(e, t, params_.connection_time)) connections_.insert(key);
      const bool ongoing = e.c_time.begin <= t && t <= e.c_time.end;
      if (ongoing && fresh && fresh->begin <= t && t <= fresh->end) {
        e.c_time.end = fresh->end;
        continue;
      }
      const bool was_connected = e.connection;
      close_contact(it, t);
      if (auto c = clamp_from(fresh, t)) {
        contacts_[key] = ContactEdge{key, *c, was_connected};
      }
    } else if (auto c = clamp_from(fresh, t)) {
      contacts_[key] = ContactEdge{key, *c, connections_.contains(key)};
    }
  }
  schedule_next(d, t);
}

void Simulation::handle_global_update(const Event& ev) {
  const double t = ev.time;
  for (Device& d : devices_) update_position(d, t);
  for (auto& [key, e] : contacts_) {
    if (try_establish(e, t, params_.connection_time)) connections_.insert(key);
  }
  if (finishing_) finalize(t);
}

void Simulation::handle_finish(const Event& ev) {
  queue_.clear();
  finishing_ = true;
  queue_.push(Event{ev.time, EventKind::GlobalUpdate, std::nullopt});
}

void Simulation::handle_state_change(const Event& ev) {
  if (!state_hook_ || !ev.device) return;
  state_hook_(devices_.at(*ev.device), ev.kind, ev.time);
}

void Simulation::finalize(double t) {
  while (!contacts_.empty()) close_contact(contacts_.begin(), t);
  finished_ = true;
}

void Simulation::emit(const Event& ev) {
  if (!trace_) return;
  std::optional<StreetId> street;
  if (ev.device && *ev.device < devices_.size()) street = devices_[*ev.device].pos.street;
  trace_(ev, street);
}

bool Simulation::connected(DeviceId a, DeviceId b) const {
  const DevicePair key(a, b);
  if (connections_.contains(key)) return true;
  auto it = contacts_.find(key);
  return it != contacts_.end() && it->second.connection;
}

ConnectionGraph Simulation::connection_graph() const {
  std::set<DevicePair> edges = connections_;
  for (const auto& [key, e] : contacts_) {
    if (e.connection) edges.insert(key);
  }
  return ConnectionGraph{devices_.size(), {edges.begin(), edges.end()}};
}

ConnectionGraph derive_connection_graph(std::span<const ContactRecord> history,
                                        std::size_t vertex_count, double horizon, double rho) {
  std::set<DevicePair> edges;
  for (const ContactRecord& rec : history) {
    if (std::min(rec.end, horizon) - rec.begin > rho) edges.insert(rec.pair);
  }
  return ConnectionGraph{vertex_count, {edges.begin(), edges.end()}};
}

}  // namespace d2d
