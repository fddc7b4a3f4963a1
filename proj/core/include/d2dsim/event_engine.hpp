#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <stdexcept>
#include <span>
#include <vector>

#include "d2dsim/mobility.hpp"
#include "d2dsim/street_graph.hpp"

namespace d2d {

/// Internal consistency failure during a run (e.g. an event scheduled in the past).
class InvariantBreach : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EventKind : std::uint8_t {
  Infected = 1,
  Cured = 2,
  ReachCrossing = 3,
  ReachDestination = 4,
  GlobalUpdate = 5,
  Finish = 6,
};

/// Order among events sharing a time stamp: 3 < 4 < 5 < 1 < 2 < 6.
int kind_priority(EventKind kind);
const char* to_string(EventKind kind);

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::GlobalUpdate;
  std::optional<DeviceId> device;
};

/// Strict ordering by (time, kind priority, device id).
bool event_before(const Event& a, const Event& b);

class EventQueue {
 public:
  void push(Event e) { heap_.push(e); }
  const Event& top() const { return heap_.top(); }
  Event pop();
  bool empty() const { return heap_.empty(); }
  std::size_t size() const { return heap_.size(); }
  void clear() { heap_ = {}; }
  /// Copy of the contents in pop order.
  std::vector<Event> snapshot() const;

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const { return event_before(b, a); }
  };
  std::priority_queue<Event, std::vector<Event>, Later> heap_;
};

inline constexpr double kForever = std::numeric_limits<double>::infinity();

struct ContactInterval {
  double begin = 0.0;
  double end = 0.0;  ///< may be kForever
  friend bool operator==(const ContactInterval&, const ContactInterval&) = default;
};

/// Unordered device pair, stored with first < second.
struct DevicePair {
  DeviceId first = 0;
  DeviceId second = 0;
  DevicePair() = default;
  DevicePair(DeviceId a, DeviceId b) : first(a < b ? a : b), second(a < b ? b : a) {}
  friend auto operator<=>(const DevicePair&, const DevicePair&) = default;
};

/// Pending or ongoing contact of two devices on a shared street.
struct ContactEdge {
  DevicePair pair;
  ContactInterval c_time;
  bool connection = false;
};

/// Signed coordinate and velocity of a device along its street, measured from
/// the street's u end.
struct StreetMotion {
  double x = 0.0;
  double speed = 0.0;
};
StreetMotion street_motion(const Device& d, const StreetGraph& g);

/// Solution set of |x_i(t) - x_j(t)| <= r for t, without clamping to t_now.
/// Nothing if the devices never come within range.
std::optional<ContactInterval> solve_contact(const StreetMotion& a, const StreetMotion& b,
                                             double t_now, double range);

/// Contact interval from t_now on: [max(c_min, t_now), c_max], or nothing if
/// it is empty. Both devices must be on `street` with positions at t_now.
std::optional<ContactInterval> compute_contact_interval(const Device& a, const Device& b,
                                                        StreetId street, const StreetGraph& g,
                                                        double t_now, double range);

/// min(c_max, t) - c_min > rho; sets edge.connection when it holds. Returns
/// the (possibly earlier established) flag.
bool try_establish(ContactEdge& edge, double t, double rho);

/// One maximal same-street contact period of a device pair.
struct ContactRecord {
  DevicePair pair;
  double begin = 0.0;
  double end = 0.0;
};

struct SimulationParams {
  double horizon = 0.0;          ///< T, seconds
  double connection_time = 0.0;  ///< rho, seconds
  double range = 0.0;            ///< r, meters
  bool record_history = false;
};

/// Device graph: vertices 0 .. vertex_count-1, sorted unique edges.
struct ConnectionGraph {
  std::size_t vertex_count = 0;
  std::vector<DevicePair> edges;
  friend bool operator==(const ConnectionGraph&, const ConnectionGraph&) = default;
};

/// Continuous-time simulation of one run. Only the device that causes an
/// event is touched by it; others are advanced lazily when a contact
/// computation needs their current position.
class Simulation {
 public:
  using TraceSink = std::function<void(const Event&, std::optional<StreetId>)>;
  using StateHook = std::function<void(Device&, EventKind, double)>;

  Simulation(const StreetGraph& g, std::vector<Device> devices, SimulationParams params);

  /// Schedules one movement event per moving device plus Finish at T, and
  /// computes the initial contact intervals. Called by the constructor.
  void init_queue();

  /// Processes every event; returns the established connections.
  ConnectionGraph run();
  /// Pops and dispatches one event; false when the queue is empty.
  bool step();
  void dispatch(const Event& ev);

  void handle_reach_crossing(const Event& ev);
  void handle_reach_destination(const Event& ev);
  void handle_global_update(const Event& ev);
  void handle_finish(const Event& ev);
  void handle_state_change(const Event& ev);

  /// Adds an arbitrary event, e.g. a GlobalUpdate to inspect the state.
  void schedule(const Event& ev) { queue_.push(ev); }

  void set_trace(TraceSink sink) { trace_ = std::move(sink); }
  /// Callback for Infected/Cured events; they are no-ops without it.
  void set_state_hook(StateHook hook) { state_hook_ = std::move(hook); }

  double now() const { return now_; }
  bool finished() const { return finished_; }
  const StreetGraph& graph() const { return *graph_; }
  const SimulationParams& params() const { return params_; }
  const std::vector<Device>& devices() const { return devices_; }
  std::span<const DeviceId> devices_on(StreetId street) const { return occupancy_.at(street); }
  const EventQueue& queue() const { return queue_; }
  const std::map<DevicePair, ContactEdge>& contacts() const { return contacts_; }
  const std::vector<ContactRecord>& history() const { return history_; }
  bool connected(DeviceId a, DeviceId b) const;
  ConnectionGraph connection_graph() const;
  std::size_t events_processed() const { return processed_; }

 private:
  void enter_street(Device& d, double t);
  void leave_street(Device& d);
  void schedule_next(const Device& d, double t);
  void update_position(Device& d, double t);
  void close_contact(std::map<DevicePair, ContactEdge>::iterator it, double t);
  void finalize(double t);
  void emit(const Event& ev);

  const StreetGraph* graph_;
  SimulationParams params_;
  std::vector<Device> devices_;
  std::vector<std::vector<DeviceId>> occupancy_;
  std::map<DevicePair, ContactEdge> contacts_;
  std::set<DevicePair> connections_;
  std::vector<ContactRecord> history_;
  EventQueue queue_;
  double now_ = 0.0;
  bool finishing_ = false;
  bool finished_ = false;
  std::size_t processed_ = 0;
  TraceSink trace_;
  StateHook state_hook_;
};

/// Graph of pairs with some logged interval satisfying
/// min(end, horizon) - begin > rho.
ConnectionGraph derive_connection_graph(std::span<const ContactRecord> history,
                                        std::size_t vertex_count, double horizon, double rho);

}  // namespace d2d
