#pragma once

#include <span>
#include <vector>

#include "d2dsim/event_engine.hpp"
#include "d2dsim/mobility.hpp"
#include "d2dsim/street_graph.hpp"

namespace d2d {

struct OracleConfig {
  double epsilon = 0.01;  ///< step, seconds
  double horizon = 0.0;   ///< T, seconds
  double range = 0.0;     ///< r, meters
  double rho = 0.0;       ///< connection time, seconds
};

/// Throws std::invalid_argument unless 0 < epsilon <= horizon (or horizon = 0)
/// and the other fields are finite and non-negative.
void validate(const OracleConfig& cfg);

/// Eager mover: follows one device along its (ping-pong) route. Transitions
/// falling inside a step are resolved exactly.
class OracleTrack {
 public:
  OracleTrack(const Device& d, const StreetGraph& g);

  /// Moves forward to time t (t must not decrease).
  void advance_to(double t);
  const StreetPosition& position() const { return pos_; }
  /// Incremented each time the device enters another street.
  std::size_t visit() const { return visit_; }
  /// Distance from the street's u end.
  double street_coordinate() const;

 private:
  double transition_time() const;
  void transition();

  const StreetGraph* g_;
  Path path_;
  std::size_t leg_ = 0;
  double velocity_ = 0.0;
  bool stationary_ = false;
  StreetPosition pos_;
  double p0_ = 0.0;
  double t0_ = 0.0;
  double t_ = 0.0;
  std::size_t visit_ = 0;
};

/// Maximal run of step-sampled contact of one pair.
struct OracleContact {
  DevicePair pair;
  double begin = 0.0;
  double end = 0.0;
};

struct OracleResult {
  ConnectionGraph graph;
  std::vector<OracleContact> contacts;
  std::size_t steps = 0;
};

/// Fixed-step reference run from the devices' initial state. A step of
/// length h adds h to a pair's contiguous contact time iff both devices are
/// on the same street visit within range at both ends of the step.
OracleResult simulate_discrete(const StreetGraph& g, std::span<const Device> devices,
                               const OracleConfig& cfg);

/// Positions of all devices at the given non-decreasing times.
std::vector<std::vector<StreetPosition>> oracle_positions(const StreetGraph& g,
                                                          std::span<const Device> devices,
                                                          std::span<const double> times);

}  // namespace d2d
