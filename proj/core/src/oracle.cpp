#include "d2dsim/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace d2d {

void validate(const OracleConfig& cfg) {
  if (!std::isfinite(cfg.horizon) || cfg.horizon < 0.0) throw std::invalid_argument("oracle: bad horizon");
  if (!std::isfinite(cfg.epsilon) || !(cfg.epsilon > 0.0)) throw std::invalid_argument("oracle: epsilon must be positive");
  if (cfg.horizon > 0.0 && cfg.epsilon > cfg.horizon) throw std::invalid_argument("oracle: epsilon exceeds horizon");
  if (!std::isfinite(cfg.range) || cfg.range < 0.0) throw std::invalid_argument("oracle: bad range");
  if (!std::isfinite(cfg.rho) || cfg.rho < 0.0) throw std::invalid_argument("oracle: bad rho");
}

OracleTrack::OracleTrack(const Device& d, const StreetGraph& g)
    : g_(&g), path_(d.path), velocity_(d.velocity), stationary_(d.path.empty()) {
  if (stationary_) {
    pos_ = d.home;
  } else {
    pos_ = path_.start();
  }
  p0_ = pos_.p;
}

double OracleTrack::transition_time() const {
  if (stationary_) return kForever;
  const bool last = leg_ + 1 == path_.legs.size();
  const double limit = last ? path_.end_p : 1.0;
  return t0_ + (limit - p0_) * g_->street(pos_.street).length / velocity_;
}

void OracleTrack::transition() {
  if (leg_ + 1 == path_.legs.size()) {
    path_ = reverse_path(path_);
    leg_ = 0;
    pos_ = path_.start();
  } else {
    ++leg_;
    const DirectedStreet& s = path_.legs[leg_];
    pos_ = StreetPosition{s.street, s.from, s.to, 0.0};
    ++visit_;
  }
  p0_ = pos_.p;
}

void OracleTrack::advance_to(double t) {
  if (t < t_) throw std::logic_error("oracle: time runs backwards");
  for (double tt = transition_time(); tt <= t; tt = transition_time()) {
    t0_ = tt;
    transition();
  }
  t_ = t;
  if (!stationary_) {
    pos_.p = std::clamp(p0_ + (t - t0_) * velocity_ / g_->street(pos_.street).length, 0.0, 1.0);
  }
}

double OracleTrack::street_coordinate() const {
  return fraction_from_u(*g_, pos_) * g_->street(pos_.street).length;
}

namespace {

struct Sample {
  StreetId street;
  std::size_t visit;
  double x;
};

struct Run {
  double begin = 0.0;
  double length = 0.0;
  std::size_t visit_a = 0, visit_b = 0;
};

}  // namespace

OracleResult simulate_discrete(const StreetGraph& g, std::span<const Device> devices,
                               const OracleConfig& cfg) {
  validate(cfg);
  OracleResult out;
  out.graph.vertex_count = devices.size();
  std::vector<OracleTrack> tracks;
  tracks.reserve(devices.size());
  for (const Device& d : devices) tracks.emplace_back(d, g);

  auto sample = [&]() {
    std::vector<Sample> s(tracks.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
      s[i] = {tracks[i].position().street, tracks[i].visit(), tracks[i].street_coordinate()};
    }
    return s;
  };
  // pairs in range, keyed with visits so that a new visit starts a new run
  auto in_range = [&](const std::vector<Sample>& s) {
    std::map<DevicePair, std::pair<std::size_t, std::size_t>> hits;
    std::map<StreetId, std::vector<std::size_t>> by_street;
    for (std::size_t i = 0; i < s.size(); ++i) by_street[s[i].street].push_back(i);
    for (const auto& [street, ids] : by_street) {
      for (std::size_t a = 0; a < ids.size(); ++a) {
        for (std::size_t b = a + 1; b < ids.size(); ++b) {
          const std::size_t i = ids[a], j = ids[b];
          if (std::abs(s[i].x - s[j].x) <= cfg.range) {
            hits[DevicePair(DeviceId(i), DeviceId(j))] = {s[i].visit, s[j].visit};
          }
        }
      }
    }
    return hits;
  };

  std::set<DevicePair> edges;
  std::map<DevicePair, Run> runs;
  auto close_run = [&](const DevicePair& key, const Run& run) {
    if (run.length > 0.0) out.contacts.push_back({key, run.begin, run.begin + run.length});
  };

  auto prev = in_range(sample());
  const std::size_t n_steps =
      cfg.horizon > 0.0 ? static_cast<std::size_t>(std::ceil(cfg.horizon / cfg.epsilon)) : 0;
  double t_prev = 0.0;
  for (std::size_t k = 1; k <= n_steps; ++k) {
    const double t = std::min(static_cast<double>(k) * cfg.epsilon, cfg.horizon);
    for (auto& tr : tracks) tr.advance_to(t);
    auto cur = in_range(sample());
    const double h = t - t_prev;
    std::map<DevicePair, Run> next;
    for (const auto& [key, visits] : cur) {
      auto p = prev.find(key);
      if (p == prev.end() || p->second != visits) continue;
      Run run{t_prev, 0.0, visits.first, visits.second};
      if (auto r = runs.find(key);
          r != runs.end() && r->second.visit_a == visits.first && r->second.visit_b == visits.second) {
        run = r->second;
        runs.erase(r);
      }
      run.length += h;
      if (run.length > cfg.rho) edges.insert(key);
      next[key] = run;
    }
    // whatever was not extended has ended
    for (const auto& [key, run] : runs) close_run(key, run);
    runs = std::move(next);
    prev = std::move(cur);
    t_prev = t;
    ++out.steps;
  }
  for (const auto& [key, run] : runs) close_run(key, run);
  out.graph.edges.assign(edges.begin(), edges.end());
  return out;
}

std::vector<std::vector<StreetPosition>> oracle_positions(const StreetGraph& g,
                                                          std::span<const Device> devices,
                                                          std::span<const double> times) {
  std::vector<OracleTrack> tracks;
  tracks.reserve(devices.size());
  for (const Device& d : devices) tracks.emplace_back(d, g);
  std::vector<std::vector<StreetPosition>> out;
  out.reserve(times.size());
  for (double t : times) {
    std::vector<StreetPosition> row;
    row.reserve(tracks.size());
    for (auto& tr : tracks) {
      tr.advance_to(t);
      row.push_back(tr.position());
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace d2d
