#pragma once

// Ground-truth receiver motion on the receiver plane and the cell-gain metric.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "vlcsim/random.hpp"
#include "vlcsim/scenario.hpp"

namespace vlcsim {

enum class MobilityModel { FixedWaypoints, ConstantVelocityLine, RandomWaypoint };

/// Piecewise-linear walk at constant speed through `waypoints`, stopping at
/// the last one. A RandomWaypoint trajectory gets its waypoints drawn by
/// `materialize` (an optional first waypoint fixes the start).
struct Trajectory {
  MobilityModel model = MobilityModel::FixedWaypoints;
  double speed_mps = 1.0;
  std::vector<Vec2> waypoints;

  static Trajectory line(Vec2 from, Vec2 to, double speed_mps) {
    return {MobilityModel::ConstantVelocityLine, speed_mps, {from, to}};
  }
  static Trajectory stationary(Vec2 at) { return {MobilityModel::FixedWaypoints, 0.0, {at}}; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

inline void validate(const Trajectory& t, const Room& room) {
  if (!(t.speed_mps >= 0)) throw ConfigError("speed must be non-negative");
  if (t.model != MobilityModel::RandomWaypoint && t.waypoints.empty())
    throw ConfigError("trajectory needs at least one waypoint");
  if (t.model == MobilityModel::ConstantVelocityLine && t.waypoints.size() != 2)
    throw ConfigError("line trajectory needs exactly two waypoints");
  for (Vec2 w : t.waypoints)
    if (!room.contains(w)) throw ConfigError("waypoint outside room");
}

/// Draws random waypoints (uniform over the footprint, zero pause) until the
/// path is long enough to last `duration_s`. Other models are returned as is.
inline Trajectory materialize(Trajectory t, const Room& room, double duration_s, Rng& rng) {
  if (t.model != MobilityModel::RandomWaypoint) return t;
  auto draw = [&] {
    const double x = rng.uniform(-room.half_width(), room.half_width());
    const double y = rng.uniform(-room.half_depth(), room.half_depth());
    return Vec2{x, y};
  };
  if (t.waypoints.empty()) t.waypoints.push_back(draw());
  t.waypoints.resize(1);
  const double needed = t.speed_mps * duration_s;
  double length = 0.0;
  while (length <= needed && t.speed_mps > 0) {
    const Vec2 next = draw();
    length += distance(t.waypoints.back(), next);
    t.waypoints.push_back(next);
  }
  return t;
}

namespace detail {

/// Calls f(i, start_time, end_time) for every moving leg, end_time of the
/// last leg being when the device stops.
template <typename F>
void for_each_leg(const Trajectory& t, F&& f) {
  if (t.speed_mps <= 0) return;
  double time = 0.0;
  for (std::size_t i = 0; i + 1 < t.waypoints.size(); ++i) {
    const double len = distance(t.waypoints[i], t.waypoints[i + 1]);
    const double end = time + len / t.speed_mps;
    if (len > 0 && !f(i, time, end)) return;
    time = end;
  }
}

inline double arrival_time(const Trajectory& t) {
  double end = 0.0;
  for_each_leg(t, [&](std::size_t, double, double e) {
    end = e;
    return true;
  });
  return end;
}

}  // namespace detail

inline Vec2 position_at(const Trajectory& t, double time_s) {
  if (t.waypoints.empty()) throw Error("trajectory has no waypoints (not materialized?)");
  Vec2 pos = t.waypoints.back();
  detail::for_each_leg(t, [&](std::size_t i, double start, double end) {
    if (time_s >= end) return true;
    const Vec2 a = t.waypoints[i];
    const Vec2 b = t.waypoints[i + 1];
    const double frac = time_s <= start ? 0.0 : (time_s - start) / (end - start);
    pos = {a.x + frac * (b.x - a.x), a.y + frac * (b.y - a.y)};
    return false;
  });
  if (t.speed_mps <= 0 || t.waypoints.size() == 1) return t.waypoints.front();
  return pos;
}

/// Measure of {t in [t0, t1] : |position_at(t) - centre| <= radius}.
inline double time_inside_disc(const Trajectory& t, Vec2 centre, double radius, double t0, double t1) {
  if (t1 <= t0 || t.waypoints.empty()) return 0.0;
  double inside = 0.0;
  const double r2 = radius * radius;

  detail::for_each_leg(t, [&](std::size_t i, double start, double end) {
    const double s = std::max(start, t0);
    const double e = std::min(end, t1);
    if (e > s) {
      const Vec2 a = t.waypoints[i];
      const Vec2 b = t.waypoints[i + 1];
      const double len = distance(a, b);
      const Vec2 u = (1.0 / len) * (b - a);
      const Vec2 w = a - centre;
      const double v = t.speed_mps;
      // |w + v tau u|^2 <= r^2  for tau measured from `start`
      const double qa = v * v;
      const double qb = 2.0 * v * (w.x * u.x + w.y * u.y);
      const double qc = w.x * w.x + w.y * w.y - r2;
      const double disc = qb * qb - 4.0 * qa * qc;
      if (disc > 0) {
        const double root = std::sqrt(disc);
        const double lo = start + (-qb - root) / (2.0 * qa);
        const double hi = start + (-qb + root) / (2.0 * qa);
        inside += std::max(0.0, std::min(hi, e) - std::max(lo, s));
      }
    }
    return end < t1;
  });

  const double stop = detail::arrival_time(t);
  const double s = std::max(stop, t0);
  if (t1 > s) {
    const Vec2 rest = t.speed_mps > 0 ? t.waypoints.back() : t.waypoints.front();
    if (distance(rest, centre) <= radius) inside += t1 - s;
  }
  return inside;
}

enum class LinkStatus { Connected, Disruption, Disconnected };

/// Contiguous piece of a device's connectivity history, integer nanoseconds.
struct LinkSegment {
  std::int64_t start_ns = 0;
  std::int64_t end_ns = 0;
  LinkStatus status = LinkStatus::Disconnected;
  ApId ap = -1;
};

using ConnectivityLog = std::vector<LinkSegment>;

inline constexpr double kNsPerSecond = 1e9;

inline double to_seconds(std::int64_t ns) { return static_cast<double>(ns) / kNsPerSecond; }
inline std::int64_t to_ns(double s) { return std::llround(s * kNsPerSecond); }

/// Bits delivered by `ap`: its data rate times the time the device was
/// connected to it while inside its coverage radius. Disruption segments are
/// not connected time.
inline double cell_gain(const Trajectory& t, const AccessPoint& ap, std::span<const LinkSegment> log) {
  double seconds = 0.0;
  for (const auto& seg : log) {
    if (seg.status != LinkStatus::Connected || seg.ap != ap.id) continue;
    seconds += time_inside_disc(t, ap.pos, ap.coverage_radius_m, to_seconds(seg.start_ns), to_seconds(seg.end_ns));
  }
  return ap.data_rate_bps * seconds;
}

}  // namespace vlcsim
