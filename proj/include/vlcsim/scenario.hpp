#pragma once

// Static indoor world: room, ceiling LED access points, receiver plane and
// optical channel constants.
//
// Coordinate frame: origin at the room centre on the receiver plane. The
// receiver plane is z = 0 and the LED plane is z = receiver_plane_separation_m.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace vlcsim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A scenario or configuration violates one of its invariants.
class ConfigError : public Error {
public:
  using Error::Error;
};

using ApId = int;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }

struct Room {
  double width_m = 12.0;  // extent along x
  double depth_m = 12.0;  // extent along y
  double height_m = 3.0;
  double receiver_plane_separation_m = 1.8;

  double half_width() const { return 0.5 * width_m; }
  double half_depth() const { return 0.5 * depth_m; }

  bool contains(Vec2 p) const {
    return std::abs(p.x) <= half_width() && std::abs(p.y) <= half_depth();
  }

  Vec2 clamp(Vec2 p) const {
    return {std::clamp(p.x, -half_width(), half_width()),
            std::clamp(p.y, -half_depth(), half_depth())};
  }

  friend bool operator==(const Room&, const Room&) = default;
};

struct AccessPoint {
  ApId id = 0;
  Vec2 pos;
  double tx_power_w = 1.0;
  double luminous_intensity_cd = 0.0;  // I(0), straight below the LED
  double data_rate_bps = 10e6;
  double coverage_radius_m = 4.0;

  friend bool operator==(const AccessPoint&, const AccessPoint&) = default;
};

struct ChannelParams {
  double lambertian_order = 1.0;
  double filter_gain = 1.0;
  double concentrator_gain = 1.0;
  double fov_semi_angle_rad = std::numbers::pi / 2.0;
  double responsivity_a_per_w = 0.54;
  double noise_sigma_a = 0.0;
  double reflectance = 0.8;
  double wall_patch_area_m2 = 0.01;
  bool reflections_enabled = false;

  friend bool operator==(const ChannelParams&, const ChannelParams&) = default;
};

struct Scenario {
  Room room;
  std::vector<AccessPoint> aps;
  ChannelParams channel;

  const AccessPoint& ap(ApId id) const {
    for (const auto& a : aps) {
      if (a.id == id) return a;
    }
    throw Error("unknown access point id " + std::to_string(id));
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Lambertian order for an LED with the given half-power semi-angle.
inline double lambertian_order_from_semi_angle(double semi_angle_rad) {
  return -std::log(2.0) / std::log(std::cos(semi_angle_rad));
}

namespace defaults {
inline constexpr double kLedSemiAngleDeg = 70.0;
inline constexpr double kFovSemiAngleDeg = 80.0;
/// Centre luminous intensity that keeps every 0.25 m grid point of the
/// default room inside [300, 1500] lx. Feasible band is ~[4037.5, 4412.0] cd.
inline constexpr double kLuminousIntensityCd = 4220.0;
inline constexpr double kTxPowerW = 1.0;
inline constexpr double kDataRateBps = 10e6;
inline constexpr double kCoverageRadiusM = 4.0;
inline constexpr double kNoiseSigmaA = 1e-5;
}  // namespace defaults

inline ChannelParams default_channel() {
  ChannelParams c;
  c.lambertian_order = lambertian_order_from_semi_angle(deg_to_rad(defaults::kLedSemiAngleDeg));
  c.filter_gain = 1.0;
  c.concentrator_gain = 1.0;
  c.fov_semi_angle_rad = deg_to_rad(defaults::kFovSemiAngleDeg);
  c.responsivity_a_per_w = 0.54;
  c.noise_sigma_a = defaults::kNoiseSigmaA;
  c.reflectance = 0.8;
  c.wall_patch_area_m2 = 0.01;
  c.reflections_enabled = false;
  return c;
}

/// 12 x 12 x 3 m conference room with a 3x3 LED grid at 5 m pitch, receiver
/// plane 1.8 m below the LEDs. Ids follow the listing order
/// (-5,-5), (-5,5), (5,-5), (5,5), (-5,0), (5,0), (0,-5), (0,5), (0,0).
inline Scenario default_scenario() {
  Scenario s;
  s.room = Room{12.0, 12.0, 3.0, 1.8};
  const Vec2 positions[] = {{-5, -5}, {-5, 5}, {5, -5}, {5, 5}, {-5, 0},
                            {5, 0},   {0, -5}, {0, 5},  {0, 0}};
  ApId id = 1;
  for (Vec2 p : positions) {
    s.aps.push_back(AccessPoint{id++, p, defaults::kTxPowerW, defaults::kLuminousIntensityCd,
                                defaults::kDataRateBps, defaults::kCoverageRadiusM});
  }
  s.channel = default_channel();
  return s;
}

/// True when a, b, c lie on one line (relative tolerance on the cross product).
inline bool collinear(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 u = b - a;
  const Vec2 v = c - a;
  const double cross = u.x * v.y - u.y * v.x;
  return std::abs(cross) <= 1e-9 * std::max(1.0, norm(u) * norm(v));
}

/// Returns the scenario unchanged, or throws ConfigError naming the first
/// violated invariant.
inline const Scenario& validate(const Scenario& s) {
  const Room& r = s.room;
  if (!(r.width_m > 0 && r.depth_m > 0 && r.height_m > 0 && r.receiver_plane_separation_m > 0))
    throw ConfigError("room dimensions must be positive");
  if (!(r.receiver_plane_separation_m < r.height_m))
    throw ConfigError("receiver plane separation must be below room height");

  const ChannelParams& c = s.channel;
  if (!(c.lambertian_order > 0)) throw ConfigError("lambertian order must be positive");
  if (!(c.reflectance >= 0 && c.reflectance <= 1)) throw ConfigError("reflectance outside [0, 1]");
  if (!(c.filter_gain > 0 && c.concentrator_gain > 0))
    throw ConfigError("filter and concentrator gains must be positive");
  if (!(c.fov_semi_angle_rad > 0 && c.fov_semi_angle_rad <= std::numbers::pi / 2))
    throw ConfigError("field of view semi-angle outside (0, pi/2]");
  if (!(c.responsivity_a_per_w > 0)) throw ConfigError("responsivity must be positive");
  if (!(c.noise_sigma_a >= 0)) throw ConfigError("noise sigma must be non-negative");
  if (!(c.wall_patch_area_m2 > 0)) throw ConfigError("wall patch area must be positive");

  if (s.aps.size() < 3) throw ConfigError("fewer than 3 access points");
  std::set<ApId> ids;
  for (const auto& ap : s.aps) {
    if (!ids.insert(ap.id).second)
      throw ConfigError("duplicate access point id " + std::to_string(ap.id));
    if (!r.contains(ap.pos)) throw ConfigError("AP outside room (id " + std::to_string(ap.id) + ")");
    if (!(ap.tx_power_w > 0)) throw ConfigError("AP transmit power must be positive");
    if (!(ap.coverage_radius_m > 0)) throw ConfigError("AP coverage radius must be positive");
    if (!(ap.luminous_intensity_cd >= 0)) throw ConfigError("AP luminous intensity must be non-negative");
    if (!(ap.data_rate_bps >= 0)) throw ConfigError("AP data rate must be non-negative");
  }

  bool has_triangle = false;
  const auto n = s.aps.size();
  for (std::size_t i = 0; i < n && !has_triangle; ++i)
    for (std::size_t j = i + 1; j < n && !has_triangle; ++j)
      for (std::size_t k = j + 1; k < n && !has_triangle; ++k)
        has_triangle = !collinear(s.aps[i].pos, s.aps[j].pos, s.aps[k].pos);
  if (!has_triangle) throw ConfigError("all access points collinear");
  return s;
}

}  // namespace vlcsim
