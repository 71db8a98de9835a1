#pragma once

// Lambertian line-of-sight and first-reflection optical channel, illuminance,
// noisy photocurrent samples and grid maps.
//
// Receiver at q on the receiver plane, LED at p on the LED plane, vertical
// separation h: d = |p - q| in 3-D and, with the LED facing down and the
// photodiode facing up, cos(phi) = cos(psi) = h / d.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "vlcsim/random.hpp"
#include "vlcsim/scenario.hpp"

namespace vlcsim {

struct LosGeometry {
  double distance_m = 0.0;
  double cos_phi = 1.0;  // irradiance angle at the LED
  double cos_psi = 1.0;  // incidence angle at the photodiode
};

inline LosGeometry los_geometry(const AccessPoint& ap, Vec2 rx, const Room& room) {
  const double h = room.receiver_plane_separation_m;
  const double dx = ap.pos.x - rx.x;
  const double dy = ap.pos.y - rx.y;
  const double d = std::sqrt(dx * dx + dy * dy + h * h);
  return {d, h / d, h / d};
}

/// Incidence angle acceptance; psi <= psi_c.
inline bool within_fov(double cos_psi, const ChannelParams& params) {
  return cos_psi > 0.0 && std::acos(std::min(1.0, cos_psi)) <= params.fov_semi_angle_rad;
}

/// Horizontal illuminance [lx] from one LED: I(0) cos^m(phi) cos(psi) / d^2.
inline double horizontal_illuminance(const AccessPoint& ap, Vec2 rx, const ChannelParams& params,
                                     const Room& room) {
  const LosGeometry g = los_geometry(ap, rx, room);
  if (!within_fov(g.cos_psi, params)) return 0.0;
  return ap.luminous_intensity_cd * std::pow(g.cos_phi, params.lambertian_order) * g.cos_psi /
         (g.distance_m * g.distance_m);
}

/// Line-of-sight received optical power [W].
inline double los_power(const AccessPoint& ap, Vec2 rx, const ChannelParams& params, const Room& room) {
  const LosGeometry g = los_geometry(ap, rx, room);
  if (!within_fov(g.cos_psi, params)) return 0.0;
  const double m = params.lambertian_order;
  return ap.tx_power_w * (m + 1.0) / (2.0 * std::numbers::pi * g.distance_m * g.distance_m) *
         std::pow(g.cos_phi, m) * params.filter_gain * params.concentrator_gain * g.cos_psi;
}

/// Upper bound of los_power over all receiver positions (directly beneath).
inline double los_power_bound(const AccessPoint& ap, const ChannelParams& params, const Room& room) {
  const double h = room.receiver_plane_separation_m;
  return ap.tx_power_w * (params.lambertian_order + 1.0) / (2.0 * std::numbers::pi * h * h) *
         params.filter_gain * params.concentrator_gain;
}

/// One rectangular reflecting element on a wall.
struct WallPatch {
  double x, y, z;     // centre
  double nx, ny;      // inward unit normal (walls are vertical)
  double area_m2;
  double height_m;    // vertical extent
};

/// Discretizes the four walls into patches of roughly `patch_area_m2`. The
/// walls span from the floor (z = h - height) to the LED plane (z = h).
inline std::vector<WallPatch> wall_patches(const Room& room, double patch_area_m2) {
  const double side = std::sqrt(patch_area_m2);
  const double h = room.receiver_plane_separation_m;
  const double z_floor = h - room.height_m;
  const auto nz = static_cast<long>(std::llround(room.height_m / side));
  const auto nw = static_cast<long>(std::llround(room.width_m / side));
  const auto nd = static_cast<long>(std::llround(room.depth_m / side));
  if (!(side > 0) || nz < 1 || nw < 1 || nd < 1)
    throw Error("wall patch area yields fewer than one patch per wall");

  std::vector<WallPatch> out;
  out.reserve(static_cast<std::size_t>(2 * nz * (nw + nd)));
  const double dz = room.height_m / static_cast<double>(nz);
  const double hw = room.half_width();
  const double hd = room.half_depth();

  auto add_wall = [&](long n_along, double length, auto place) {
    const double du = length / static_cast<double>(n_along);
    for (long i = 0; i < n_along; ++i) {
      const double u = -0.5 * length + (static_cast<double>(i) + 0.5) * du;
      for (long k = 0; k < nz; ++k) {
        const double z = z_floor + (static_cast<double>(k) + 0.5) * dz;
        out.push_back(place(u, z, du, dz));
      }
    }
  };
  add_wall(nd, room.depth_m, [&](double u, double z, double w, double t) { return WallPatch{hw, u, z, -1, 0, w * t, t}; });
  add_wall(nd, room.depth_m, [&](double u, double z, double w, double t) { return WallPatch{-hw, u, z, 1, 0, w * t, t}; });
  add_wall(nw, room.width_m, [&](double u, double z, double w, double t) { return WallPatch{u, hd, z, 0, -1, w * t, t}; });
  add_wall(nw, room.width_m, [&](double u, double z, double w, double t) { return WallPatch{u, -hd, z, 0, 1, w * t, t}; });
  return out;
}

/// First-bounce contribution of one wall patch. The part of the patch
/// outside the receiver field of view is cut off (the visible band of a
/// vertical patch is z >= horizontal distance / tan(psi_c)) and the
/// remainder is evaluated at its own centre.
inline double patch_reflection_power(const AccessPoint& ap, Vec2 rx, const WallPatch& patch,
                                     const ChannelParams& params, const Room& room) {
  WallPatch w = patch;
  const double horiz = std::hypot(rx.x - w.x, rx.y - w.y);
  const double tan_c = std::tan(params.fov_semi_angle_rad);
  const double z_cut = params.fov_semi_angle_rad >= std::numbers::pi / 2 ? 0.0 : horiz / tan_c;
  const double top = w.z + 0.5 * w.height_m, bottom = w.z - 0.5 * w.height_m;
  if (z_cut >= top) return 0.0;
  if (z_cut > bottom) {
    w.area_m2 *= (top - z_cut) / w.height_m;
    w.z = 0.5 * (top + z_cut);
  }

  const double h = room.receiver_plane_separation_m;
  // LED -> patch
  const double ax = w.x - ap.pos.x, ay = w.y - ap.pos.y, az = w.z - h;
  const double d1 = std::sqrt(ax * ax + ay * ay + az * az);
  const double cos_phi = -az / d1;
  const double cos_alpha = -(ax * w.nx + ay * w.ny) / d1;
  // patch -> receiver
  const double bx = rx.x - w.x, by = rx.y - w.y, bz = -w.z;
  const double d2 = std::sqrt(bx * bx + by * by + bz * bz);
  const double cos_beta = (bx * w.nx + by * w.ny) / d2;
  const double cos_psi = -bz / d2;
  if (cos_phi <= 0 || cos_alpha <= 0 || cos_beta <= 0 || cos_psi <= 0) return 0.0;

  const double m = params.lambertian_order;
  return ap.tx_power_w * (m + 1.0) /
         (2.0 * std::numbers::pi * std::numbers::pi * d1 * d1 * d2 * d2) * params.reflectance *
         w.area_m2 * std::pow(cos_phi, m) * cos_alpha * cos_beta * params.filter_gain *
         params.concentrator_gain * cos_psi;
}

inline double reflection_power(const AccessPoint& ap, Vec2 rx, std::span<const WallPatch> patches,
                               const ChannelParams& params, const Room& room) {
  double sum = 0.0;
  for (const auto& w : patches) sum += patch_reflection_power(ap, rx, w, params, room);
  return sum;
}

/// First-order wall reflections from one LED, walls discretized with the
/// configured patch area.
inline double reflection_power(const AccessPoint& ap, Vec2 rx, const ChannelParams& params, const Room& room) {
  const auto patches = wall_patches(room, params.wall_patch_area_m2);
  return reflection_power(ap, rx, patches, params, room);
}

/// Per-AP channel evaluator. Caches the wall discretization so repeated
/// evaluations with reflections enabled stay cheap.
class Channel {
public:
  explicit Channel(const Scenario& scenario) : scenario_(&scenario) {
    if (scenario.channel.reflections_enabled)
      patches_ = wall_patches(scenario.room, scenario.channel.wall_patch_area_m2);
    order_.resize(scenario.aps.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::stable_sort(order_.begin(), order_.end(),
                     [&](std::size_t a, std::size_t b) { return scenario.aps[a].id < scenario.aps[b].id; });
  }

  const Scenario& scenario() const { return *scenario_; }

  /// Indices into scenario().aps in ascending id order.
  std::span<const std::size_t> id_order() const { return order_; }

  bool in_fov(const AccessPoint& ap, Vec2 rx) const {
    return within_fov(los_geometry(ap, rx, scenario_->room).cos_psi, scenario_->channel);
  }

  /// Noiseless power from one AP: LOS plus reflections when enabled; zero
  /// when the LOS path is outside the field of view.
  double ap_power(const AccessPoint& ap, Vec2 rx) const {
    const auto& s = *scenario_;
    if (!in_fov(ap, rx)) return 0.0;
    double p = los_power(ap, rx, s.channel, s.room);
    if (s.channel.reflections_enabled) p += reflection_power(ap, rx, patches_, s.channel, s.room);
    return p;
  }

  /// Sum over APs in ascending id order.
  double total_power(Vec2 rx) const {
    double sum = 0.0;
    for (std::size_t i : order_) sum += ap_power(scenario_->aps[i], rx);
    return sum;
  }

  double total_illuminance(Vec2 rx) const {
    double sum = 0.0;
    for (std::size_t i : order_)
      sum += horizontal_illuminance(scenario_->aps[i], rx, scenario_->channel, scenario_->room);
    return sum;
  }

  /// AP with the largest noiseless power at rx, ignoring `excluded`; ties
  /// go to the lowest id. Returns -1 when nothing is received.
  ApId best_ap(Vec2 rx, ApId excluded = -1) const {
    ApId best = -1;
    double best_p = 0.0;
    for (std::size_t i : order_) {
      const auto& ap = scenario_->aps[i];
      if (ap.id == excluded) continue;
      const double p = ap_power(ap, rx);
      if (p > best_p) {
        best_p = p;
        best = ap.id;
      }
    }
    return best;
  }

private:
  const Scenario* scenario_;
  std::vector<WallPatch> patches_;
  std::vector<std::size_t> order_;
};

/// Total received power at rx, summing left to right over the APs sorted by id.
inline double total_power(std::span<const AccessPoint> aps, Vec2 rx, const ChannelParams& params,
                          const Room& room) {
  std::vector<const AccessPoint*> sorted;
  sorted.reserve(aps.size());
  for (const auto& ap : aps) sorted.push_back(&ap);
  std::stable_sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

  std::vector<WallPatch> patches;
  if (params.reflections_enabled) patches = wall_patches(room, params.wall_patch_area_m2);
  double sum = 0.0;
  for (const auto* ap : sorted) {
    if (!within_fov(los_geometry(*ap, rx, room).cos_psi, params)) continue;
    sum += los_power(*ap, rx, params, room);
    if (params.reflections_enabled) sum += reflection_power(*ap, rx, patches, params, room);
  }
  return sum;
}

struct OpticalSample {
  double power_w = 0.0;
  double photocurrent_a = 0.0;
  bool in_fov = false;

  /// RSS as reported to the protocol: photocurrent clamped at zero.
  double rss_a() const { return std::max(0.0, photocurrent_a); }
};

/// Photocurrent sample R * P_r + n with n ~ N(0, sigma^2). Exactly one normal
/// variate is drawn per call so streams stay aligned whatever the geometry.
inline OpticalSample sample_rss(const AccessPoint& ap, Vec2 rx, const Channel& channel, Rng& rng) {
  const auto& params = channel.scenario().channel;
  OpticalSample s;
  s.in_fov = channel.in_fov(ap, rx);
  s.power_w = s.in_fov ? channel.ap_power(ap, rx) : 0.0;
  const double noise = rng.normal();
  s.photocurrent_a = params.responsivity_a_per_w * s.power_w;
  if (params.noise_sigma_a > 0.0) s.photocurrent_a += params.noise_sigma_a * noise;
  return s;
}

/// Regular grid of scalars over the room footprint. Nodes sit at
/// origin + i * step (inclusive of both walls when step divides the room);
/// values are stored row-major, rows along y.
struct GridMap {
  Vec2 origin;
  double step_m = 1.0;
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<double> values;

  double x(std::size_t i) const { return origin.x + static_cast<double>(i) * step_m; }
  double y(std::size_t j) const { return origin.y + static_cast<double>(j) * step_m; }
  double& at(std::size_t i, std::size_t j) { return values[j * nx + i]; }
  double at(std::size_t i, std::size_t j) const { return values[j * nx + i]; }

  /// Index of the nearest node along each axis, clamped to the grid.
  std::pair<std::size_t, std::size_t> nearest(Vec2 p) const {
    auto idx = [&](double v, double o, std::size_t n) {
      const double f = std::floor((v - o) / step_m + 0.5);
      if (f <= 0) return std::size_t{0};
      return std::min(static_cast<std::size_t>(f), n - 1);
    };
    return {idx(p.x, origin.x, nx), idx(p.y, origin.y, ny)};
  }
};

inline std::size_t grid_count(double length, double step) {
  return static_cast<std::size_t>(std::ceil(length / step - 1e-9)) + 1;
}

/// Empty grid covering the room footprint at the given step.
inline GridMap make_room_grid(const Room& room, double step_m) {
  if (!(step_m > 0)) throw ConfigError("grid step must be positive");
  GridMap g;
  g.origin = {-room.half_width(), -room.half_depth()};
  g.step_m = step_m;
  g.nx = grid_count(room.width_m, step_m);
  g.ny = grid_count(room.depth_m, step_m);
  g.values.assign(g.nx * g.ny, 0.0);
  return g;
}

/// Evaluates f at every node (node coordinates clamped to the room).
template <typename F>
GridMap sample_grid(const Room& room, double step_m, F&& f) {
  GridMap g = make_room_grid(room, step_m);
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) g.at(i, j) = f(room.clamp({g.x(i), g.y(j)}));
  return g;
}

inline GridMap power_map(const Scenario& scenario, double step_m) {
  const Channel channel(scenario);
  return sample_grid(scenario.room, step_m, [&](Vec2 p) { return channel.total_power(p); });
}

inline GridMap illuminance_map(const Scenario& scenario, double step_m) {
  const Channel channel(scenario);
  return sample_grid(scenario.room, step_m, [&](Vec2 p) { return channel.total_illuminance(p); });
}

inline std::string format_g9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

/// "x,y,value" rows, 9 significant digits, row-major.
inline void write_grid_csv(std::ostream& os, const GridMap& g, const Room& room) {
  os << "x,y,value\n";
  for (std::size_t j = 0; j < g.ny; ++j)
    for (std::size_t i = 0; i < g.nx; ++i) {
      const Vec2 p = room.clamp({g.x(i), g.y(j)});
      os << format_g9(p.x) << ',' << format_g9(p.y) << ',' << format_g9(g.at(i, j)) << '\n';
    }
}

/// Parses the "x,y,value" format back into a grid. Lines starting with '#'
/// are skipped. Rows must be row-major on a regular grid.
inline GridMap read_grid_csv(std::istream& is) {
  std::vector<double> xs, ys, vs;
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("x,y,value", 0) != 0) throw Error("grid file: missing x,y,value header");
      header = true;
      continue;
    }
    std::istringstream row(line);
    double x, y, v;
    char c1, c2;
    if (!(row >> x >> c1 >> y >> c2 >> v) || c1 != ',' || c2 != ',')
      throw Error("grid file: malformed row '" + line + "'");
    xs.push_back(x);
    ys.push_back(y);
    vs.push_back(v);
  }
  if (vs.empty()) throw Error("grid file: no rows");
  GridMap g;
  g.origin = {xs.front(), ys.front()};
  g.nx = static_cast<std::size_t>(std::count(ys.begin(), ys.end(), ys.front()));
  if (g.nx == 0 || vs.size() % g.nx != 0) throw Error("grid file: ragged rows");
  g.ny = vs.size() / g.nx;
  g.step_m = g.nx > 1 ? xs[1] - xs[0] : (g.ny > 1 ? ys[g.nx] - ys[0] : 1.0);
  g.values = std::move(vs);
  return g;
}

}  // namespace vlcsim
