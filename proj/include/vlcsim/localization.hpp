#pragma once

// RSS-to-distance inversion and three-anchor trilateration on the receiver
// plane.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "vlcsim/scenario.hpp"

namespace vlcsim {

class LocalizationError : public Error {
public:
  using Error::Error;
};

struct RssReading {
  ApId ap_id = 0;
  double rss_a = 0.0;
};

struct RssReport {
  int device_id = 0;
  std::int64_t superframe_index = 0;
  std::vector<RssReading> readings;
  std::optional<ApId> serving_ap;  // AP the report was sent through, if associated
};

struct PositionEstimate {
  Vec2 xy;
  double residual_m = 0.0;
  std::vector<ApId> used_aps;
};

/// Inverts the coplanar LOS model: P_r = K / d^(m+3) with
/// K = P_t (m+1) T_s g h^(m+1) / (2 pi).
inline double rss_to_distance(double rss_a, const AccessPoint& ap, const ChannelParams& params,
                              const Room& room) {
  if (!(rss_a > 0)) throw LocalizationError("unusable reading");
  const double m = params.lambertian_order;
  const double h = room.receiver_plane_separation_m;
  const double power = rss_a / params.responsivity_a_per_w;
  const double k = ap.tx_power_w * (m + 1.0) * params.filter_gain * params.concentrator_gain *
                   std::pow(h, m + 1.0) / (2.0 * std::numbers::pi);
  return std::pow(k / power, 1.0 / (m + 3.0));
}

/// Usable readings ranked by RSS, strongest first, ties to the lowest id.
inline std::vector<RssReading> rank_readings(std::span<const RssReading> readings) {
  std::vector<RssReading> ranked;
  for (const auto& r : readings)
    if (r.rss_a > 0) ranked.push_back(r);
  std::sort(ranked.begin(), ranked.end(), [](const RssReading& a, const RssReading& b) {
    return a.rss_a != b.rss_a ? a.rss_a > b.rss_a : a.ap_id < b.ap_id;
  });
  return ranked;
}

/// Three strongest APs with non-collinear positions. When the top three are
/// collinear the weakest of them is replaced by the next-strongest AP that
/// breaks collinearity.
inline std::array<ApId, 3> select_anchor_triple(std::span<const RssReading> readings, const Scenario& s) {
  const auto ranked = rank_readings(readings);
  if (ranked.size() < 3) throw LocalizationError("insufficient anchors");
  const Vec2 a = s.ap(ranked[0].ap_id).pos;
  const Vec2 b = s.ap(ranked[1].ap_id).pos;
  for (std::size_t i = 2; i < ranked.size(); ++i) {
    if (!collinear(a, b, s.ap(ranked[i].ap_id).pos)) return {ranked[0].ap_id, ranked[1].ap_id, ranked[i].ap_id};
  }
  throw LocalizationError("no non-collinear triple");
}

struct Anchor {
  Vec2 xy;
  double distance_m = 0.0;  // 3-D distance to the LED
};

namespace detail {

inline double horizontal_radius_sq(const Anchor& a, double h) {
  return std::max(0.0, a.distance_m * a.distance_m - h * h);
}

inline double rms_residual(Vec2 xy, std::span<const Anchor> anchors, double h) {
  double acc = 0.0;
  for (const auto& a : anchors) {
    const double e = distance(xy, a.xy) - std::sqrt(horizontal_radius_sq(a, h));
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(anchors.size()));
}

}  // namespace detail

/// Solves the three circle equations by subtracting the first from the other
/// two. Distances are projected onto the receiver plane, r^2 = max(0, d^2 - h^2).
inline PositionEstimate trilaterate(std::span<const Anchor, 3> anchors, double h) {
  const Vec2 p1 = anchors[0].xy, p2 = anchors[1].xy, p3 = anchors[2].xy;
  const double r1 = detail::horizontal_radius_sq(anchors[0], h);
  const double r2 = detail::horizontal_radius_sq(anchors[1], h);
  const double r3 = detail::horizontal_radius_sq(anchors[2], h);

  // (x-x1)^2 + (y-y1)^2 - (x-xi)^2 - (y-yi)^2 = r1 - ri
  const double a11 = 2.0 * (p2.x - p1.x), a12 = 2.0 * (p2.y - p1.y);
  const double a21 = 2.0 * (p3.x - p1.x), a22 = 2.0 * (p3.y - p1.y);
  const double b1 = r1 - r2 - (p1.x * p1.x + p1.y * p1.y) + (p2.x * p2.x + p2.y * p2.y);
  const double b2 = r1 - r3 - (p1.x * p1.x + p1.y * p1.y) + (p3.x * p3.x + p3.y * p3.y);
  const double det = a11 * a22 - a12 * a21;
  const double scale = std::max({std::abs(a11 * a22), std::abs(a12 * a21), 1e-300});
  if (std::abs(det) <= 1e-12 * scale) throw LocalizationError("singular anchor geometry");

  PositionEstimate est;
  est.xy = {(b1 * a22 - b2 * a12) / det, (a11 * b2 - a21 * b1) / det};
  est.residual_m = detail::rms_residual(est.xy, anchors, h);
  return est;
}

/// Least-squares position from N >= 3 anchors (linearized against the first).
inline PositionEstimate multilaterate(std::span<const Anchor> anchors, double h) {
  if (anchors.size() < 3) throw LocalizationError("insufficient anchors");
  const Vec2 p1 = anchors[0].xy;
  const double r1 = detail::horizontal_radius_sq(anchors[0], h);
  double ata11 = 0, ata12 = 0, ata22 = 0, atb1 = 0, atb2 = 0;
  for (std::size_t i = 1; i < anchors.size(); ++i) {
    const Vec2 pi = anchors[i].xy;
    const double ax = 2.0 * (pi.x - p1.x), ay = 2.0 * (pi.y - p1.y);
    const double b = r1 - detail::horizontal_radius_sq(anchors[i], h) - (p1.x * p1.x + p1.y * p1.y) +
                     (pi.x * pi.x + pi.y * pi.y);
    ata11 += ax * ax;
    ata12 += ax * ay;
    ata22 += ay * ay;
    atb1 += ax * b;
    atb2 += ay * b;
  }
  const double det = ata11 * ata22 - ata12 * ata12;
  if (std::abs(det) <= 1e-12 * std::max(ata11 * ata22, 1e-300)) throw LocalizationError("no non-collinear triple");
  PositionEstimate est;
  est.xy = {(atb1 * ata22 - atb2 * ata12) / det, (ata11 * atb2 - ata12 * atb1) / det};
  est.residual_m = detail::rms_residual(est.xy, anchors, h);
  return est;
}

struct LocalizationOptions {
  bool least_squares = false;  // use every usable reading instead of three
};

/// rss_to_distance -> select_anchor_triple -> trilaterate, clamped to the room.
inline PositionEstimate estimate_position(const RssReport& report, const Scenario& s,
                                          LocalizationOptions opts = {}) {
  const double h = s.room.receiver_plane_separation_m;
  auto to_anchor = [&](ApId id, double rss) {
    const AccessPoint& ap = s.ap(id);
    return Anchor{ap.pos, rss_to_distance(rss, ap, s.channel, s.room)};
  };
  auto rss_of = [&](ApId id) {
    for (const auto& r : report.readings)
      if (r.ap_id == id) return r.rss_a;
    return 0.0;
  };

  PositionEstimate est;
  if (opts.least_squares) {
    const auto ranked = rank_readings(report.readings);
    if (ranked.size() < 3) throw LocalizationError("insufficient anchors");
    select_anchor_triple(report.readings, s);  // rejects all-collinear sets
    std::vector<Anchor> anchors;
    for (const auto& r : ranked) {
      anchors.push_back(to_anchor(r.ap_id, r.rss_a));
      est.used_aps.push_back(r.ap_id);
    }
    auto solved = multilaterate(anchors, h);
    est.xy = solved.xy;
    est.residual_m = solved.residual_m;
  } else {
    const auto triple = select_anchor_triple(report.readings, s);
    std::array<Anchor, 3> anchors;
    for (std::size_t i = 0; i < 3; ++i) anchors[i] = to_anchor(triple[i], rss_of(triple[i]));
    auto solved = trilaterate(std::span<const Anchor, 3>(anchors), h);
    est.xy = solved.xy;
    est.residual_m = solved.residual_m;
    est.used_aps.assign(triple.begin(), triple.end());
  }
  est.xy = s.room.clamp(est.xy);
  return est;
}

}  // namespace vlcsim
