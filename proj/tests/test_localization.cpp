#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "vlcsim/channel.hpp"
#include "vlcsim/localization.hpp"

using namespace vlcsim;

namespace {

Scenario noiseless() {
  Scenario s = default_scenario();
  s.channel.noise_sigma_a = 0;
  return s;
}

RssReport report_at(const Scenario& s, Vec2 rx) {
  RssReport r;
  for (const auto& ap : s.aps) {
    const double p = los_power(ap, rx, s.channel, s.room);
    if (p > 0) r.readings.push_back({ap.id, s.channel.responsivity_a_per_w * p});
  }
  return r;
}

std::array<Anchor, 3> exact_anchors(Vec2 truth, Vec2 a, Vec2 b, Vec2 c, double h) {
  auto d = [&](Vec2 p) { return std::sqrt(std::pow(distance(truth, p), 2) + h * h); };
  return {Anchor{a, d(a)}, Anchor{b, d(b)}, Anchor{c, d(c)}};
}

}  // namespace

TEST(RssToDistance, BeneathLedGivesH) {
  const Scenario s = noiseless();
  const auto& ap = s.aps[8];
  const double rss = 0.54 * los_power(ap, ap.pos, s.channel, s.room);
  EXPECT_NEAR(rss_to_distance(rss, ap, s.channel, s.room), 1.8, 1e-14);
}

TEST(RssToDistance, RoundTripM1) {
  Scenario s = noiseless();
  s.channel.lambertian_order = 1.0;
  const AccessPoint& ap = s.aps[8];
  const double rss = 0.54 * los_power(ap, {1, 1}, s.channel, s.room);
  EXPECT_NEAR(rss_to_distance(rss, ap, s.channel, s.room), std::sqrt(5.24), 1e-12);
}

TEST(RssToDistance, HalvedRssScaling) {
  const Scenario s = noiseless();
  const double m = s.channel.lambertian_order;
  const double d1 = rss_to_distance(1e-3, s.aps[0], s.channel, s.room);
  const double d2 = rss_to_distance(0.5e-3, s.aps[0], s.channel, s.room);
  EXPECT_NEAR(d2 / d1, std::pow(2.0, 1.0 / (m + 3)), 1e-14);
}

TEST(RssToDistance, IdentityOverFovRange) {
  const Scenario s = noiseless();
  const auto& ap = s.aps[8];
  const double r_max = 1.8 * std::tan(s.channel.fov_semi_angle_rad);
  for (double r = 0; r < std::min(r_max, 6.0); r += 0.05) {
    const double d = std::hypot(r, 1.8);
    const double rss = 0.54 * los_power(ap, {r, 0}, s.channel, s.room);
    EXPECT_NEAR(rss_to_distance(rss, ap, s.channel, s.room), d, 1e-12 * d);
  }
}

TEST(RssToDistance, RejectsNonPositive) {
  const Scenario s = noiseless();
  EXPECT_THROW(rss_to_distance(0.0, s.aps[0], s.channel, s.room), LocalizationError);
  EXPECT_THROW(rss_to_distance(-1e-6, s.aps[0], s.channel, s.room), LocalizationError);
}

TEST(AnchorTriple, CentreOfDefaultRoom) {
  const Scenario s = noiseless();
  const auto t = select_anchor_triple(report_at(s, {0, 0}).readings, s);
  // 9 strongest, then the four edge APs tie: 5 then 6 (collinear with 5 and 9), then 7.
  EXPECT_EQ(t, (std::array<ApId, 3>{9, 5, 7}));
}

TEST(AnchorTriple, OneRowIsCollinear) {
  const Scenario s = noiseless();
  const std::vector<RssReading> row = {{5, 1e-3}, {9, 2e-3}, {6, 0.5e-3}};
  EXPECT_THROW(select_anchor_triple(row, s), LocalizationError);
  try {
    select_anchor_triple(row, s);
  } catch (const LocalizationError& e) {
    EXPECT_NE(std::string(e.what()).find("no non-collinear triple"), std::string::npos);
  }
}

TEST(AnchorTriple, InsufficientAnchors) {
  const Scenario s = noiseless();
  const std::vector<RssReading> two = {{5, 1e-3}, {9, 2e-3}, {6, 0.0}};
  EXPECT_THROW(select_anchor_triple(two, s), LocalizationError);
}

TEST(AnchorTriple, AlwaysExistsWithNineReadings) {
  const Scenario s = noiseless();
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int i = 0; i < 500; ++i) {
    const auto rep = report_at(s, {u(gen), u(gen)});
    const auto t = select_anchor_triple(rep.readings, s);
    EXPECT_FALSE(collinear(s.ap(t[0]).pos, s.ap(t[1]).pos, s.ap(t[2]).pos));
  }
}

TEST(AnchorTriple, ReselectionKeepsTopTwo) {
  const Scenario s = noiseless();
  // close to the right wall on the middle row: 6 strongest, then 4/3 or 9 depending on side
  const auto rep = report_at(s, {5.8, 0.3});
  const auto ranked = rank_readings(rep.readings);
  const auto t = select_anchor_triple(rep.readings, s);
  EXPECT_EQ(t[0], ranked[0].ap_id);
  EXPECT_EQ(t[1], ranked[1].ap_id);
  EXPECT_TRUE(collinear(s.ap(ranked[0].ap_id).pos, s.ap(ranked[1].ap_id).pos, s.ap(ranked[2].ap_id).pos));
  EXPECT_EQ(t[2], ranked[3].ap_id);
}

TEST(Trilaterate, ExactDistances) {
  const double h = 1.8;
  const auto a = exact_anchors({2, 3}, {0, 0}, {5, 0}, {0, 5}, h);
  const auto est = trilaterate(a, h);
  EXPECT_NEAR(est.xy.x, 2, 1e-9);
  EXPECT_NEAR(est.xy.y, 3, 1e-9);
  EXPECT_LE(est.residual_m, 1e-9);
}

TEST(Trilaterate, AtAnchorProjection) {
  const double h = 1.8;
  const auto a = exact_anchors({5, 0}, {5, 0}, {0, 0}, {0, 5}, h);
  EXPECT_EQ(a[0].distance_m, h);
  const auto est = trilaterate(a, h);
  EXPECT_NEAR(est.xy.x, 5, 1e-12);
  EXPECT_NEAR(est.xy.y, 0, 1e-12);
}

TEST(Trilaterate, ClampsShortDistances) {
  const double h = 1.8;
  std::array<Anchor, 3> a = exact_anchors({5, 0}, {5, 0}, {0, 0}, {0, 5}, h);
  a[0].distance_m = 1.5;  // shorter than h: treated as radius 0
  const auto est = trilaterate(a, h);
  EXPECT_NEAR(est.xy.x, 5, 1e-12);
}

TEST(Trilaterate, PerturbedDistances) {
  const double h = 1.8;
  auto a = exact_anchors({1, 1}, {0, 0}, {5, 0}, {0, 5}, h);
  for (auto& x : a) x.distance_m += 1e-3;
  const auto est = trilaterate(a, h);
  EXPECT_GT(est.residual_m, 0.0);
  EXPECT_LT(distance(est.xy, {1, 1}), 5e-3);
}

TEST(Trilaterate, SingularThrows) {
  const auto a = exact_anchors({1, 1}, {-5, 0}, {0, 0}, {5, 0}, 1.8);
  EXPECT_THROW(trilaterate(a, 1.8), LocalizationError);
}

TEST(Trilaterate, TranslationEquivariant) {
  std::mt19937_64 gen(13);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 100; ++i) {
    const Vec2 truth{u(gen), u(gen)}, t{u(gen), u(gen)};
    auto a = exact_anchors(truth, {-5, 0}, {0, 0}, {0, -5}, 1.8);
    for (auto& x : a) x.distance_m *= 1.0 + 1e-3 * u(gen);
    auto b = a;
    for (auto& x : b) x.xy = x.xy + t;
    const auto ea = trilaterate(a, 1.8), eb = trilaterate(b, 1.8);
    EXPECT_NEAR(eb.xy.x, ea.xy.x + t.x, 1e-9);
    EXPECT_NEAR(eb.xy.y, ea.xy.y + t.y, 1e-9);
  }
}

TEST(Multilaterate, ExactWithManyAnchors) {
  const double h = 1.8;
  const Vec2 truth{-1.2, 2.7};
  std::vector<Anchor> a;
  for (Vec2 p : {Vec2{0, 0}, Vec2{5, 0}, Vec2{0, 5}, Vec2{-5, -5}, Vec2{5, 5}})
    a.push_back({p, std::hypot(distance(truth, p), h)});
  const auto est = multilaterate(a, h);
  EXPECT_NEAR(est.xy.x, truth.x, 1e-9);
  EXPECT_NEAR(est.xy.y, truth.y, 1e-9);
}

TEST(EstimatePosition, NoiselessRoundTrip) {
  const Scenario s = noiseless();
  const auto est = estimate_position(report_at(s, {3.5, -2.0}), s);
  EXPECT_LT(distance(est.xy, {3.5, -2.0}), 1e-6);
  const auto ls = estimate_position(report_at(s, {3.5, -2.0}), s, {true});
  EXPECT_LT(distance(ls.xy, {3.5, -2.0}), 1e-6);
  EXPECT_EQ(ls.used_aps.size(), report_at(s, {3.5, -2.0}).readings.size());
  EXPECT_EQ(ls.used_aps.size(), 8u);  // (-5,5) is outside the 80 degree field of view
}

TEST(EstimatePosition, EmptyReadingsThrow) {
  const Scenario s = noiseless();
  EXPECT_THROW(estimate_position(RssReport{}, s), LocalizationError);
}

TEST(EstimatePosition, ClampedToRoom) {
  const Scenario s = noiseless();
  RssReport r = report_at(s, {6, 6});
  for (auto& x : r.readings) x.rss_a *= 0.5;  // every distance inflated
  const auto est = estimate_position(r, s);
  EXPECT_TRUE(s.room.contains(est.xy));
}

TEST(EstimatePosition, MedianErrorGrowsWithNoise) {
  const Scenario s = noiseless();
  const Vec2 centre{0, 0};
  const RssReport clean = report_at(s, centre);
  double signal = 0;
  for (const auto& r : clean.readings) signal = std::max(signal, r.rss_a);
  std::mt19937_64 gen(77);
  std::normal_distribution<double> n01(0, 1);
  double prev = -1;
  for (double frac : {0.001, 0.01, 0.05}) {
    std::vector<double> errs;
    for (int t = 0; t < 1000; ++t) {
      RssReport r = clean;
      for (auto& x : r.readings) x.rss_a = std::max(0.0, x.rss_a + frac * signal * n01(gen));
      try {
        errs.push_back(distance(estimate_position(r, s).xy, centre));
      } catch (const LocalizationError&) {
        errs.push_back(INFINITY);
      }
    }
    std::nth_element(errs.begin(), errs.begin() + 500, errs.end());
    EXPECT_GT(errs[500], prev) << frac;
    prev = errs[500];
  }
}
