#include <gtest/gtest.h>

#include <random>

#include "vlcsim/protocol.hpp"

using namespace vlcsim;

namespace {

DelayParams all(double v) {
  DelayParams p;
  p.t_scan = p.t_decision = p.t_discon = p.t_linksw = p.t_linkasso = p.t_sync = v;
  return p;
}

Scenario noiseless() {
  Scenario s = default_scenario();
  s.channel.noise_sigma_a = 0;
  return s;
}

std::vector<RssReading> readings_at(const Scenario& s, Vec2 rx) {
  std::vector<RssReading> out;
  for (const auto& ap : s.aps) {
    const double p = los_power(ap, rx, s.channel, s.room);
    if (p > 0) out.push_back({ap.id, s.channel.responsivity_a_per_w * p});
  }
  return out;
}

UdState associated(int dev, ApId ap, double threshold = 0.0) {
  UdState st;
  st.device_id = dev;
  st.serving_ap = ap;
  st.phase = Phase::Associated;
  st.rss_threshold_a = threshold;
  return st;
}

}  // namespace

TEST(Delays, Traditional) {
  EXPECT_DOUBLE_EQ(traditional_delay(all(0.01)), 0.06);
  EXPECT_EQ(traditional_delay(all(0.0)), 0.0);
  DelayParams p = all(0);
  p.t_scan = 0.005;
  EXPECT_EQ(traditional_delay(p), 0.005);
}

TEST(Delays, Predictive) {
  EXPECT_DOUBLE_EQ(predictive_delay(all(0.01)), 0.03);
  DelayParams p = all(0);
  p.t_scan = 1.0;
  EXPECT_EQ(predictive_delay(p), 0.0);
  p = all(0.01);
  p.t_linksw = 0.02;
  EXPECT_DOUBLE_EQ(predictive_delay(p), 0.04);
  p.first_stage = FirstStage::Shared;
  EXPECT_DOUBLE_EQ(predictive_delay(p), 0.03);
}

TEST(Delays, PredictiveNeverSlower) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0, 0.05);
  std::bernoulli_distribution zero(0.3);
  for (int i = 0; i < 10000; ++i) {
    DelayParams p;
    for (double* f : {&p.t_scan, &p.t_decision, &p.t_discon, &p.t_linksw, &p.t_linkasso, &p.t_sync})
      *f = zero(gen) ? 0.0 : u(gen);
    p.first_stage = i % 2 ? FirstStage::Max : FirstStage::Shared;
    EXPECT_LE(predictive_delay(p), traditional_delay(p));
    if (p.t_scan + p.t_decision > 0 || std::min(p.t_discon, p.t_linksw) > 0) {
      EXPECT_LT(predictive_delay(p), traditional_delay(p));
    }
  }
}

TEST(Delays, Disruption) {
  const SuperframeConfig sf;
  EXPECT_DOUBLE_EQ(traditional_disruption(all(0.01)), 0.04);
  EXPECT_EQ(predictive_disruption(all(0.01), sf), 0.0);
  EXPECT_NEAR(predictive_disruption(all(0.05), sf), 0.05, 1e-15);
}

TEST(Superframes, CeilWithTolerance) {
  const SuperframeConfig sf;
  EXPECT_EQ(superframes_for(0.0, sf), 0);
  EXPECT_EQ(superframes_for(0.03, sf), 1);
  EXPECT_EQ(superframes_for(0.1, sf), 1);
  EXPECT_EQ(superframes_for(0.3, sf), 3);  // 0.3/0.1 is 2.9999999999999996
  EXPECT_EQ(superframes_for(0.1000001, sf), 2);
}

TEST(Classify, Examples) {
  const Scenario s = default_scenario();
  HandoverEvent ev{1, 10, Scheme::Predictive, 9, 6, 0.03, 0.0, Outcome::Success};
  EXPECT_EQ(classify_outcome(ev, {6, 6, {2.6, 0}}, s.ap(6)), Outcome::Success);
  EXPECT_EQ(classify_outcome(ev, {9, 9, {2.4, 0}}, s.ap(6)), Outcome::Failure);
  EXPECT_EQ(classify_outcome(ev, {6, 9, {2.5, 0}}, s.ap(6)), Outcome::Unnecessary);  // ping-pong
  EXPECT_EQ(classify_outcome(ev, {6, 6, {5, 5}}, AccessPoint{6, {5, 0}, 1, 1, 1, 4.0}), Outcome::Failure);
  ev.disruption_s = 0.02;  // late but correct
  EXPECT_EQ(classify_outcome(ev, {6, 6, {2.6, 0}}, s.ap(6)), Outcome::Success);
}

TEST(UdStep, SteadyStateEmitsOneReport) {
  const Scenario s = noiseless();
  const UdContext ctx{Scheme::Predictive, {}, all(0.01)};
  const UdState st = associated(1, 9);
  const auto r = ud_step(st, 4, readings_at(s, {0.2, 0.1}), {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Associated);
  EXPECT_EQ(r.state.serving_ap, std::optional<ApId>(9));
  ASSERT_TRUE(r.report);
  EXPECT_EQ(r.report->superframe_index, 4);
  EXPECT_EQ(r.report->readings.size(), 9u);
  EXPECT_FALSE(r.request);
}

TEST(UdStep, CommandStartsSwitch) {
  const Scenario s = noiseless();
  const UdContext ctx{Scheme::Predictive, {}, all(0.01)};
  const SwitchCommand cmd{1, 4, 9, 7};
  auto r = ud_step(associated(1, 9), 4, readings_at(s, {0, -2}), std::span(&cmd, 1), ctx);
  EXPECT_EQ(r.state.phase, Phase::Switching);
  EXPECT_EQ(r.state.target_ap, std::optional<ApId>(7));
  EXPECT_DOUBLE_EQ(r.state.timer_s, predictive_delay(ctx.delays));
  r = ud_step(r.state, 5, readings_at(s, {0, -2.1}), {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Associated);
  EXPECT_EQ(r.state.serving_ap, std::optional<ApId>(7));
}

TEST(UdStep, CommandForOtherDeviceIgnored) {
  const Scenario s = noiseless();
  const UdContext ctx{Scheme::Predictive, {}, all(0.01)};
  const SwitchCommand cmd{2, 4, 9, 7};
  const auto r = ud_step(associated(1, 9), 4, readings_at(s, {0, 0}), std::span(&cmd, 1), ctx);
  EXPECT_EQ(r.state.phase, Phase::Associated);
  EXPECT_EQ(r.state.serving_ap, std::optional<ApId>(9));
}

TEST(UdStep, TraditionalBelowThresholdScans) {
  const Scenario s = noiseless();
  const UdContext ctx{Scheme::Traditional, {}, all(0.01)};
  const auto rd = readings_at(s, {-1.0, 0});  // 5 still serving, 9 much stronger
  const double serving = rd[4].rss_a;
  auto r = ud_step(associated(1, 5, serving * 1.01), 7, rd, {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Scanning);
  ASSERT_TRUE(r.request);
  EXPECT_EQ(r.request->from_ap, 5);
  EXPECT_EQ(r.request->to_ap, 9);
  EXPECT_FALSE(r.report);
  // 20 ms scan+decision -> 1 superframe; 40 ms disruption -> 1 more
  r = ud_step(r.state, 8, rd, {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Switching);
  r = ud_step(r.state, 9, rd, {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Associated);
  EXPECT_EQ(r.state.serving_ap, std::optional<ApId>(9));
}

TEST(UdStep, TraditionalAboveThresholdStays) {
  const Scenario s = noiseless();
  const UdContext ctx{Scheme::Traditional, {}, all(0.01)};
  const auto rd = readings_at(s, {-1.0, 0});
  const auto r = ud_step(associated(1, 5, rd[4].rss_a * 0.99), 7, rd, {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Associated);
  EXPECT_FALSE(r.request);
}

TEST(UdStep, LossOfServingApDisconnectsThenReassociates) {
  const UdContext ctx{Scheme::Predictive, {}, all(0.01)};
  const std::vector<RssReading> only3 = {{3, 1e-4}};
  auto r = ud_step(associated(1, 9), 0, only3, {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Associated);
  EXPECT_EQ(r.state.serving_ap, std::optional<ApId>(3));
  r = ud_step(r.state, 1, {}, {}, ctx);
  EXPECT_EQ(r.state.phase, Phase::Disconnected);
  EXPECT_FALSE(r.state.serving_ap);
}

namespace {

struct Drive {
  std::vector<SwitchCommand> commands;
  ApId serving = -1;
};

// Feeds noiseless reports for a walk and applies commands to the serving AP.
Drive drive_walk(Coordinator& c, const Scenario& s, int dev, Vec2 start, Vec2 step, int n, ApId serving) {
  Drive d;
  d.serving = serving;
  for (int k = 0; k < n; ++k) {
    const Vec2 p = start + static_cast<double>(k) * step;
    const RssReport rep{dev, k, readings_at(s, p), d.serving};
    const auto out = c.step(k, std::span(&rep, 1));
    for (const auto& cmd : out.commands) {
      d.commands.push_back(cmd);
      d.serving = cmd.to_ap;
    }
  }
  return d;
}

}  // namespace

TEST(Coordinator, StationaryNeverCommands) {
  const Scenario s = noiseless();
  Coordinator c(s, build_database(s, 0.5), PredictionConfig{}, {}, all(0.01));
  const auto d = drive_walk(c, s, 1, {0, 0}, {0, 0}, 100, 9);
  EXPECT_TRUE(d.commands.empty());
}

TEST(Coordinator, CrossingOneBoundary) {
  const Scenario s = noiseless();
  PredictionConfig pc;
  pc.alpha = 1.0;
  pc.database_cell_m = 0.1;
  Coordinator c(s, build_database(s, 0.1), pc, {}, all(0.01));
  const auto d = drive_walk(c, s, 1, {0, 0}, {0.1, 0}, 50, 9);
  ASSERT_EQ(d.commands.size(), 1u);
  EXPECT_EQ(d.commands[0].from_ap, 9);
  EXPECT_EQ(d.commands[0].to_ap, 6);
  // truth: ap 6 is best from x = 2.5 (tie to the lower id) i.e. k = 25
  EXPECT_LE(d.commands[0].issued_k, 25);
  EXPECT_GE(d.commands[0].issued_k, 24);
}

TEST(Coordinator, DevicesIndependentOfInterleaving) {
  const Scenario s = noiseless();
  PredictionConfig pc;
  pc.alpha = 1.0;
  auto run = [&](bool reversed) {
    Coordinator c(s, build_database(s, 0.5), pc, {}, all(0.01));
    std::vector<SwitchCommand> cmds;
    ApId serving[2] = {9, 9};
    for (int k = 0; k < 60; ++k) {
      std::vector<RssReport> reps = {
          RssReport{1, k, readings_at(s, {0.1 * k, 0}), serving[0]},
          RssReport{2, k, readings_at(s, {0, -0.1 * k}), serving[1]},
      };
      if (reversed) std::swap(reps[0], reps[1]);
      for (const auto& cmd : c.step(k, reps).commands) {
        cmds.push_back(cmd);
        serving[cmd.device_id - 1] = cmd.to_ap;
      }
    }
    std::sort(cmds.begin(), cmds.end(), [](auto& a, auto& b) { return a.device_id < b.device_id; });
    return cmds;
  };
  const auto a = run(false), b = run(true);
  ASSERT_EQ(a.size(), b.size());
  ASSERT_EQ(a.size(), 2u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].device_id, b[i].device_id);
    EXPECT_EQ(a[i].issued_k, b[i].issued_k);
    EXPECT_EQ(a[i].to_ap, b[i].to_ap);
  }
  EXPECT_EQ(a[0].to_ap, 6);
  EXPECT_EQ(a[1].to_ap, 7);
}

TEST(Coordinator, AtMostOneCommandPerDevicePerSuperframe) {
  const Scenario s = noiseless();
  Coordinator c(s, build_database(s, 0.5), PredictionConfig{}, {}, all(0.05));
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-6, 6);
  for (int k = 0; k < 200; ++k) {
    // jumpy positions force frequent decisions
    const RssReport rep{1, k, readings_at(s, {u(gen), u(gen)}), 1};
    const auto out = c.step(k, std::span(&rep, 1));
    EXPECT_LE(out.commands.size(), 1u);
    for (const auto& sw : out.switches) {
      EXPECT_DOUBLE_EQ(sw.event.delay_s, predictive_delay(all(0.05)));
      EXPECT_NEAR(sw.event.disruption_s, 0.05, 1e-15);
    }
  }
}
