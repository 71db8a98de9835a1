#pragma once

// Superframe-synchronous simulation loop. All device steps of superframe k
// run before the coordinator step of k; coordinator commands reach devices at
// k + 1. Everything is deterministic in (config, seed).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <vector>

#include "vlcsim/channel.hpp"
#include "vlcsim/mobility.hpp"
#include "vlcsim/protocol.hpp"
#include "vlcsim/random.hpp"

namespace vlcsim {

enum class SchemeSelection { Traditional, Predictive, Both };

struct DeviceConfig {
  int id = 1;
  Trajectory trajectory;

  friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

struct SimConfig {
  Scenario scenario = default_scenario();
  SuperframeConfig superframe;
  DelayParams delays;
  SchemeSelection scheme = SchemeSelection::Both;
  std::vector<DeviceConfig> devices;
  double duration_s = 10.0;
  std::uint64_t seed = 1;
  PredictionConfig prediction;
  /// Traditional trigger; when unset, the photocurrent at
  /// `threshold_distance_m` horizontally from the lowest-id AP.
  std::optional<double> rss_threshold_a;
  double threshold_distance_m = 3.5;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

inline void validate(const SimConfig& c) {
  validate(c.scenario);
  validate(c.superframe);
  validate(c.delays);
  if (!(c.duration_s > 0)) throw ConfigError("duration must be positive");
  if (c.devices.empty()) throw ConfigError("at least one device required");
  for (std::size_t i = 0; i < c.devices.size(); ++i) {
    validate(c.devices[i].trajectory, c.scenario.room);
    for (std::size_t j = i + 1; j < c.devices.size(); ++j)
      if (c.devices[i].id == c.devices[j].id) throw ConfigError("duplicate device id");
  }
  if (c.prediction.method == PredictionMethod::LeastSquares && c.prediction.history < 2)
    throw ConfigError("prediction history must be at least 2");
  if (!(c.prediction.database_cell_m > 0)) throw ConfigError("database cell size must be positive");
  if (c.rss_threshold_a && !(*c.rss_threshold_a >= 0)) throw ConfigError("rss threshold must be non-negative");
  if (!(c.threshold_distance_m >= 0)) throw ConfigError("threshold distance must be non-negative");
  if (c.duration_s / c.superframe.duration_s < 1.0) throw ConfigError("duration shorter than one superframe");
}

/// Photocurrent threshold used by the scan-based scheme.
inline double rss_threshold(const SimConfig& c) {
  if (c.rss_threshold_a) return *c.rss_threshold_a;
  const auto& s = c.scenario;
  const AccessPoint* ref = &s.aps.front();
  for (const auto& ap : s.aps)
    if (ap.id < ref->id) ref = &ap;
  const Vec2 probe{ref->pos.x + c.threshold_distance_m, ref->pos.y};
  return s.channel.responsivity_a_per_w * los_power(*ref, probe, s.channel, s.room);
}

struct TraceRow {
  std::int64_t k = 0;
  int device_id = 0;
  Vec2 truth;
  std::optional<Vec2> estimate;
  std::optional<ApId> serving_ap;
  Phase phase = Phase::Disconnected;
};

struct TimeAccount {
  std::int64_t total_ns = 0;
  std::int64_t connected_ns = 0;
  std::int64_t disruption_ns = 0;
  std::int64_t disconnected_ns = 0;
};

struct DeviceMetrics {
  int device_id = 0;
  std::map<ApId, double> cell_gain_bits;
  double total_gain_bits = 0.0;
  TimeAccount time;
};

struct SchemeMetrics {
  Scheme scheme = Scheme::Predictive;
  std::size_t handovers = 0;
  std::size_t unnecessary = 0;
  std::size_t failures = 0;
  double mean_delay_s = 0.0;
  double max_delay_s = 0.0;
  double total_disruption_s = 0.0;
  double localization_rms_m = 0.0;
  double prediction_rms_m = 0.0;
  std::size_t localization_samples = 0;
  std::size_t prediction_samples = 0;
  std::vector<DeviceMetrics> devices;
};

struct SchemeRun {
  SchemeMetrics metrics;
  std::vector<HandoverEvent> events;
  std::vector<TraceRow> trace;
  std::map<int, ConnectivityLog> connectivity;
};

struct SimResult {
  std::vector<SchemeRun> runs;  // traditional first when both ran
  std::vector<Trajectory> trajectories;  // materialized, in device order
  std::int64_t superframes = 0;

  const SchemeRun* find(Scheme s) const {
    for (const auto& r : runs)
      if (r.metrics.scheme == s) return &r;
    return nullptr;
  }
};

namespace detail {

/// Ground truth shared by both schemes.
struct Truth {
  std::vector<std::vector<Vec2>> pos;   // [device][k]
  std::vector<std::vector<ApId>> best;  // [device][k]
};

/// Piecewise-constant link status built from exact change times.
class TimelineBuilder {
public:
  void change(std::int64_t at_ns, LinkStatus status, ApId ap) { changes_.push_back({at_ns, status, ap, seq_++}); }

  ConnectivityLog build(std::int64_t end_ns) {
    std::stable_sort(changes_.begin(), changes_.end(),
                     [](const Change& a, const Change& b) { return a.at != b.at ? a.at < b.at : a.seq < b.seq; });
    ConnectivityLog log;
    LinkSegment current{0, 0, LinkStatus::Disconnected, -1};
    for (const auto& c : changes_) {
      const std::int64_t at = std::clamp<std::int64_t>(c.at, 0, end_ns);
      if (at > current.start_ns) {
        current.end_ns = at;
        log.push_back(current);
        current.start_ns = at;
      }
      current.status = c.status;
      current.ap = c.ap;
    }
    if (end_ns > current.start_ns) {
      current.end_ns = end_ns;
      log.push_back(current);
    }
    return log;
  }

private:
  struct Change {
    std::int64_t at;
    LinkStatus status;
    ApId ap;
    std::uint64_t seq;
  };
  std::vector<Change> changes_;
  std::uint64_t seq_ = 0;
};

struct PendingSwitch {
  std::size_t event_index = 0;
  std::size_t device_index = 0;
  std::int64_t arrival_k = 0;
  std::optional<Vec2> predicted_xy;  // predictive switches feed the database
};

inline SchemeRun run_scheme(const SimConfig& config, Scheme scheme, const Channel& channel,
                            const std::vector<Trajectory>& trajectories, const Truth& truth, std::int64_t n_sf,
                            const BestApDatabase& database) {
  const Scenario& scenario = config.scenario;
  const std::size_t n_dev = config.devices.size();
  const std::int64_t sf_ns = to_ns(config.superframe.duration_s);
  const std::int64_t end_ns = n_sf * sf_ns;
  const DelayParams& d = config.delays;
  const UdContext ctx{scheme, config.superframe, d};

  std::vector<Rng> noise;
  std::vector<UdState> ud(n_dev);
  std::vector<TimelineBuilder> timeline(n_dev);
  const double threshold = rss_threshold(config);
  for (std::size_t i = 0; i < n_dev; ++i) {
    noise.push_back(Rng::substream(config.seed, static_cast<std::uint64_t>(config.devices[i].id), StreamSalt::Noise));
    ud[i].device_id = config.devices[i].id;
    ud[i].rss_threshold_a = threshold;
  }

  std::optional<Coordinator> coordinator;
  if (scheme == Scheme::Predictive)
    coordinator.emplace(scenario, database, config.prediction, config.superframe, d);

  SchemeRun run;
  run.metrics.scheme = scheme;
  std::vector<PendingSwitch> pending;
  std::vector<SwitchCommand> inbox;  // issued at k - 1
  std::vector<std::optional<Vec2>> predicted_next(n_dev);
  double loc_sq = 0.0, pred_sq = 0.0;

  auto device_index = [&](int id) {
    for (std::size_t i = 0; i < n_dev; ++i)
      if (config.devices[i].id == id) return i;
    return n_dev;
  };

  auto settle = [&](std::int64_t k, bool feedback) {
    std::vector<PendingSwitch> keep;
    for (const auto& p : pending) {
      if (feedback && p.arrival_k + 1 > k) {
        keep.push_back(p);
        continue;
      }
      auto clampk = [&](std::int64_t kk) { return static_cast<std::size_t>(std::min(kk, n_sf - 1)); };
      HandoverEvent& ev = run.events[p.event_index];
      SwitchTruth st;
      st.best_at_arrival = truth.best[p.device_index][clampk(p.arrival_k)];
      st.best_after_arrival = truth.best[p.device_index][clampk(p.arrival_k + 1)];
      st.arrival_xy = truth.pos[p.device_index][clampk(p.arrival_k)];
      ev.outcome = classify_outcome(ev, st, scenario.ap(ev.to_ap));
      if (feedback && coordinator && p.predicted_xy) coordinator->record_outcome(*p.predicted_xy, ev.outcome);
    }
    pending.swap(keep);
  };

  for (std::int64_t k = 0; k < n_sf; ++k) {
    const std::int64_t t_ns = k * sf_ns;
    settle(k, true);

    std::vector<RssReport> reports;
    std::vector<SwitchRequest> requests;
    for (std::size_t i = 0; i < n_dev; ++i) {
      const Vec2 pos = truth.pos[i][static_cast<std::size_t>(k)];
      std::vector<RssReading> readings;
      for (std::size_t a : channel.id_order()) {
        const AccessPoint& ap = scenario.aps[a];
        const OpticalSample s = sample_rss(ap, pos, channel, noise[i]);
        if (s.in_fov && s.rss_a() > 0) readings.push_back({ap.id, s.rss_a()});
      }

      const UdState before = ud[i];
      UdStepResult r = ud_step(ud[i], k, readings, inbox, ctx);
      ud[i] = std::move(r.state);
      if (before.phase == Phase::Disconnected && ud[i].phase == Phase::Associated)
        timeline[i].change(t_ns, LinkStatus::Connected, *ud[i].serving_ap);
      if (before.phase != Phase::Disconnected && ud[i].phase == Phase::Disconnected)
        timeline[i].change(t_ns, LinkStatus::Disconnected, -1);
      if (r.report) reports.push_back(std::move(*r.report));
      if (r.request) requests.push_back(*r.request);
    }
    inbox.clear();

    for (const auto& req : requests) {
      const std::size_t i = device_index(req.device_id);
      HandoverEvent ev{req.device_id, req.superframe_index, Scheme::Traditional, req.from_ap, req.to_ap,
                       traditional_delay(d), traditional_disruption(d), Outcome::Success};
      timeline[i].change(t_ns + to_ns(d.t_scan + d.t_decision), LinkStatus::Disruption, -1);
      timeline[i].change(t_ns + to_ns(traditional_delay(d)), LinkStatus::Connected, req.to_ap);
      run.events.push_back(ev);
      pending.push_back({run.events.size() - 1, i, ud[i].switch_end_k, std::nullopt});
    }

    std::vector<std::optional<Vec2>> estimate(n_dev);
    if (coordinator) {
      CoordinatorStepResult c = coordinator->step(k, reports);
      for (auto& [id, xy] : c.estimates) estimate[device_index(id)] = xy;
      for (const auto& sw : c.switches) {
        const std::size_t i = device_index(sw.event.device_id);
        const std::int64_t arrive_ns = t_ns + sf_ns;
        if (sw.event.disruption_s > 0) {
          timeline[i].change(arrive_ns, LinkStatus::Disruption, -1);
          timeline[i].change(t_ns + to_ns(sw.event.delay_s), LinkStatus::Connected, sw.event.to_ap);
        } else {
          timeline[i].change(arrive_ns, LinkStatus::Connected, sw.event.to_ap);
        }
        run.events.push_back(sw.event);
        pending.push_back({run.events.size() - 1, i, sw.arrival_k, sw.predicted_xy});
      }
      inbox = std::move(c.commands);

      // Prediction error is scored against the truth one superframe later.
      for (std::size_t i = 0; i < n_dev; ++i) {
        if (predicted_next[i]) {
          const double e = distance(*predicted_next[i], truth.pos[i][static_cast<std::size_t>(k)]);
          pred_sq += e * e;
          ++run.metrics.prediction_samples;
        }
        predicted_next[i].reset();
      }
      for (auto& [id, xy] : c.predictions) predicted_next[device_index(id)] = xy;
    }

    for (std::size_t i = 0; i < n_dev; ++i) {
      const Vec2 pos = truth.pos[i][static_cast<std::size_t>(k)];
      if (estimate[i]) {
        const double e = distance(*estimate[i], pos);
        loc_sq += e * e;
        ++run.metrics.localization_samples;
      }
      run.trace.push_back(TraceRow{k, config.devices[i].id, pos, estimate[i], ud[i].serving_ap, ud[i].phase});
    }
  }
  settle(std::numeric_limits<std::int64_t>::max(), false);

  // Metrics.
  SchemeMetrics& m = run.metrics;
  m.handovers = run.events.size();
  double delay_sum = 0.0;
  for (const auto& ev : run.events) {
    if (ev.outcome == Outcome::Unnecessary) ++m.unnecessary;
    if (ev.outcome == Outcome::Failure) ++m.failures;
    delay_sum += ev.delay_s;
    m.max_delay_s = std::max(m.max_delay_s, ev.delay_s);
    m.total_disruption_s += ev.disruption_s;
  }
  m.mean_delay_s = m.handovers ? delay_sum / static_cast<double>(m.handovers) : 0.0;
  m.localization_rms_m = m.localization_samples ? std::sqrt(loc_sq / static_cast<double>(m.localization_samples)) : 0.0;
  m.prediction_rms_m = m.prediction_samples ? std::sqrt(pred_sq / static_cast<double>(m.prediction_samples)) : 0.0;

  for (std::size_t i = 0; i < n_dev; ++i) {
    ConnectivityLog log = timeline[i].build(end_ns);
    DeviceMetrics dm;
    dm.device_id = config.devices[i].id;
    dm.time.total_ns = end_ns;
    for (const auto& seg : log) {
      const std::int64_t len = seg.end_ns - seg.start_ns;
      switch (seg.status) {
        case LinkStatus::Connected: dm.time.connected_ns += len; break;
        case LinkStatus::Disruption: dm.time.disruption_ns += len; break;
        case LinkStatus::Disconnected: dm.time.disconnected_ns += len; break;
      }
    }
    for (std::size_t a : channel.id_order()) {
      const AccessPoint& ap = scenario.aps[a];
      const double bits = cell_gain(trajectories[i], ap, log);
      dm.cell_gain_bits[ap.id] = bits;
      dm.total_gain_bits += bits;
    }
    m.devices.push_back(std::move(dm));
    run.connectivity[config.devices[i].id] = std::move(log);
  }
  return run;
}

}  // namespace detail

/// Runs the configured scheme(s) on identical trajectories and noise.
inline SimResult run(const SimConfig& config) {
  validate(config);
  const Channel channel(config.scenario);
  const std::int64_t sf_ns = to_ns(config.superframe.duration_s);
  const std::int64_t n_sf = std::max<std::int64_t>(1, to_ns(config.duration_s) / sf_ns);

  SimResult result;
  result.superframes = n_sf;
  detail::Truth truth;
  for (const auto& dev : config.devices) {
    Rng mob = Rng::substream(config.seed, static_cast<std::uint64_t>(dev.id), StreamSalt::Mobility);
    result.trajectories.push_back(materialize(dev.trajectory, config.scenario.room, config.duration_s, mob));
    std::vector<Vec2> pos;
    std::vector<ApId> best;
    pos.reserve(static_cast<std::size_t>(n_sf));
    best.reserve(static_cast<std::size_t>(n_sf));
    for (std::int64_t k = 0; k < n_sf; ++k) {
      const Vec2 p = config.scenario.room.clamp(
          position_at(result.trajectories.back(), static_cast<double>(k) * config.superframe.duration_s));
      pos.push_back(p);
      best.push_back(channel.best_ap(p));
    }
    truth.pos.push_back(std::move(pos));
    truth.best.push_back(std::move(best));
  }

  BestApDatabase db;
  if (config.scheme != SchemeSelection::Traditional) db = build_database(config.scenario, config.prediction.database_cell_m);

  if (config.scheme != SchemeSelection::Predictive)
    result.runs.push_back(detail::run_scheme(config, Scheme::Traditional, channel, result.trajectories, truth, n_sf, db));
  if (config.scheme != SchemeSelection::Traditional)
    result.runs.push_back(detail::run_scheme(config, Scheme::Predictive, channel, result.trajectories, truth, n_sf, db));
  return result;
}

/// Side-by-side metrics of both schemes on the same trajectories and seed.
struct Comparison {
  SchemeMetrics traditional;
  SchemeMetrics predictive;
  double nominal_traditional_delay_s = 0.0;
  double nominal_predictive_delay_s = 0.0;

  /// predictive / traditional per-handover delay.
  double delay_ratio() const {
    return nominal_traditional_delay_s > 0 ? nominal_predictive_delay_s / nominal_traditional_delay_s : 0.0;
  }
};

inline Comparison compare(SimConfig config) {
  config.scheme = SchemeSelection::Both;
  const SimResult r = run(config);
  Comparison c;
  c.traditional = r.find(Scheme::Traditional)->metrics;
  c.predictive = r.find(Scheme::Predictive)->metrics;
  c.nominal_traditional_delay_s = traditional_delay(config.delays);
  c.nominal_predictive_delay_s = predictive_delay(config.delays);
  return c;
}

}  // namespace vlcsim
