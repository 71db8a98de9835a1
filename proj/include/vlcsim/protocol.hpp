#pragma once

// Superframe timing, link-switching delay models and the user-device /
// coordinator state machines for the predictive and the scan-based schemes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vlcsim/localization.hpp"
#include "vlcsim/prediction.hpp"

namespace vlcsim {

struct SuperframeConfig {
  double duration_s = 0.1;  // dt1: time between two inactive portions
  double active_fraction = 0.9;

  double inactive_s() const { return duration_s * (1.0 - active_fraction); }
  friend bool operator==(const SuperframeConfig&, const SuperframeConfig&) = default;
};

inline void validate(const SuperframeConfig& c) {
  if (!(c.duration_s > 0)) throw ConfigError("superframe duration must be positive");
  if (!(c.active_fraction > 0 && c.active_fraction < 1)) throw ConfigError("active fraction outside (0, 1)");
}

/// How the fused disconnect/link-switch stage of the predictive scheme is
/// priced. Max: both run at once, so the stage lasts max(t_discon, t_linksw).
/// Shared: the stage is one shared duration, t_discon.
enum class FirstStage { Max, Shared };

struct DelayParams {
  double t_scan = 0.01;
  double t_decision = 0.01;
  double t_discon = 0.01;
  double t_linksw = 0.01;
  double t_linkasso = 0.01;
  double t_sync = 0.01;
  FirstStage first_stage = FirstStage::Max;

  friend bool operator==(const DelayParams&, const DelayParams&) = default;
};

inline void validate(const DelayParams& p) {
  for (double v : {p.t_scan, p.t_decision, p.t_discon, p.t_linksw, p.t_linkasso, p.t_sync})
    if (!(v >= 0)) throw ConfigError("delay components must be non-negative");
}

/// Scan-based hard switch: every stage runs back to back.
inline double traditional_delay(const DelayParams& p) {
  return p.t_scan + p.t_decision + p.t_discon + p.t_linksw + p.t_linkasso + p.t_sync;
}

/// Coordinator-driven switch: no scan or decision at the device, and
/// disconnection overlaps new-link establishment.
inline double predictive_delay(const DelayParams& p) {
  const double first = p.first_stage == FirstStage::Max ? std::max(p.t_discon, p.t_linksw) : p.t_discon;
  return first + p.t_linkasso + p.t_sync;
}

/// Portion of the traditional switch during which the device has no link.
inline double traditional_disruption(const DelayParams& p) {
  return p.t_discon + p.t_linksw + p.t_linkasso + p.t_sync;
}

/// Service gap of a predictive switch started one report interval before
/// the device reaches the predicted position.
inline double predictive_disruption(const DelayParams& p, const SuperframeConfig& sf) {
  return std::max(0.0, predictive_delay(p) - sf.duration_s);
}

/// Whole superframes needed to cover `seconds` (state-machine timers).
inline std::int64_t superframes_for(double seconds, const SuperframeConfig& sf) {
  if (seconds <= 0) return 0;
  return static_cast<std::int64_t>(std::ceil(seconds / sf.duration_s - 1e-9));
}

enum class Scheme { Traditional, Predictive };
enum class Phase { Associated, Scanning, Switching, Disconnected };
enum class Outcome { Success, Failure, Unnecessary };

inline std::string_view to_string(Scheme s) { return s == Scheme::Traditional ? "traditional" : "predictive"; }

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Associated: return "associated";
    case Phase::Scanning: return "scanning";
    case Phase::Switching: return "switching";
    case Phase::Disconnected: return "disconnected";
  }
  return "?";
}

inline std::string_view to_string(Outcome o) {
  switch (o) {
    case Outcome::Success: return "success";
    case Outcome::Failure: return "failure";
    case Outcome::Unnecessary: return "unnecessary";
  }
  return "?";
}

struct HandoverEvent {
  int device_id = 0;
  std::int64_t superframe_index = 0;
  Scheme scheme = Scheme::Predictive;
  ApId from_ap = -1;
  ApId to_ap = -1;
  double delay_s = 0.0;
  double disruption_s = 0.0;
  Outcome outcome = Outcome::Success;
};

/// What the engine knows about the device around the end of a switch.
struct SwitchTruth {
  ApId best_at_arrival = -1;
  ApId best_after_arrival = -1;  // one superframe later
  Vec2 arrival_xy;
};

/// Failure: target not truly best on arrival, or arrival outside its
/// coverage radius. Unnecessary: the true best reverts to the old AP one
/// superframe later. Otherwise Success (a late switch keeps its disruption).
inline Outcome classify_outcome(const HandoverEvent& event, const SwitchTruth& truth, const AccessPoint& target) {
  if (truth.best_at_arrival != event.to_ap) return Outcome::Failure;
  if (distance(truth.arrival_xy, target.pos) > target.coverage_radius_m) return Outcome::Failure;
  if (truth.best_after_arrival == event.from_ap) return Outcome::Unnecessary;
  return Outcome::Success;
}

struct UdState {
  int device_id = 0;
  std::optional<ApId> serving_ap;
  Phase phase = Phase::Disconnected;
  double rss_threshold_a = 0.0;

  // In-flight switch.
  std::optional<ApId> target_ap;
  double timer_s = 0.0;              // real duration of the switch in progress
  std::int64_t scan_end_k = 0;       // Scanning -> Switching
  std::int64_t switch_end_k = 0;     // Switching -> Associated
};

/// Coordinator order to move a device to another AP; disconnection and
/// association start together at the issuing superframe.
struct SwitchCommand {
  int device_id = 0;
  std::int64_t issued_k = 0;
  ApId from_ap = -1;
  ApId to_ap = -1;
};

/// Device-initiated request of the scan-based scheme.
struct SwitchRequest {
  int device_id = 0;
  std::int64_t superframe_index = 0;
  ApId from_ap = -1;
  ApId to_ap = -1;
};

struct UdContext {
  Scheme scheme = Scheme::Predictive;
  SuperframeConfig superframe;
  DelayParams delays;
};

struct UdStepResult {
  UdState state;
  std::optional<RssReport> report;
  std::optional<SwitchRequest> request;
};

namespace detail {

inline void advance_timers(UdState& s, std::int64_t k) {
  if (s.phase == Phase::Scanning && k >= s.scan_end_k) s.phase = Phase::Switching;
  if (s.phase == Phase::Switching && k >= s.switch_end_k) {
    s.phase = Phase::Associated;
    s.serving_ap = s.target_ap;
    s.target_ap.reset();
    s.timer_s = 0.0;
  }
}

inline double reading_for(std::span<const RssReading> readings, ApId id) {
  for (const auto& r : readings)
    if (r.ap_id == id) return r.rss_a;
  return 0.0;
}

inline std::optional<ApId> strongest(std::span<const RssReading> readings) {
  const auto ranked = rank_readings(readings);
  if (ranked.empty()) return std::nullopt;
  return ranked.front().ap_id;
}

}  // namespace detail

/// One user-device step, run in the inactive portion of superframe k.
/// `readings` are this superframe's measurements (only detectable APs);
/// `commands` are coordinator orders issued in earlier superframes.
inline UdStepResult ud_step(UdState state, std::int64_t k, std::span<const RssReading> readings,
                            std::span<const SwitchCommand> commands, const UdContext& ctx) {
  UdStepResult out;
  detail::advance_timers(state, k);

  for (const auto& cmd : commands) {
    if (cmd.device_id != state.device_id) continue;
    if (state.phase != Phase::Associated || state.serving_ap == cmd.to_ap) continue;
    state.phase = Phase::Switching;
    state.target_ap = cmd.to_ap;
    state.timer_s = predictive_delay(ctx.delays);
    state.scan_end_k = cmd.issued_k;
    state.switch_end_k = cmd.issued_k + std::max<std::int64_t>(1, superframes_for(state.timer_s, ctx.superframe));
    detail::advance_timers(state, k);
    break;
  }

  if (state.phase == Phase::Associated && !(detail::reading_for(readings, *state.serving_ap) > 0)) {
    state.phase = Phase::Disconnected;
    state.serving_ap.reset();
  }
  if (state.phase == Phase::Disconnected) {
    if (auto best = detail::strongest(readings)) {
      state.phase = Phase::Associated;
      state.serving_ap = *best;
    }
  }

  if (ctx.scheme == Scheme::Predictive) {
    out.report = RssReport{state.device_id, k, std::vector<RssReading>(readings.begin(), readings.end()),
                           state.serving_ap};
  } else if (state.phase == Phase::Associated &&
             detail::reading_for(readings, *state.serving_ap) < state.rss_threshold_a) {
    const auto best = detail::strongest(readings);
    if (best && *best != *state.serving_ap) {
      const DelayParams& d = ctx.delays;
      state.phase = Phase::Scanning;
      state.target_ap = *best;
      state.timer_s = traditional_delay(d);
      state.scan_end_k = k + superframes_for(d.t_scan + d.t_decision, ctx.superframe);
      state.switch_end_k = state.scan_end_k + superframes_for(traditional_disruption(d), ctx.superframe);
      out.request = SwitchRequest{state.device_id, k, *state.serving_ap, *best};
      detail::advance_timers(state, k);
    }
  }
  out.state = std::move(state);
  return out;
}

enum class PredictionMethod { Alpha, LeastSquares };

struct PredictionConfig {
  PredictionMethod method = PredictionMethod::Alpha;
  double alpha = 0.5;
  std::size_t history = 3;  // for LeastSquares
  std::size_t path_capacity = 16;
  double database_cell_m = 0.5;
  bool least_squares_localization = false;

  friend bool operator==(const PredictionConfig&, const PredictionConfig&) = default;
};

/// A predictive switch the coordinator just ordered, with the position it
/// was decided for.
struct IssuedSwitch {
  SwitchCommand command;
  HandoverEvent event;  // outcome not yet known
  Vec2 predicted_xy;
  std::int64_t arrival_k = 0;
};

struct CoordinatorStepResult {
  std::vector<SwitchCommand> commands;
  std::vector<IssuedSwitch> switches;
  std::vector<std::pair<int, Vec2>> estimates;    // device -> current estimate
  std::vector<std::pair<int, Vec2>> predictions;  // device -> position expected next superframe
};

/// Central controller of the predictive scheme: localizes each device from its
/// report, extends its path, predicts where it will be at the next report and
/// orders a switch when the database names a different AP there.
class Coordinator {
public:
  Coordinator(const Scenario& scenario, BestApDatabase db, PredictionConfig prediction, SuperframeConfig superframe,
              DelayParams delays)
      : scenario_(&scenario),
        db_(std::move(db)),
        prediction_(prediction),
        superframe_(superframe),
        delays_(delays) {}

  CoordinatorStepResult step(std::int64_t k, std::span<const RssReport> reports) {
    CoordinatorStepResult out;
    const LocalizationOptions loc{prediction_.least_squares_localization};
    for (const auto& report : reports) {
      DeviceView& view = view_for(report.device_id);
      std::optional<Vec2> estimate;
      try {
        estimate = estimate_position(report, *scenario_, loc).xy;
      } catch (const LocalizationError&) {
        continue;  // keep the last known estimate, no decision this superframe
      }
      view.path.append(k, *estimate);
      out.estimates.emplace_back(report.device_id, *estimate);

      const Vec2 target_xy = scenario_->room.clamp(predicted_or_current(view.path, *estimate));
      if (view.path.size() >= required_history()) out.predictions.emplace_back(report.device_id, target_xy);

      if (!report.serving_ap || k < view.busy_until_k) continue;
      const ApId best = lookup_best_ap(db_, target_xy);
      if (best < 0 || best == *report.serving_ap) continue;

      IssuedSwitch sw;
      sw.command = SwitchCommand{report.device_id, k, *report.serving_ap, best};
      sw.event = HandoverEvent{report.device_id, k, Scheme::Predictive, *report.serving_ap, best,
                               predictive_delay(delays_), predictive_disruption(delays_, superframe_),
                               Outcome::Success};
      sw.predicted_xy = target_xy;
      sw.arrival_k = k + std::max<std::int64_t>(1, superframes_for(predictive_delay(delays_), superframe_));
      view.busy_until_k = sw.arrival_k;
      out.commands.push_back(sw.command);
      out.switches.push_back(sw);
    }
    return out;
  }

  /// Outcome feedback for a switch decided at `predicted_xy`.
  void record_outcome(Vec2 predicted_xy, Outcome outcome) {
    record_switch_outcome(db_, predicted_xy, outcome != Outcome::Failure, *scenario_);
  }

  const BestApDatabase& database() const { return db_; }

  const PathReport* path(int device_id) const {
    for (const auto& v : views_)
      if (v.path.device_id() == device_id) return &v.path;
    return nullptr;
  }

private:
  struct DeviceView {
    PathReport path;
    std::int64_t busy_until_k = 0;
  };

  std::size_t required_history() const {
    return prediction_.method == PredictionMethod::Alpha ? 2 : std::max<std::size_t>(2, prediction_.history);
  }

  Vec2 predicted_or_current(const PathReport& path, Vec2 current) const {
    if (path.size() < required_history()) return current;
    return prediction_.method == PredictionMethod::Alpha ? predict_next(path, prediction_.alpha)
                                                         : predict_next_k(path, prediction_.history);
  }

  DeviceView& view_for(int device_id) {
    for (auto& v : views_)
      if (v.path.device_id() == device_id) return v;
    views_.push_back(DeviceView{PathReport(device_id, std::max(prediction_.path_capacity, prediction_.history)), 0});
    return views_.back();
  }

  const Scenario* scenario_;
  BestApDatabase db_;
  PredictionConfig prediction_;
  SuperframeConfig superframe_;
  DelayParams delays_;
  std::vector<DeviceView> views_;
};

}  // namespace vlcsim
