#pragma once

// CSV / text outputs. Every file opens with a "# config_hash=<hex>" line so
// results can be matched to the configuration that produced them.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "vlcsim/config.hpp"

namespace vlcsim {

inline void write_hash_line(std::ostream& os, const std::string& hash) { os << "# config_hash=" << hash << '\n'; }

inline void write_events_csv(std::ostream& os, const std::vector<HandoverEvent>& events) {
  os << "device_id,superframe_index,scheme,from_ap,to_ap,delay_s,disruption_s,outcome\n";
  for (const auto& e : events)
    os << e.device_id << ',' << e.superframe_index << ',' << to_string(e.scheme) << ',' << e.from_ap << ','
       << e.to_ap << ',' << format_g9(e.delay_s) << ',' << format_g9(e.disruption_s) << ',' << to_string(e.outcome)
       << '\n';
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
  os << "k,device,truth_x,truth_y,est_x,est_y,serving_ap,phase\n";
  for (const auto& r : rows) {
    os << r.k << ',' << r.device_id << ',' << format_g9(r.truth.x) << ',' << format_g9(r.truth.y) << ',';
    if (r.estimate) os << format_g9(r.estimate->x) << ',' << format_g9(r.estimate->y);
    else os << ',';
    os << ',';
    if (r.serving_ap) os << *r.serving_ap;
    os << ',' << to_string(r.phase) << '\n';
  }
}

/// Samples each materialized trajectory at every superframe start.
inline void write_trajectory_csv(std::ostream& os, const SimResult& result, const SimConfig& config) {
  os << "device,t,x,y\n";
  for (std::size_t i = 0; i < result.trajectories.size(); ++i)
    for (std::int64_t k = 0; k < result.superframes; ++k) {
      const double t = static_cast<double>(k) * config.superframe.duration_s;
      const Vec2 p = config.scenario.room.clamp(position_at(result.trajectories[i], t));
      os << config.devices[i].id << ',' << format_g9(t) << ',' << format_g9(p.x) << ',' << format_g9(p.y) << '\n';
    }
}

inline void write_metrics_text(std::ostream& os, const SchemeMetrics& m) {
  os << "scheme: " << to_string(m.scheme) << '\n'
     << "  handovers: " << m.handovers << " (unnecessary " << m.unnecessary << ", failed " << m.failures << ")\n"
     << "  mean delay: " << format_g9(m.mean_delay_s * 1e3) << " ms, max " << format_g9(m.max_delay_s * 1e3)
     << " ms\n"
     << "  total disruption: " << format_g9(m.total_disruption_s) << " s\n";
  if (m.localization_samples)
    os << "  localization rms: " << format_g9(m.localization_rms_m) << " m over " << m.localization_samples
       << " fixes\n";
  if (m.prediction_samples)
    os << "  prediction rms: " << format_g9(m.prediction_rms_m) << " m over " << m.prediction_samples << " steps\n";
  for (const auto& d : m.devices) {
    os << "  device " << d.device_id << ": gain " << format_g9(d.total_gain_bits / 1e6) << " Mbit, connected "
       << format_g9(to_seconds(d.time.connected_ns)) << " s, disrupted " << format_g9(to_seconds(d.time.disruption_ns))
       << " s, disconnected " << format_g9(to_seconds(d.time.disconnected_ns)) << " s\n";
  }
}

inline void write_metrics_csv(std::ostream& os, const std::vector<SchemeRun>& runs) {
  os << "scheme,device,ap,cell_gain_bits,connected_s,disruption_s,disconnected_s\n";
  for (const auto& r : runs)
    for (const auto& d : r.metrics.devices)
      for (const auto& [ap, bits] : d.cell_gain_bits)
        os << to_string(r.metrics.scheme) << ',' << d.device_id << ',' << ap << ',' << format_g9(bits) << ','
           << format_g9(to_seconds(d.time.connected_ns)) << ',' << format_g9(to_seconds(d.time.disruption_ns)) << ','
           << format_g9(to_seconds(d.time.disconnected_ns)) << '\n';
}

inline void write_comparison_csv(std::ostream& os, const Comparison& c) {
  auto total_gain = [](const SchemeMetrics& m) {
    double g = 0;
    for (const auto& d : m.devices) g += d.total_gain_bits;
    return g;
  };
  auto row = [&](const char* name, double t, double p) {
    os << name << ',' << format_g9(t) << ',' << format_g9(p) << '\n';
  };
  os << "metric,traditional,predictive\n";
  row("handovers", static_cast<double>(c.traditional.handovers), static_cast<double>(c.predictive.handovers));
  row("unnecessary", static_cast<double>(c.traditional.unnecessary), static_cast<double>(c.predictive.unnecessary));
  row("failures", static_cast<double>(c.traditional.failures), static_cast<double>(c.predictive.failures));
  row("nominal_delay_s", c.nominal_traditional_delay_s, c.nominal_predictive_delay_s);
  row("mean_delay_s", c.traditional.mean_delay_s, c.predictive.mean_delay_s);
  row("total_disruption_s", c.traditional.total_disruption_s, c.predictive.total_disruption_s);
  row("total_gain_bits", total_gain(c.traditional), total_gain(c.predictive));
  os << "delay_ratio," << format_g9(c.delay_ratio()) << ',' << format_g9(c.delay_ratio()) << '\n';
}

/// Fraction of grid nodes with lux inside [lo, hi] plus the extremes.
struct IlluminanceCompliance {
  double min_lx = 0.0;
  double max_lx = 0.0;
  double in_band_fraction = 0.0;
  double band_lo_lx = 300.0;
  double band_hi_lx = 1500.0;
};

inline IlluminanceCompliance illuminance_compliance(const GridMap& lux, double lo = 300.0, double hi = 1500.0) {
  IlluminanceCompliance c;
  c.band_lo_lx = lo;
  c.band_hi_lx = hi;
  if (lux.values.empty()) return c;
  const auto [mn, mx] = std::minmax_element(lux.values.begin(), lux.values.end());
  c.min_lx = *mn;
  c.max_lx = *mx;
  const auto inside = std::count_if(lux.values.begin(), lux.values.end(), [&](double v) { return v >= lo && v <= hi; });
  c.in_band_fraction = static_cast<double>(inside) / static_cast<double>(lux.values.size());
  return c;
}

inline void write_compliance_text(std::ostream& os, const IlluminanceCompliance& c) {
  os << "min_lx=" << format_g9(c.min_lx) << '\n'
     << "max_lx=" << format_g9(c.max_lx) << '\n'
     << "max_min_ratio=" << format_g9(c.min_lx > 0 ? c.max_lx / c.min_lx : INFINITY) << '\n'
     << "band_lx=" << format_g9(c.band_lo_lx) << ".." << format_g9(c.band_hi_lx) << '\n'
     << "in_band_fraction=" << format_g9(c.in_band_fraction) << '\n';
}

/// Opens `dir/name` for writing and emits the hash line.
inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name, const std::string& hash) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw Error("cannot write " + (dir / name).string());
  write_hash_line(os, hash);
  return os;
}

}  // namespace vlcsim
