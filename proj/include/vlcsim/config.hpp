#pragma once

// Plain-text INI configuration.
//
//   [room]        width_m depth_m height_m receiver_plane_separation_m
//   [channel]     lambertian_order | led_semi_angle_deg, filter_gain,
//                 concentrator_gain, fov_semi_angle_deg | fov_semi_angle_rad,
//                 responsivity_a_per_w,
//                 noise_sigma_a, reflectance, wall_patch_area_m2,
//                 reflections_enabled
//   [apN]         x y tx_power_w luminous_intensity_cd data_rate_bps
//                 coverage_radius_m                      (id = N, one per AP)
//   [superframe]  duration_s active_fraction
//   [delays]      t_scan t_decision t_discon t_linksw t_linkasso t_sync
//                 first_stage = max | shared
//   [protocol]    rss_threshold_a threshold_distance_m
//   [prediction]  method = alpha | least_squares, alpha, history,
//                 path_capacity, database_cell_m, least_squares_localization
//   [simulation]  duration_s seed scheme = traditional | predictive | both
//   [deviceN]     model = waypoints | line | random, speed_mps,
//                 waypoints = "x y; x y; ..."           (id = N)
//   [map]         step_m
//
// Missing sections fall back to the built-in defaults; with no [apN]
// sections the default 3x3 layout is used. Unknown keys are rejected.

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "vlcsim/engine.hpp"

namespace vlcsim {

/// Everything one config file drives.
struct AppConfig {
  SimConfig sim;
  double map_step_m = 0.25;

  friend bool operator==(const AppConfig&, const AppConfig&) = default;
};

/// Example walk used by the shipped default configuration.
inline AppConfig default_app_config() {
  AppConfig c;
  c.sim.devices.push_back({1, Trajectory::line({-5, 0}, {5, 0}, 1.0)});
  c.sim.devices.push_back({2, Trajectory{MobilityModel::RandomWaypoint, 1.0, {}}});
  c.sim.duration_s = 60.0;
  return c;
}

namespace config_detail {

namespace pt = boost::property_tree;

inline const std::map<std::string, std::set<std::string>>& fixed_sections() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"room", {"width_m", "depth_m", "height_m", "receiver_plane_separation_m"}},
      {"channel",
       {"lambertian_order", "led_semi_angle_deg", "filter_gain", "concentrator_gain", "fov_semi_angle_deg",
        "fov_semi_angle_rad",
        "responsivity_a_per_w", "noise_sigma_a", "reflectance", "wall_patch_area_m2", "reflections_enabled"}},
      {"superframe", {"duration_s", "active_fraction"}},
      {"delays", {"t_scan", "t_decision", "t_discon", "t_linksw", "t_linkasso", "t_sync", "first_stage"}},
      {"protocol", {"rss_threshold_a", "threshold_distance_m"}},
      {"prediction",
       {"method", "alpha", "history", "path_capacity", "database_cell_m", "least_squares_localization"}},
      {"simulation", {"duration_s", "seed", "scheme"}},
      {"map", {"step_m"}},
  };
  return s;
}

inline const std::set<std::string>& ap_keys() {
  static const std::set<std::string> k = {"x", "y", "tx_power_w", "luminous_intensity_cd", "data_rate_bps",
                                          "coverage_radius_m"};
  return k;
}

inline const std::set<std::string>& device_keys() {
  static const std::set<std::string> k = {"model", "speed_mps", "waypoints"};
  return k;
}

inline bool numbered(const std::string& section, const std::string& prefix, int& id) {
  static const std::regex re("([a-z]+)([0-9]+)");
  std::smatch m;
  if (!std::regex_match(section, m, re) || m[1] != prefix) return false;
  id = std::stoi(m[2]);
  return true;
}

inline void check_key(const std::string& section, const std::string& key) {
  int id = 0;
  const auto& fixed = fixed_sections();
  if (auto it = fixed.find(section); it != fixed.end()) {
    if (!it->second.count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
    return;
  }
  if (numbered(section, "ap", id)) {
    if (!ap_keys().count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
    return;
  }
  if (numbered(section, "device", id)) {
    if (!device_keys().count(key)) throw ConfigError("unknown config key '" + section + "." + key + "'");
    return;
  }
  throw ConfigError("unknown config section '" + section + "'");
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + v + "'");
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    if (v.find('-') != std::string::npos) throw std::invalid_argument(v);
    const auto n = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return n;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an unsigned integer: '" + v + "'");
  }
}

inline std::vector<Vec2> to_waypoints(const std::string& key, const std::string& v) {
  std::vector<Vec2> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    std::istringstream p(item);
    Vec2 w;
    std::string rest;
    if (!(p >> w.x >> w.y) || (p >> rest)) throw ConfigError("config key '" + key + "': bad waypoint '" + item + "'");
    out.push_back(w);
  }
  return out;
}

/// Reads a section into typed fields via callbacks; key names already checked.
class SectionReader {
public:
  SectionReader(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  template <typename T, typename Parse>
  void read(const std::string& key, T& field, Parse&& parse) const {
    if (!tree_) return;
    if (auto v = tree_->get_optional<std::string>(key)) field = parse(name_ + "." + key, trim(*v));
  }
  void number(const std::string& key, double& field) const { read(key, field, to_double); }
  bool has(const std::string& key) const { return tree_ && tree_->get_optional<std::string>(key).has_value(); }
  std::string text(const std::string& key) const { return trim(tree_->get<std::string>(key)); }

  static std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\"");
    const auto e = s.find_last_not_of(" \t\"");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }

private:
  const pt::ptree* tree_;
  std::string name_;
};

inline const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

inline AppConfig from_tree(const pt::ptree& root) {
  for (const auto& [section, body] : root) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config key '" + section + "' outside any section");
    for (const auto& [key, _] : body) check_key(section, key);
  }

  AppConfig app = default_app_config();
  SimConfig& sim = app.sim;
  Scenario& sc = sim.scenario;

  SectionReader room(child(root, "room"), "room");
  room.number("width_m", sc.room.width_m);
  room.number("depth_m", sc.room.depth_m);
  room.number("height_m", sc.room.height_m);
  room.number("receiver_plane_separation_m", sc.room.receiver_plane_separation_m);

  SectionReader ch(child(root, "channel"), "channel");
  if (ch.has("lambertian_order") && ch.has("led_semi_angle_deg"))
    throw ConfigError("give either channel.lambertian_order or channel.led_semi_angle_deg, not both");
  if (ch.has("fov_semi_angle_deg") && ch.has("fov_semi_angle_rad"))
    throw ConfigError("give either channel.fov_semi_angle_deg or channel.fov_semi_angle_rad, not both");
  ch.number("lambertian_order", sc.channel.lambertian_order);
  ch.read("led_semi_angle_deg", sc.channel.lambertian_order, [](const std::string& k, const std::string& v) {
    return lambertian_order_from_semi_angle(deg_to_rad(to_double(k, v)));
  });
  ch.number("filter_gain", sc.channel.filter_gain);
  ch.number("concentrator_gain", sc.channel.concentrator_gain);
  ch.read("fov_semi_angle_deg", sc.channel.fov_semi_angle_rad,
          [](const std::string& k, const std::string& v) { return deg_to_rad(to_double(k, v)); });
  ch.number("fov_semi_angle_rad", sc.channel.fov_semi_angle_rad);
  ch.number("responsivity_a_per_w", sc.channel.responsivity_a_per_w);
  ch.number("noise_sigma_a", sc.channel.noise_sigma_a);
  ch.number("reflectance", sc.channel.reflectance);
  ch.number("wall_patch_area_m2", sc.channel.wall_patch_area_m2);
  ch.read("reflections_enabled", sc.channel.reflections_enabled, to_bool);

  std::map<int, AccessPoint> aps;
  std::map<int, DeviceConfig> devices;
  for (const auto& [section, body] : root) {
    int id = 0;
    if (numbered(section, "ap", id)) {
      AccessPoint ap{id, {}, defaults::kTxPowerW, defaults::kLuminousIntensityCd, defaults::kDataRateBps,
                     defaults::kCoverageRadiusM};
      SectionReader r(&body, section);
      if (!r.has("x") || !r.has("y")) throw ConfigError("section '" + section + "' needs x and y");
      r.number("x", ap.pos.x);
      r.number("y", ap.pos.y);
      r.number("tx_power_w", ap.tx_power_w);
      r.number("luminous_intensity_cd", ap.luminous_intensity_cd);
      r.number("data_rate_bps", ap.data_rate_bps);
      r.number("coverage_radius_m", ap.coverage_radius_m);
      aps[id] = ap;
    } else if (numbered(section, "device", id)) {
      DeviceConfig dev{id, {}};
      SectionReader r(&body, section);
      const std::string model = r.has("model") ? r.text("model") : "waypoints";
      if (model == "waypoints") dev.trajectory.model = MobilityModel::FixedWaypoints;
      else if (model == "line") dev.trajectory.model = MobilityModel::ConstantVelocityLine;
      else if (model == "random") dev.trajectory.model = MobilityModel::RandomWaypoint;
      else throw ConfigError("config key '" + section + ".model': unknown model '" + model + "'");
      r.number("speed_mps", dev.trajectory.speed_mps);
      r.read("waypoints", dev.trajectory.waypoints, to_waypoints);
      devices[id] = dev;
    }
  }
  if (!aps.empty()) {
    sc.aps.clear();
    for (auto& [_, ap] : aps) sc.aps.push_back(ap);
  }
  if (!devices.empty()) {
    sim.devices.clear();
    for (auto& [_, d] : devices) sim.devices.push_back(d);
  }

  SectionReader sf(child(root, "superframe"), "superframe");
  sf.number("duration_s", sim.superframe.duration_s);
  sf.number("active_fraction", sim.superframe.active_fraction);

  SectionReader dl(child(root, "delays"), "delays");
  dl.number("t_scan", sim.delays.t_scan);
  dl.number("t_decision", sim.delays.t_decision);
  dl.number("t_discon", sim.delays.t_discon);
  dl.number("t_linksw", sim.delays.t_linksw);
  dl.number("t_linkasso", sim.delays.t_linkasso);
  dl.number("t_sync", sim.delays.t_sync);
  dl.read("first_stage", sim.delays.first_stage, [](const std::string& k, const std::string& v) {
    if (v == "max") return FirstStage::Max;
    if (v == "shared") return FirstStage::Shared;
    throw ConfigError("config key '" + k + "': expected max or shared");
  });

  SectionReader pr(child(root, "protocol"), "protocol");
  pr.read("rss_threshold_a", sim.rss_threshold_a,
          [](const std::string& k, const std::string& v) { return std::optional<double>(to_double(k, v)); });
  pr.number("threshold_distance_m", sim.threshold_distance_m);

  SectionReader pd(child(root, "prediction"), "prediction");
  pd.read("method", sim.prediction.method, [](const std::string& k, const std::string& v) {
    if (v == "alpha") return PredictionMethod::Alpha;
    if (v == "least_squares") return PredictionMethod::LeastSquares;
    throw ConfigError("config key '" + k + "': expected alpha or least_squares");
  });
  pd.number("alpha", sim.prediction.alpha);
  pd.read("history", sim.prediction.history,
          [](const std::string& k, const std::string& v) { return static_cast<std::size_t>(to_u64(k, v)); });
  pd.read("path_capacity", sim.prediction.path_capacity,
          [](const std::string& k, const std::string& v) { return static_cast<std::size_t>(to_u64(k, v)); });
  pd.number("database_cell_m", sim.prediction.database_cell_m);
  pd.read("least_squares_localization", sim.prediction.least_squares_localization, to_bool);

  SectionReader si(child(root, "simulation"), "simulation");
  si.number("duration_s", sim.duration_s);
  si.read("seed", sim.seed, to_u64);
  si.read("scheme", sim.scheme, [](const std::string& k, const std::string& v) {
    if (v == "traditional") return SchemeSelection::Traditional;
    if (v == "predictive") return SchemeSelection::Predictive;
    if (v == "both") return SchemeSelection::Both;
    throw ConfigError("config key '" + k + "': expected traditional, predictive or both");
  });

  SectionReader mp(child(root, "map"), "map");
  mp.number("step_m", app.map_step_m);
  if (!(app.map_step_m > 0)) throw ConfigError("map.step_m must be positive");
  return app;
}

inline void apply_overrides(pt::ptree& root, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    const auto dot = o.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw ConfigError("override must look like section.key=value: '" + o + "'");
    const std::string section = o.substr(0, dot);
    const std::string key = o.substr(dot + 1, eq - dot - 1);
    check_key(section, key);
    // An override replaces whichever alternative spelling the file used.
    static const std::map<std::string, std::string> alternative = {
        {"lambertian_order", "led_semi_angle_deg"}, {"led_semi_angle_deg", "lambertian_order"},
        {"fov_semi_angle_deg", "fov_semi_angle_rad"}, {"fov_semi_angle_rad", "fov_semi_angle_deg"}};
    if (auto alt = alternative.find(key); section == "channel" && alt != alternative.end())
      if (auto it = root.find(section); it != root.not_found()) it->second.erase(alt->second);
    root.put(pt::ptree::path_type(section + "/" + key, '/'), o.substr(eq + 1));
  }
}

}  // namespace config_detail

/// Parses INI text and applies `section.key=value` overrides.
inline AppConfig parse_config(const std::string& ini_text, const std::vector<std::string>& overrides = {}) {
  namespace pt = boost::property_tree;
  pt::ptree root;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  config_detail::apply_overrides(root, overrides);
  AppConfig app = config_detail::from_tree(root);
  validate(app.sim);
  return app;
}

inline AppConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides);
}

inline std::string format_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Canonical INI rendering; parse_config(to_ini(c)) == c.
inline std::string to_ini(const AppConfig& app) {
  const SimConfig& c = app.sim;
  const Scenario& s = c.scenario;
  std::ostringstream os;
  auto kv = [&](const char* key, const std::string& v) { os << key << " = " << v << '\n'; };
  auto num = [&](const char* key, double v) { kv(key, format_exact(v)); };

  os << "[room]\n";
  num("width_m", s.room.width_m);
  num("depth_m", s.room.depth_m);
  num("height_m", s.room.height_m);
  num("receiver_plane_separation_m", s.room.receiver_plane_separation_m);
  os << "\n[channel]\n";
  num("lambertian_order", s.channel.lambertian_order);
  num("filter_gain", s.channel.filter_gain);
  num("concentrator_gain", s.channel.concentrator_gain);
  num("fov_semi_angle_rad", s.channel.fov_semi_angle_rad);
  num("responsivity_a_per_w", s.channel.responsivity_a_per_w);
  num("noise_sigma_a", s.channel.noise_sigma_a);
  num("reflectance", s.channel.reflectance);
  num("wall_patch_area_m2", s.channel.wall_patch_area_m2);
  kv("reflections_enabled", s.channel.reflections_enabled ? "true" : "false");
  for (const auto& ap : s.aps) {
    os << "\n[ap" << ap.id << "]\n";
    num("x", ap.pos.x);
    num("y", ap.pos.y);
    num("tx_power_w", ap.tx_power_w);
    num("luminous_intensity_cd", ap.luminous_intensity_cd);
    num("data_rate_bps", ap.data_rate_bps);
    num("coverage_radius_m", ap.coverage_radius_m);
  }
  os << "\n[superframe]\n";
  num("duration_s", c.superframe.duration_s);
  num("active_fraction", c.superframe.active_fraction);
  os << "\n[delays]\n";
  num("t_scan", c.delays.t_scan);
  num("t_decision", c.delays.t_decision);
  num("t_discon", c.delays.t_discon);
  num("t_linksw", c.delays.t_linksw);
  num("t_linkasso", c.delays.t_linkasso);
  num("t_sync", c.delays.t_sync);
  kv("first_stage", c.delays.first_stage == FirstStage::Max ? "max" : "shared");
  os << "\n[protocol]\n";
  if (c.rss_threshold_a) num("rss_threshold_a", *c.rss_threshold_a);
  num("threshold_distance_m", c.threshold_distance_m);
  os << "\n[prediction]\n";
  kv("method", c.prediction.method == PredictionMethod::Alpha ? "alpha" : "least_squares");
  num("alpha", c.prediction.alpha);
  kv("history", std::to_string(c.prediction.history));
  kv("path_capacity", std::to_string(c.prediction.path_capacity));
  num("database_cell_m", c.prediction.database_cell_m);
  kv("least_squares_localization", c.prediction.least_squares_localization ? "true" : "false");
  os << "\n[simulation]\n";
  num("duration_s", c.duration_s);
  kv("seed", std::to_string(c.seed));
  kv("scheme", c.scheme == SchemeSelection::Traditional ? "traditional"
               : c.scheme == SchemeSelection::Predictive ? "predictive"
                                                         : "both");
  for (const auto& d : c.devices) {
    os << "\n[device" << d.id << "]\n";
    const auto& t = d.trajectory;
    kv("model", t.model == MobilityModel::FixedWaypoints         ? "waypoints"
                : t.model == MobilityModel::ConstantVelocityLine ? "line"
                                                                 : "random");
    num("speed_mps", t.speed_mps);
    if (!t.waypoints.empty()) {
      std::string w;
      for (std::size_t i = 0; i < t.waypoints.size(); ++i) {
        if (i) w += "; ";
        w += format_exact(t.waypoints[i].x) + " " + format_exact(t.waypoints[i].y);
      }
      kv("waypoints", w);
    }
  }
  os << "\n[map]\n";
  num("step_m", app.map_step_m);
  return os.str();
}

/// FNV-1a over the canonical rendering.
inline std::uint64_t config_hash(const AppConfig& app) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : to_ini(app)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string config_hash_hex(const AppConfig& app) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(config_hash(app)));
  return buf;
}

}  // namespace vlcsim
