// vlcsim: maps, database, simulation and scheme comparison from one INI file.
//
//   vlcsim map      --config C --out D [--kind power|illuminance] [--step M]
//   vlcsim database --config C --out D [--step M]
//   vlcsim simulate --config C --out D [--seed N] [--scheme S] [--alpha A]
//   vlcsim compare  --config C --out D [--seed N] [--alpha A]
//   vlcsim validate --config C
//
// Exit codes: 0 ok, 1 simulation error, 2 config or usage error.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "vlcsim/vlcsim.hpp"

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<double> step;
  std::optional<std::string> scheme;
  std::optional<double> alpha;
  std::string kind = "power";
};

std::vector<std::string> overrides(const Options& o, const std::string& step_key) {
  std::vector<std::string> all = o.sets;
  auto exact = [](double v) { return vlcsim::format_exact(v); };
  if (o.seed) all.push_back("simulation.seed=" + std::to_string(*o.seed));
  if (o.scheme) all.push_back("simulation.scheme=" + *o.scheme);
  if (o.alpha) all.push_back("prediction.alpha=" + exact(*o.alpha));
  if (o.step && !step_key.empty()) all.push_back(step_key + "=" + exact(*o.step));
  return all;
}

vlcsim::AppConfig load(const Options& o, const std::string& step_key = "") {
  if (o.config.empty()) return vlcsim::parse_config("", overrides(o, step_key));
  return vlcsim::load_config(o.config, overrides(o, step_key));
}

int cmd_map(const Options& o) {
  const auto app = load(o, "map.step_m");
  const std::string hash = vlcsim::config_hash_hex(app);
  const auto& sc = app.sim.scenario;
  if (o.kind == "power") {
    auto os = vlcsim::open_output(o.out, "power_map.csv", hash);
    vlcsim::write_grid_csv(os, vlcsim::power_map(sc, app.map_step_m), sc.room);
  } else {
    const auto lux = vlcsim::illuminance_map(sc, app.map_step_m);
    {
      auto os = vlcsim::open_output(o.out, "illuminance_map.csv", hash);
      vlcsim::write_grid_csv(os, lux, sc.room);
    }
    const auto c = vlcsim::illuminance_compliance(lux);
    auto os = vlcsim::open_output(o.out, "illuminance_compliance.txt", hash);
    vlcsim::write_compliance_text(os, c);
    vlcsim::write_compliance_text(std::cout, c);
  }
  return 0;
}

int cmd_database(const Options& o) {
  const auto app = load(o, "prediction.database_cell_m");
  const auto& sc = app.sim.scenario;
  const auto db = vlcsim::build_database(sc, app.sim.prediction.database_cell_m);
  auto os = vlcsim::open_output(o.out, "database.csv", vlcsim::config_hash_hex(app));
  vlcsim::write_grid_csv(os, db.grid, sc.room);
  return 0;
}

int cmd_simulate(const Options& o) {
  const auto app = load(o);
  const std::string hash = vlcsim::config_hash_hex(app);
  const auto result = vlcsim::run(app.sim);
  {
    auto os = vlcsim::open_output(o.out, "config.ini", hash);
    os << vlcsim::to_ini(app);
  }
  std::vector<vlcsim::HandoverEvent> events;
  for (const auto& r : result.runs) {
    events.insert(events.end(), r.events.begin(), r.events.end());
    auto os = vlcsim::open_output(o.out, "trace_" + std::string(vlcsim::to_string(r.metrics.scheme)) + ".csv", hash);
    vlcsim::write_trace_csv(os, r.trace);
  }
  {
    auto os = vlcsim::open_output(o.out, "events.csv", hash);
    vlcsim::write_events_csv(os, events);
  }
  {
    auto os = vlcsim::open_output(o.out, "trajectory.csv", hash);
    vlcsim::write_trajectory_csv(os, result, app.sim);
  }
  {
    auto os = vlcsim::open_output(o.out, "metrics.csv", hash);
    vlcsim::write_metrics_csv(os, result.runs);
  }
  std::ostringstream text;
  for (const auto& r : result.runs) vlcsim::write_metrics_text(text, r.metrics);
  auto os = vlcsim::open_output(o.out, "metrics.txt", hash);
  os << text.str();
  std::cout << text.str();
  return 0;
}

int cmd_compare(const Options& o) {
  const auto app = load(o);
  const std::string hash = vlcsim::config_hash_hex(app);
  const auto c = vlcsim::compare(app.sim);
  {
    auto os = vlcsim::open_output(o.out, "comparison.csv", hash);
    vlcsim::write_comparison_csv(os, c);
  }
  std::ostringstream text;
  vlcsim::write_metrics_text(text, c.traditional);
  vlcsim::write_metrics_text(text, c.predictive);
  text << "delay ratio (predictive/traditional): " << vlcsim::format_g9(c.delay_ratio()) << '\n';
  auto os = vlcsim::open_output(o.out, "metrics.txt", hash);
  os << text.str();
  std::cout << text.str();
  return 0;
}

int cmd_validate(const Options& o) {
  const auto app = load(o);
  std::cout << "ok config_hash=" << vlcsim::config_hash_hex(app) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor VLC handover simulator"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub, bool out = true) {
    sub->add_option("--config", o.config, "INI configuration (built-in defaults when omitted)")
        ->check(CLI::ExistingFile);
    if (out) sub->add_option("--out", o.out, "output directory");
    sub->add_option("--set", o.sets, "section.key=value override (repeatable)");
    sub->add_option("--seed", o.seed, "simulation.seed override");
  };

  auto* map = app.add_subcommand("map", "received-power or illuminance grid");
  common(map);
  map->add_option("--kind", o.kind, "power | illuminance")->check(CLI::IsMember({"power", "illuminance"}));
  map->add_option("--step", o.step, "grid step in metres")->check(CLI::PositiveNumber);

  auto* database = app.add_subcommand("database", "best-AP database grid");
  common(database);
  database->add_option("--step", o.step, "database cell size in metres")->check(CLI::PositiveNumber);

  auto* simulate = app.add_subcommand("simulate", "run the configured scheme(s)");
  common(simulate);
  simulate->add_option("--scheme", o.scheme, "traditional | predictive | both")
      ->check(CLI::IsMember({"traditional", "predictive", "both"}));
  simulate->add_option("--alpha", o.alpha, "prediction factor");

  auto* cmp = app.add_subcommand("compare", "both schemes on the same walk and noise");
  common(cmp);
  cmp->add_option("--alpha", o.alpha, "prediction factor");

  auto* validate = app.add_subcommand("validate", "check a configuration");
  common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*map) return cmd_map(o);
    if (*database) return cmd_database(o);
    if (*simulate) return cmd_simulate(o);
    if (*cmp) return cmd_compare(o);
    if (*validate) return cmd_validate(o);
  } catch (const vlcsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
