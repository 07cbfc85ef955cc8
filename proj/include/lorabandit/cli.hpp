#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lorabandit/config.hpp"
#include "lorabandit/experiment.hpp"
#include "lorabandit/version.hpp"

namespace lorabandit {
namespace cli {

// "A..B" inclusive range or comma-separated list.
inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::size_t range = text.find("..");
  if (range != std::string::npos) {
    std::uint64_t a = detail::parse_unsigned("--seeds", text.substr(0, range));
    std::uint64_t b =
        detail::parse_unsigned("--seeds", text.substr(range + 2));
    if (a > b) throw ConfigError("--seeds: range start exceeds end");
    if (b - a >= 10000) throw ConfigError("--seeds: range too large");
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
  } else {
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ','))
      seeds.push_back(detail::parse_unsigned("--seeds", detail::trim(item)));
  }
  if (seeds.empty()) throw ConfigError("--seeds: empty list");
  return seeds;
}

// Rate token: a number (packets/hour) or a number suffixed ph / pd / pw for
// packets per hour, day or week. "1pd" = one packet per day.
inline SweepRate parse_rate_token(const std::string& token) {
  std::string t = detail::trim(token);
  double scale = 1.0;
  std::string num = t;
  if (t.size() > 2) {
    std::string suffix = t.substr(t.size() - 2);
    if (suffix == "ph" || suffix == "pd" || suffix == "pw") {
      num = t.substr(0, t.size() - 2);
      scale = suffix == "ph" ? 1.0 : suffix == "pd" ? 1.0 / 24.0
                                                    : 1.0 / 168.0;
    }
  }
  double per_hour = detail::parse_number("--rate", num) * scale;
  if (!(per_hour > 0.0)) throw ConfigError("--rate: must be positive");
  std::string tag;
  for (char c : t)
    tag += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' ||
            c == '-' || c == '_')
               ? c
               : '_';
  return {tag, per_hour};
}

inline std::vector<SweepRate> parse_rate_list(const std::string& text) {
  std::vector<SweepRate> rates;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    rates.push_back(parse_rate_token(item));
  if (rates.empty()) throw ConfigError("--rates: empty list");
  return rates;
}

inline std::vector<PolicyKind> parse_policy_list(const std::string& text) {
  std::vector<PolicyKind> policies;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    policies.push_back(parse_policy(detail::trim(item)));
  if (policies.empty()) throw ConfigError("--policies: empty list");
  return policies;
}

namespace detail_cli {

// One option set shared by every subcommand; flags override config-file
// values, which override built-in defaults.
struct Options {
  std::string config_path;
  int scenario = 0;
  std::string policy;
  std::uint64_t seed = 0;
  int devices = 0;
  double radius = 0.0;
  std::string rate;
  double horizon_hours = 0.0;
  double duty_cycle = 0.0;
  int payload = 0;
  std::string arrivals;
  double bucket_ms = 0.0;
  std::vector<int> sfs, channels, tps;
  int explore_sweeps = 0;
  int reset_base = 0;
  std::string gamma;
  double formula_e = 0.0;
  std::string out;
  bool per_device = false;
  bool event_log = false;

  CLI::Option* config_opt = nullptr;
  CLI::Option* scenario_opt = nullptr;
  CLI::Option* policy_opt = nullptr;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* devices_opt = nullptr;
  CLI::Option* radius_opt = nullptr;
  CLI::Option* rate_opt = nullptr;
  CLI::Option* horizon_opt = nullptr;
  CLI::Option* duty_opt = nullptr;
  CLI::Option* payload_opt = nullptr;
  CLI::Option* arrivals_opt = nullptr;
  CLI::Option* bucket_opt = nullptr;
  CLI::Option* sfs_opt = nullptr;
  CLI::Option* channels_opt = nullptr;
  CLI::Option* tps_opt = nullptr;
  CLI::Option* sweeps_opt = nullptr;
  CLI::Option* reset_opt = nullptr;
  CLI::Option* gamma_opt = nullptr;
  CLI::Option* formula_e_opt = nullptr;
  CLI::Option* event_log_opt = nullptr;
};

inline void add_config_options(CLI::App& cmd, Options& o) {
  o.config_opt =
      cmd.add_option("--config", o.config_path, "Config file (key = value)");
  o.scenario_opt =
      cmd.add_option("--scenario", o.scenario, "Scenario preset 1..5");
  o.policy_opt = cmd.add_option("--policy", o.policy,
                                "Uplink policy: mixmab, loramab or legacy");
  o.seed_opt = cmd.add_option("--seed", o.seed, "Master RNG seed");
  o.devices_opt =
      cmd.add_option("--devices", o.devices, "Number of end devices");
  o.radius_opt = cmd.add_option("--radius", o.radius, "Cell radius in m");
  o.rate_opt = cmd.add_option(
      "--rate", o.rate, "Packet rate: number per hour, or suffixed ph/pd/pw");
  o.horizon_opt = cmd.add_option("--horizon-hours", o.horizon_hours,
                                 "Simulated duration in hours");
  o.duty_opt =
      cmd.add_option("--duty-cycle", o.duty_cycle, "Duty cycle in (0,1]");
  o.payload_opt =
      cmd.add_option("--payload", o.payload, "PHY payload size in bytes");
  o.arrivals_opt = cmd.add_option("--arrivals", o.arrivals,
                                  "Arrival process: exponential or periodic");
  o.bucket_opt = cmd.add_option("--bucket-ms", o.bucket_ms,
                                "Metrics bucket width (0 = horizon/100)");
  o.sfs_opt = cmd.add_option("--sfs", o.sfs,
                             "Spreading factors (overrides preset)")
                  ->delimiter(',');
  o.channels_opt = cmd.add_option("--channels", o.channels,
                                  "Channel frequencies in Hz")
                       ->delimiter(',');
  o.tps_opt =
      cmd.add_option("--tps", o.tps, "Transmission powers in dBm")
          ->delimiter(',');
  o.sweeps_opt = cmd.add_option("--explore-sweeps", o.explore_sweeps,
                                "Bandit round-robin sweeps (l_exp)");
  o.reset_opt = cmd.add_option("--reset-base", o.reset_base,
                               "Bandit reset threshold base (l_ee)");
  o.gamma_opt =
      cmd.add_option("--gamma", o.gamma, "Bandit gamma in [0,1], or auto");
  o.formula_e_opt = cmd.add_option("--formula-e", o.formula_e,
                                   "Euler constant used in the gamma formula");
  cmd.add_option("--out", o.out, "Output directory for artifacts");
}

inline SimConfig resolve(const Options& o) {
  ConfigDraft draft;
  if (o.config_opt->count()) draft = parse_config_file(o.config_path);
  SimConfig& c = draft.cfg;
  if (o.scenario_opt->count()) c.scenario = o.scenario;
  if (o.policy_opt->count()) c.policy = parse_policy(o.policy);
  if (o.seed_opt->count()) c.seed = o.seed;
  if (o.devices_opt->count()) c.devices = o.devices;
  if (o.radius_opt->count()) c.radius_m = o.radius;
  if (o.rate_opt->count()) {
    c.rate_per_hour = parse_rate_token(o.rate).per_hour;
    draft.rate_set = true;
  }
  if (o.horizon_opt->count()) c.horizon_ms = o.horizon_hours * 3600.0e3;
  if (o.duty_opt->count()) c.duty_cycle = o.duty_cycle;
  if (o.payload_opt->count()) c.payload_bytes = o.payload;
  if (o.arrivals_opt->count()) c.arrivals = parse_arrivals(o.arrivals);
  if (o.bucket_opt->count()) c.bucket_ms = o.bucket_ms;
  if (o.sfs_opt->count()) c.sfs = o.sfs;
  if (o.channels_opt->count()) c.channels_hz = o.channels;
  if (o.tps_opt->count()) c.tps_dbm = o.tps;
  if (o.sweeps_opt->count()) c.bandit.explore_sweeps = o.explore_sweeps;
  if (o.reset_opt->count()) c.bandit.reset_base = o.reset_base;
  if (o.gamma_opt->count())
    c.bandit.gamma_override =
        o.gamma == "auto" ? -1.0 : detail::parse_number("--gamma", o.gamma);
  if (o.formula_e_opt->count()) c.bandit.formula_e = o.formula_e;
  if (o.event_log_opt && o.event_log_opt->count()) c.record_events = true;
  return resolve_config(std::move(draft));
}

}  // namespace detail_cli

// Entry point, testable without a process boundary. Returns the process
// exit code: 0 success, 1 config/usage error, 2 runtime failure.
inline int cli_main(const std::vector<std::string>& args,
                    std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"LoRaWAN uplink simulator with multi-armed-bandit parameter "
               "selection"};
  app.set_version_flag("--version", std::string("lorabandit ") +
                                        version_string);
  app.require_subcommand(1);

  detail_cli::Options run_opts, compare_opts, sweep_opts, validate_opts;
  std::string policies_text = "mixmab,loramab,legacy";
  std::string seeds_text;
  std::string rates_text;

  CLI::App* run = app.add_subcommand("run", "Run one simulation");
  detail_cli::add_config_options(*run, run_opts);
  run->add_flag("--per-device-csv", run_opts.per_device,
                "Also write per-device metrics");
  run_opts.event_log_opt =
      run->add_flag("--event-log", run_opts.event_log,
                    "Also write the structured event log");

  CLI::App* compare = app.add_subcommand(
      "compare", "Run a policy comparison over a set of seeds");
  detail_cli::add_config_options(*compare, compare_opts);
  compare->add_option("--policies", policies_text,
                      "Comma-separated policies to compare");
  CLI::Option* compare_seeds_opt = compare->add_option(
      "--seeds", seeds_text, "Seed list (a,b,c) or range (a..b)");

  CLI::App* sweep =
      app.add_subcommand("sweep", "Run a packet-rate sweep");
  detail_cli::add_config_options(*sweep, sweep_opts);
  CLI::Option* rates_opt = sweep->add_option(
      "--rates", rates_text,
      "Comma-separated rates (number, or suffixed ph/pd/pw)");
  CLI::Option* sweep_seeds_opt = sweep->add_option(
      "--seeds", seeds_text, "Seed list (a,b,c) or range (a..b)");

  CLI::App* validate = app.add_subcommand(
      "validate", "Resolve and print the config without running");
  detail_cli::add_config_options(*validate, validate_opts);

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("lorabandit");
  for (const std::string& a : args) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << e.what() << "\n";
    return 1;
  }

  try {
    if (run->parsed()) {
      SimConfig cfg = detail_cli::resolve(run_opts);
      std::filesystem::path dir =
          run_opts.out.empty()
              ? output_root() / ("run_s" + std::to_string(cfg.scenario) +
                                 "_" + to_string(cfg.policy) + "_seed" +
                                 std::to_string(cfg.seed))
              : std::filesystem::path(run_opts.out);
      RunSummary s = run_to_directory(cfg, dir, run_opts.per_device);
      out << summary_text(cfg, s);
      out << "artifacts = " << dir.string() << "\n";
      return 0;
    }
    if (compare->parsed()) {
      SimConfig cfg = detail_cli::resolve(compare_opts);
      std::vector<PolicyKind> policies = parse_policy_list(policies_text);
      std::vector<std::uint64_t> seeds =
          compare_seeds_opt->count() ? parse_seed_list(seeds_text)
                                     : std::vector<std::uint64_t>{cfg.seed};
      std::filesystem::path dir =
          compare_opts.out.empty()
              ? output_root() / ("compare_s" + std::to_string(cfg.scenario))
              : std::filesystem::path(compare_opts.out);
      run_comparison(cfg, policies, seeds, dir);
      std::ifstream table(dir / "summary.csv");
      out << table.rdbuf();
      out << "artifacts = " << dir.string() << "\n";
      return 0;
    }
    if (sweep->parsed()) {
      SimConfig cfg = detail_cli::resolve(sweep_opts);
      std::vector<SweepRate> rates;
      if (rates_opt->count()) {
        rates = parse_rate_list(rates_text);
      } else {
        // Default to the scenario's studied rates (three for scenario 5).
        for (double r :
             scenario_preset(cfg.scenario).rate_variants_per_hour) {
          if (r == 1.0) rates.push_back({"1ph", r});
          else if (r == 1.0 / 24.0) rates.push_back({"1pd", r});
          else if (r == 1.0 / 168.0) rates.push_back({"1pw", r});
          else rates.push_back({format_csv_double(r) + "ph", r});
        }
      }
      std::vector<std::uint64_t> seeds =
          sweep_seeds_opt->count() ? parse_seed_list(seeds_text)
                                   : std::vector<std::uint64_t>{cfg.seed};
      std::filesystem::path dir =
          sweep_opts.out.empty()
              ? output_root() / ("sweep_s" + std::to_string(cfg.scenario))
              : std::filesystem::path(sweep_opts.out);
      run_sweep(cfg, rates, seeds, dir);
      std::ifstream table(dir / "summary.csv");
      out << table.rdbuf();
      out << "artifacts = " << dir.string() << "\n";
      return 0;
    }
    // validate
    SimConfig cfg = detail_cli::resolve(validate_opts);
    out << serialize_config(cfg);
    return 0;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cli
}  // namespace lorabandit
