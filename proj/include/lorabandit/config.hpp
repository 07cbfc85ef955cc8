#pragma once

#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "lorabandit/errors.hpp"
#include "lorabandit/metrics.hpp"
#include "lorabandit/scenario.hpp"
#include "lorabandit/sim.hpp"
#include "lorabandit/version.hpp"

namespace lorabandit {

// Parsed config plus which defaults the input actually overrode, so scenario
// presets can fill in only what the user left unset.
struct ConfigDraft {
  SimConfig cfg;
  bool rate_set = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double parse_number(const std::string& where, const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  double x = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw ConfigError(where + ": not a number: '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& where,
                               const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  long long x = std::strtoll(begin, &end, 10);
  if (end == begin || *end != '\0')
    throw ConfigError(where + ": not an integer: '" + v + "'");
  return x;
}

inline std::uint64_t parse_unsigned(const std::string& where,
                                    const std::string& v) {
  const char* begin = v.c_str();
  char* end = nullptr;
  unsigned long long x = std::strtoull(begin, &end, 10);
  if (end == begin || *end != '\0' || v.find('-') != std::string::npos)
    throw ConfigError(where + ": not an unsigned integer: '" + v + "'");
  return x;
}

inline bool parse_flag(const std::string& where, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError(where + ": expected true or false, got '" + v + "'");
}

inline std::vector<int> parse_int_list(const std::string& where,
                                       const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_integer(where, trim(item))));
  if (out.empty()) throw ConfigError(where + ": empty list");
  return out;
}

inline std::string join(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

inline void apply_key(ConfigDraft& draft, const std::string& section,
                      const std::string& key, const std::string& value) {
  SimConfig& c = draft.cfg;
  const std::string where = "[" + section + "] " + key;
  auto num = [&] { return parse_number(where, value); };
  auto integer = [&] { return parse_integer(where, value); };
  if (section == "meta") {
    if (key == "format") {
      if (integer() != 1)
        throw ConfigError(where + ": unsupported config format version");
      return;
    }
    if (key == "build") return;  // informational
  } else if (section == "sim") {
    if (key == "devices") { c.devices = static_cast<int>(integer()); return; }
    if (key == "radius_m") { c.radius_m = num(); return; }
    if (key == "scenario") { c.scenario = static_cast<int>(integer()); return; }
    if (key == "policy") { c.policy = parse_policy(value); return; }
    if (key == "rate_per_hour") {
      c.rate_per_hour = num();
      draft.rate_set = true;
      return;
    }
    if (key == "payload_bytes") {
      c.payload_bytes = static_cast<int>(integer());
      return;
    }
    if (key == "horizon_hours") { c.horizon_ms = num() * 3600.0e3; return; }
    if (key == "duty_cycle") { c.duty_cycle = num(); return; }
    if (key == "arrivals") { c.arrivals = parse_arrivals(value); return; }
    if (key == "seed") { c.seed = parse_unsigned(where, value); return; }
    if (key == "bucket_ms") { c.bucket_ms = num(); return; }
    if (key == "record_events") {
      c.record_events = parse_flag(where, value);
      return;
    }
  } else if (section == "actions") {
    if (key == "sfs") { c.sfs = parse_int_list(where, value); return; }
    if (key == "channels_hz") {
      c.channels_hz = parse_int_list(where, value);
      return;
    }
    if (key == "tps_dbm") { c.tps_dbm = parse_int_list(where, value); return; }
  } else if (section == "bandit") {
    if (key == "explore_sweeps") {
      c.bandit.explore_sweeps = static_cast<int>(integer());
      return;
    }
    if (key == "reset_base") {
      c.bandit.reset_base = static_cast<int>(integer());
      return;
    }
    if (key == "gamma") {
      c.bandit.gamma_override = value == "auto" ? -1.0 : num();
      if (value != "auto" && c.bandit.gamma_override < 0.0)
        throw ConfigError(where + ": gamma must be 'auto' or in [0,1]");
      return;
    }
    if (key == "formula_e") { c.bandit.formula_e = num(); return; }
  } else if (section == "radio") {
    if (key == "bandwidth_hz") {
      c.radio.bandwidth_hz = static_cast<int>(integer());
      return;
    }
    if (key == "coding_rate") {
      c.radio.coding_rate = static_cast<int>(integer());
      return;
    }
    if (key == "preamble_symbols") {
      c.radio.preamble_symbols = static_cast<int>(integer());
      return;
    }
    if (key == "explicit_header") {
      c.radio.explicit_header = parse_flag(where, value);
      return;
    }
    if (key == "crc_on") { c.radio.crc_on = parse_flag(where, value); return; }
  } else if (section == "path_loss") {
    if (key == "reference_m") { c.path_loss.reference_m = num(); return; }
    if (key == "loss_at_reference_db") {
      c.path_loss.loss_at_reference_db = num();
      return;
    }
    if (key == "exponent") { c.path_loss.exponent = num(); return; }
    if (key == "shadowing_sigma_db") {
      c.path_loss.shadowing_sigma_db = num();
      return;
    }
  } else if (section == "link") {
    if (key == "capture_db") { c.link.co_sf_capture_db = num(); return; }
    if (key == "inter_sf_db") {
      c.link.inter_sf_threshold_db = LinkTables::uniform_inter_sf(num());
      return;
    }
    for (int sf = 7; sf <= 12; ++sf)
      if (key == "sensitivity_sf" + std::to_string(sf)) {
        c.link.sensitivity_dbm[static_cast<std::size_t>(sf - 7)] = num();
        return;
      }
  } else {
    throw ConfigError("unknown config section [" + section + "]");
  }
  throw ConfigError("unknown key '" + key + "' in [" + section + "]");
}

}  // namespace detail

// Parses the flat `key = value` config text (sections in brackets, # or ;
// line comments). Unknown sections or keys are errors.
inline ConfigDraft parse_config_text(const std::string& text) {
  ConfigDraft draft;
  std::stringstream ss(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) +
                          ": malformed section header: " + t);
      section = detail::trim(t.substr(1, t.size() - 2));
      continue;
    }
    std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key = value, got: " + t);
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) +
                        ": key outside any section");
    detail::apply_key(draft, section, detail::trim(t.substr(0, eq)),
                      detail::trim(t.substr(eq + 1)));
  }
  return draft;
}

inline ConfigDraft parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// Fills everything the input left to defaults: scenario preset action sets,
// the scenario's default packet rate, and the bucket width. Validates.
inline SimConfig resolve_config(ConfigDraft draft) {
  SimConfig& c = draft.cfg;
  ScenarioPreset preset = scenario_preset(c.scenario);
  if (!draft.rate_set) c.rate_per_hour = preset.rate_variants_per_hour.front();
  if (c.sfs.empty()) c.sfs = preset.sfs;
  if (c.channels_hz.empty()) c.channels_hz = preset.channels_hz;
  if (c.tps_dbm.empty()) c.tps_dbm = preset.tps_dbm;
  c.bucket_ms = c.resolved_bucket_ms();
  c.validate();
  return c;
}

// Serializes a resolved config as a manifest that parses back to the same
// SimConfig. Doubles use full round-trip precision.
inline std::string serialize_config(const SimConfig& c) {
  std::ostringstream out;
  auto d = [](double v) { return format_exact_double(v); };
  out << "[meta]\n";
  out << "format = 1\n";
  out << "build = lorabandit " << version_string << "\n";
  out << "\n[sim]\n";
  out << "devices = " << c.devices << "\n";
  out << "radius_m = " << d(c.radius_m) << "\n";
  out << "scenario = " << c.scenario << "\n";
  out << "policy = " << to_string(c.policy) << "\n";
  out << "rate_per_hour = " << d(c.rate_per_hour) << "\n";
  out << "payload_bytes = " << c.payload_bytes << "\n";
  out << "horizon_hours = " << d(c.horizon_ms / 3600.0e3) << "\n";
  out << "duty_cycle = " << d(c.duty_cycle) << "\n";
  out << "arrivals = " << to_string(c.arrivals) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "bucket_ms = " << d(c.bucket_ms) << "\n";
  out << "record_events = " << (c.record_events ? "true" : "false") << "\n";
  out << "\n[actions]\n";
  out << "sfs = " << detail::join(c.sfs) << "\n";
  out << "channels_hz = " << detail::join(c.channels_hz) << "\n";
  out << "tps_dbm = " << detail::join(c.tps_dbm) << "\n";
  out << "\n[bandit]\n";
  out << "explore_sweeps = " << c.bandit.explore_sweeps << "\n";
  out << "reset_base = " << c.bandit.reset_base << "\n";
  out << "gamma = "
      << (c.bandit.gamma_override < 0.0 ? std::string("auto")
                                        : d(c.bandit.gamma_override))
      << "\n";
  out << "formula_e = " << d(c.bandit.formula_e) << "\n";
  out << "\n[radio]\n";
  out << "bandwidth_hz = " << c.radio.bandwidth_hz << "\n";
  out << "coding_rate = " << c.radio.coding_rate << "\n";
  out << "preamble_symbols = " << c.radio.preamble_symbols << "\n";
  out << "explicit_header = " << (c.radio.explicit_header ? "true" : "false")
      << "\n";
  out << "crc_on = " << (c.radio.crc_on ? "true" : "false") << "\n";
  out << "\n[path_loss]\n";
  out << "reference_m = " << d(c.path_loss.reference_m) << "\n";
  out << "loss_at_reference_db = " << d(c.path_loss.loss_at_reference_db)
      << "\n";
  out << "exponent = " << d(c.path_loss.exponent) << "\n";
  out << "shadowing_sigma_db = " << d(c.path_loss.shadowing_sigma_db) << "\n";
  out << "\n[link]\n";
  for (int sf = 7; sf <= 12; ++sf)
    out << "sensitivity_sf" << sf << " = "
        << d(c.link.sensitivity_dbm[static_cast<std::size_t>(sf - 7)]) << "\n";
  out << "capture_db = " << d(c.link.co_sf_capture_db) << "\n";
  // The inter-SF matrix is uniform in every supported configuration surface;
  // serialize the shared value.
  out << "inter_sf_db = " << d(c.link.inter_sf_threshold_db[0][0]) << "\n";
  return out.str();
}

}  // namespace lorabandit
