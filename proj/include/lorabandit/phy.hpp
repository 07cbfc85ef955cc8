#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "lorabandit/action_space.hpp"
#include "lorabandit/errors.hpp"
#include "lorabandit/rng.hpp"

namespace lorabandit {

struct RadioConfig {
  int bandwidth_hz = 125000;
  int coding_rate = 1;       // CR value in 4/(4+CR); 1 -> 4/5
  int preamble_symbols = 8;  // programmed preamble length n_preamble
  bool explicit_header = true;
  bool crc_on = true;

  friend bool operator==(const RadioConfig&, const RadioConfig&) = default;
};

inline void validate(const RadioConfig& r) {
  if (r.bandwidth_hz != 125000 && r.bandwidth_hz != 250000 &&
      r.bandwidth_hz != 500000)
    throw ConfigError("bandwidth_hz must be 125000, 250000 or 500000");
  if (r.coding_rate < 1 || r.coding_rate > 4)
    throw ConfigError("coding_rate must be in [1,4]");
  if (r.preamble_symbols < 1)
    throw ConfigError("preamble_symbols must be >= 1");
}

inline double symbol_time_ms(int sf, const RadioConfig& radio) {
  if (sf < 7 || sf > 12)
    throw ConfigError("spreading factor out of range [7,12]: " +
                      std::to_string(sf));
  return std::pow(2.0, sf) / radio.bandwidth_hz * 1000.0;
}

// SX127x datasheet rule: low data rate optimization is mandated once the
// symbol time reaches 16 ms (SF11/SF12 at 125 kHz).
inline bool low_data_rate_optimize(int sf, const RadioConfig& radio) {
  return symbol_time_ms(sf, radio) >= 16.0;
}

// Uplink time on air in ms for a payload_bytes-byte PHY payload.
inline double time_on_air_ms(int sf, int payload_bytes,
                             const RadioConfig& radio) {
  if (payload_bytes < 0) throw ConfigError("payload_bytes must be >= 0");
  double t_sym = symbol_time_ms(sf, radio);
  double t_preamble = (radio.preamble_symbols + 4.25) * t_sym;
  int de = low_data_rate_optimize(sf, radio) ? 1 : 0;
  int ih = radio.explicit_header ? 0 : 1;
  int crc = radio.crc_on ? 1 : 0;
  double num = 8.0 * payload_bytes - 4.0 * sf + 28.0 + 16.0 * crc - 20.0 * ih;
  double den = 4.0 * (sf - 2.0 * de);
  double payload_symbols =
      8.0 + std::max(std::ceil(num / den) * (radio.coding_rate + 4.0), 0.0);
  return t_preamble + payload_symbols * t_sym;
}

// Log-distance path loss anchored at a reference measurement.
struct PathLossModel {
  double reference_m = 40.0;
  double loss_at_reference_db = 127.41;
  double exponent = 2.08;
  double shadowing_sigma_db = 0.0;  // 0 disables the lognormal term

  friend bool operator==(const PathLossModel&, const PathLossModel&) = default;
};

inline void validate(const PathLossModel& m) {
  if (!(m.reference_m > 0.0)) throw ConfigError("reference_m must be > 0");
  if (!(m.exponent > 0.0)) throw ConfigError("path loss exponent must be > 0");
  if (m.shadowing_sigma_db < 0.0)
    throw ConfigError("shadowing_sigma_db must be >= 0");
}

// Deterministic part of the loss; distances inside the reference distance
// clamp to the reference loss.
inline double path_loss_db(double distance_m, const PathLossModel& model) {
  if (distance_m < 0.0) throw ConfigError("distance must be >= 0");
  double d = std::max(distance_m, model.reference_m);
  return model.loss_at_reference_db +
         10.0 * model.exponent * std::log10(d / model.reference_m);
}

// Loss with a fresh lognormal shadowing draw from `shadow`.
inline double path_loss_db(double distance_m, const PathLossModel& model,
                           Rng& shadow) {
  double loss = path_loss_db(distance_m, model);
  if (model.shadowing_sigma_db > 0.0)
    loss += shadow.normal(model.shadowing_sigma_db);
  return loss;
}

inline double received_power_dbm(double tp_dbm, double loss_db) {
  return tp_dbm - loss_db;
}

// Radiated energy of one packet in millijoules: 10^(tp/10) mW for the
// duration of the airtime. Radio overheads (PA inefficiency, rx windows)
// are out of scope; comparisons across policies use the same convention.
inline double packet_energy_mj(double tp_dbm, double airtime_ms) {
  if (airtime_ms < 0.0) throw ConfigError("airtime must be >= 0");
  return std::pow(10.0, tp_dbm / 10.0) * airtime_ms / 1000.0;
}

// Gateway-side demodulation thresholds.
struct LinkTables {
  // SX1301 sensitivity for SF7..SF12 at 125 kHz, dBm.
  std::array<double, 6> sensitivity_dbm{-123.0, -126.0, -129.0,
                                        -132.0, -134.5, -137.0};
  // Same-SF capture: the stronger frame survives if it leads by this margin.
  double co_sf_capture_db = 6.0;
  // Inter-SF rejection matrix [desired SF - 7][interferer SF - 7]: a frame
  // survives a different-SF interferer while at most this many dB below it
  // (negative = tolerates being under the interferer). Uniform -8 by default.
  std::array<std::array<double, 6>, 6> inter_sf_threshold_db =
      uniform_inter_sf(-8.0);

  static std::array<std::array<double, 6>, 6> uniform_inter_sf(double db) {
    std::array<std::array<double, 6>, 6> m{};
    for (auto& row : m) row.fill(db);
    return m;
  }

  double sensitivity(int sf) const {
    return sensitivity_dbm[static_cast<std::size_t>(check_sf(sf) - 7)];
  }
  friend bool operator==(const LinkTables&, const LinkTables&) = default;

  double inter_sf(int sf_desired, int sf_interferer) const {
    return inter_sf_threshold_db[static_cast<std::size_t>(
        check_sf(sf_desired) - 7)][static_cast<std::size_t>(
        check_sf(sf_interferer) - 7)];
  }

 private:
  static int check_sf(int sf) {
    if (sf < 7 || sf > 12)
      throw ConfigError("spreading factor out of range [7,12]: " +
                        std::to_string(sf));
    return sf;
  }
};

inline void validate(const LinkTables& t) {
  if (!(t.co_sf_capture_db > 0.0))
    throw ConfigError("co_sf_capture_db must be > 0");
  for (std::size_t i = 1; i < t.sensitivity_dbm.size(); ++i)
    if (!(t.sensitivity_dbm[i] < t.sensitivity_dbm[i - 1]))
      throw ConfigError("sensitivity must strictly decrease with SF");
}

// One frame in the air, as the gateway sees it.
struct Transmission {
  int device_id;
  ActionConfig action;
  double start_ms;
  double airtime_ms;
  double rx_power_dbm;
  int payload_bytes = 1;

  double end_ms() const { return start_ms + airtime_ms; }
};

// Positive-length intersection in time; touching endpoints do not overlap.
inline bool overlaps(const Transmission& a, const Transmission& b) {
  return a.start_ms < b.end_ms() && b.start_ms < a.end_ms();
}

// Whether `t` is decoded given everything else in the air. `others` may
// contain t itself (matched by device and start time); such entries are
// skipped. A frame must clear the sensitivity floor and then survive every
// overlapping frame on its channel: same-SF interferers by the capture
// margin, different-SF interferers by the inter-SF threshold.
inline bool decodable(const Transmission& t,
                      std::span<const Transmission> others,
                      const LinkTables& link) {
  if (t.rx_power_dbm < link.sensitivity(t.action.sf)) return false;
  for (const Transmission& o : others) {
    if (o.device_id == t.device_id && o.start_ms == t.start_ms &&
        o.action.channel_hz == t.action.channel_hz)
      continue;
    if (o.action.channel_hz != t.action.channel_hz) continue;
    if (!overlaps(t, o)) continue;
    if (o.action.sf == t.action.sf) {
      if (t.rx_power_dbm < o.rx_power_dbm + link.co_sf_capture_db)
        return false;
    } else {
      if (t.rx_power_dbm <
          o.rx_power_dbm + link.inter_sf(t.action.sf, o.action.sf))
        return false;
    }
  }
  return true;
}

// Device ids of the transmissions in `group` the gateway decodes, ascending.
inline std::vector<int> resolve_reception(std::span<const Transmission> group,
                                          const LinkTables& link) {
  std::vector<int> decoded;
  for (const Transmission& t : group)
    if (decodable(t, group, link)) decoded.push_back(t.device_id);
  std::sort(decoded.begin(), decoded.end());
  return decoded;
}

}  // namespace lorabandit
