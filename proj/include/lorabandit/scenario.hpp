#pragma once

#include <string>
#include <vector>

#include "lorabandit/errors.hpp"

namespace lorabandit {

// Action-space presets. Fixed values follow the EU 868 defaults: SF 7..12,
// sub-channels 868.1/868.3/868.5 MHz, TP 8/11/14 dBm.
//   1: SF free;            one SC (868.1 MHz), TP 14 dBm         -> K = 6
//   2: SF and SC free;     TP 14 dBm                             -> K = 18
//   3: SF and TP free;     one SC (868.1 MHz)                    -> K = 18
//   4: SF, SC and TP free                                        -> K = 54
//   5: Scenario 4 swept over packet rates 1/hour, 1/day, 1/week
struct ScenarioPreset {
  int id;
  std::vector<int> sfs;
  std::vector<int> channels_hz;
  std::vector<int> tps_dbm;
  // Rate variants (packets/hour) the scenario is studied under. Scenarios
  // 1-4 use one fixed rate; scenario 5 sweeps three.
  std::vector<double> rate_variants_per_hour;
};

inline ScenarioPreset scenario_preset(int id) {
  const std::vector<int> all_sfs{7, 8, 9, 10, 11, 12};
  const std::vector<int> one_channel{868100000};
  const std::vector<int> all_channels{868100000, 868300000, 868500000};
  const std::vector<int> one_tp{14};
  const std::vector<int> all_tps{8, 11, 14};
  switch (id) {
    case 1: return {1, all_sfs, one_channel, one_tp, {15.0}};
    case 2: return {2, all_sfs, all_channels, one_tp, {15.0}};
    case 3: return {3, all_sfs, one_channel, all_tps, {15.0}};
    case 4: return {4, all_sfs, all_channels, all_tps, {15.0}};
    case 5:
      return {5, all_sfs, all_channels, all_tps,
              {1.0, 1.0 / 24.0, 1.0 / 168.0}};
  }
  throw ConfigError("scenario must be in [1,5], got " + std::to_string(id));
}

}  // namespace lorabandit
