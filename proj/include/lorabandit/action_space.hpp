#pragma once

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "lorabandit/errors.hpp"

namespace lorabandit {

// One transmission-parameter combination an end device can pick per packet.
struct ActionConfig {
  int sf;          // spreading factor, 7..12
  int channel_hz;  // carrier frequency
  int tp_dbm;      // transmission power, -4..20 dBm (EU 868 device range)

  friend bool operator==(const ActionConfig&, const ActionConfig&) = default;
};

// Immutable, index-addressable set of actions. The index is the arm id the
// bandit policies operate on.
class ActionSpace {
 public:
  ActionSpace() = default;
  explicit ActionSpace(std::vector<ActionConfig> actions)
      : actions_(std::move(actions)) {
    if (actions_.empty()) throw ConfigError("action space must be non-empty");
  }

  int size() const { return static_cast<int>(actions_.size()); }
  const ActionConfig& operator[](int k) const {
    return actions_.at(static_cast<std::size_t>(k));
  }
  auto begin() const { return actions_.begin(); }
  auto end() const { return actions_.end(); }

 private:
  std::vector<ActionConfig> actions_;
};

namespace detail {

inline std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace detail

// Cartesian product of the allowed values, enumerated SF-major (then channel,
// then power). The enumeration order is what round-robin exploration walks,
// so it is part of the reproducibility contract.
inline ActionSpace make_action_space(std::vector<int> sfs,
                                     std::vector<int> channels_hz,
                                     std::vector<int> tps_dbm) {
  sfs = detail::sorted_unique(std::move(sfs));
  channels_hz = detail::sorted_unique(std::move(channels_hz));
  tps_dbm = detail::sorted_unique(std::move(tps_dbm));
  if (sfs.empty() || channels_hz.empty() || tps_dbm.empty())
    throw ConfigError("action space requires at least one SF, channel and TP");
  for (int sf : sfs)
    if (sf < 7 || sf > 12)
      throw ConfigError("spreading factor out of range [7,12]: " +
                        std::to_string(sf));
  for (int ch : channels_hz)
    if (ch <= 0)
      throw ConfigError("channel frequency must be positive: " +
                        std::to_string(ch));
  for (int tp : tps_dbm)
    if (tp < -4 || tp > 20)
      throw ConfigError("transmission power out of range [-4,20] dBm: " +
                        std::to_string(tp));

  std::vector<ActionConfig> actions;
  actions.reserve(sfs.size() * channels_hz.size() * tps_dbm.size());
  for (int sf : sfs)
    for (int ch : channels_hz)
      for (int tp : tps_dbm) actions.push_back({sf, ch, tp});
  return ActionSpace(std::move(actions));
}

}  // namespace lorabandit
