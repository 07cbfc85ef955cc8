#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "lorabandit/action_space.hpp"
#include "lorabandit/errors.hpp"
#include "lorabandit/metrics.hpp"
#include "lorabandit/phy.hpp"
#include "lorabandit/policy.hpp"
#include "lorabandit/rng.hpp"
#include "lorabandit/scenario.hpp"

namespace lorabandit {

// Simulation event kinds. The enumerator value is the tie-break rank for
// events at the same instant: a transmission must end (and free the channel
// history) before a new one starts, arrivals queue behind both, and ACK
// processing runs last so a device's next service sees the updated policy.
enum class EventKind { TxEnd = 0, TxStart = 1, PacketArrival = 2, AckDelivery = 3 };

inline const char* event_name(EventKind k) {
  switch (k) {
    case EventKind::TxEnd: return "tx_end";
    case EventKind::TxStart: return "tx_start";
    case EventKind::PacketArrival: return "arrival";
    case EventKind::AckDelivery: return "ack";
  }
  throw SimError("unknown event kind");
}

// One line of the structured event log. action is -1 for arrivals; outcome
// is 1/0 (decoded/lost) for tx_end and ack, -1 otherwise.
struct EventRecord {
  double time_ms;
  EventKind kind;
  int device;
  int action;
  int outcome;
};

inline void write_event_csv(std::ostream& out,
                            std::span<const EventRecord> events) {
  out << "time_ms,device,event,action,outcome\n";
  for (const EventRecord& e : events) {
    out << format_csv_double(e.time_ms) << ',' << e.device << ','
        << event_name(e.kind) << ',';
    if (e.action >= 0) out << e.action;
    out << ',';
    if (e.outcome >= 0) out << e.outcome;
    out << '\n';
  }
}

enum class ArrivalProcess { Exponential, Periodic };

inline const char* to_string(ArrivalProcess a) {
  return a == ArrivalProcess::Exponential ? "exponential" : "periodic";
}

inline ArrivalProcess parse_arrivals(const std::string& name) {
  if (name == "exponential") return ArrivalProcess::Exponential;
  if (name == "periodic") return ArrivalProcess::Periodic;
  throw ConfigError("unknown arrivals '" + name +
                    "' (expected exponential or periodic)");
}

struct BanditConfig {
  int explore_sweeps = 5;
  int reset_base = 100;
  double gamma_override = -1.0;  // < 0 selects the horizon formula
  double formula_e = 2.71;       // Euler constant as used in the gamma formula

  friend bool operator==(const BanditConfig&, const BanditConfig&) = default;
};

struct SimConfig {
  int devices = 30;
  double radius_m = 1000.0;
  int scenario = 1;
  PolicyKind policy = PolicyKind::MixMab;
  double rate_per_hour = 15.0;
  int payload_bytes = 50;
  double horizon_ms = 2000.0 * 3600.0e3;
  double duty_cycle = 0.01;
  ArrivalProcess arrivals = ArrivalProcess::Exponential;
  std::uint64_t seed = 1;
  double bucket_ms = 0.0;  // 0 resolves to horizon_ms / 100
  bool record_events = false;
  std::vector<int> sfs;          // empty -> scenario preset
  std::vector<int> channels_hz;  // empty -> scenario preset
  std::vector<int> tps_dbm;      // empty -> scenario preset
  BanditConfig bandit;
  RadioConfig radio;
  PathLossModel path_loss;
  LinkTables link;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;

  double resolved_bucket_ms() const {
    return bucket_ms > 0.0 ? bucket_ms : horizon_ms / 100.0;
  }

  int num_buckets() const {
    return static_cast<int>(std::ceil(horizon_ms / resolved_bucket_ms()));
  }

  ActionSpace action_space() const {
    auto preset = scenario_preset(scenario);
    return make_action_space(sfs.empty() ? preset.sfs : sfs,
                             channels_hz.empty() ? preset.channels_hz
                                                 : channels_hz,
                             tps_dbm.empty() ? preset.tps_dbm : tps_dbm);
  }

  // Expected per-device packet count, the T of the gamma formula.
  long long horizon_iterations() const {
    double t = rate_per_hour * horizon_ms / 3600.0e3;
    return std::max(1ll, static_cast<long long>(std::ceil(t)));
  }

  double resolved_gamma(int num_actions) const {
    if (bandit.gamma_override >= 0.0) return bandit.gamma_override;
    return exp3_learning_rate(num_actions, horizon_iterations(),
                              bandit.formula_e);
  }

  BanditParams bandit_params(int num_actions) const {
    BanditParams p;
    p.gamma = resolved_gamma(num_actions);
    p.explore_sweeps = bandit.explore_sweeps;
    p.reset_base = bandit.reset_base;
    return p;
  }

  void validate() const {
    if (devices < 1) throw ConfigError("devices must be >= 1");
    if (!(radius_m >= 0.0)) throw ConfigError("radius_m must be >= 0");
    if (!(rate_per_hour > 0.0))
      throw ConfigError("rate_per_hour must be > 0");
    if (payload_bytes < 1 || payload_bytes > 255)
      throw ConfigError("payload_bytes must be in [1,255]");
    if (!(horizon_ms > 0.0)) throw ConfigError("horizon_ms must be > 0");
    if (!(duty_cycle > 0.0 && duty_cycle <= 1.0))
      throw ConfigError("duty_cycle must be in (0,1]");
    if (bucket_ms < 0.0) throw ConfigError("bucket_ms must be >= 0");
    if (bandit.explore_sweeps < 0)
      throw ConfigError("explore_sweeps must be >= 0");
    if (bandit.reset_base < 1) throw ConfigError("reset_base must be >= 1");
    if (bandit.gamma_override > 1.0)
      throw ConfigError("gamma must be in [0,1] (or auto)");
    if (!(bandit.formula_e > 1.0)) throw ConfigError("formula_e must be > 1");
    lorabandit::validate(radio);
    lorabandit::validate(path_loss);
    lorabandit::validate(link);
    action_space();  // validates ranges and non-emptiness
  }
};

// Transmission gate enforcing the per-channel duty cycle: after a frame of
// `airtime` starting at `start`, the channel reopens for this device at
// start + airtime / duty_cycle.
class DutyCycleGate {
 public:
  // Earliest start not before `earliest` that respects the last claim.
  double next_start(double earliest) const {
    return std::max(earliest, next_allowed_);
  }
  // Claims the channel for a frame; returns its start time.
  double claim(double earliest, double airtime_ms, double duty_cycle) {
    double start = next_start(earliest);
    next_allowed_ = start + airtime_ms / duty_cycle;
    return start;
  }

 private:
  double next_allowed_ = 0.0;
};

// Draws the gap to the next packet arrival.
inline double arrival_gap_ms(double rate_per_hour, ArrivalProcess process,
                             Rng& rng) {
  double mean = 3600.0e3 / rate_per_hour;
  return process == ArrivalProcess::Exponential ? rng.exponential(mean) : mean;
}

// Uniform placement on a disc of `radius_m` around the gateway.
inline std::vector<std::pair<double, double>> place_devices(
    int n, double radius_m, std::uint64_t master_seed) {
  std::vector<std::pair<double, double>> positions;
  positions.reserve(static_cast<std::size_t>(n));
  for (int d = 0; d < n; ++d) {
    Rng rng(derive_seed(master_seed, static_cast<std::uint64_t>(d),
                        Stream::Placement));
    double r = radius_m * std::sqrt(rng.uniform());
    double theta = 2.0 * std::numbers::pi * rng.uniform();
    positions.emplace_back(r * std::cos(theta), r * std::sin(theta));
  }
  return positions;
}

struct RunResult {
  MetricsSeries metrics;
  std::vector<EventRecord> events;  // populated only when record_events
  long long generated = 0;
  long long sent = 0;
  long long received = 0;
  // Packets queued or in service when the horizon closed, per device.
  std::vector<long long> residual;
  std::vector<std::pair<double, double>> positions;
};

namespace detail {

class Simulation {
 public:
  explicit Simulation(const SimConfig& cfg)
      : cfg_(cfg), space_(cfg.action_space()) {
    cfg_.validate();
    for (const ActionConfig& a : space_)
      if (std::find(channels_.begin(), channels_.end(), a.channel_hz) ==
          channels_.end())
        channels_.push_back(a.channel_hz);
    std::sort(channels_.begin(), channels_.end());
    history_.resize(channels_.size());
    BanditParams params = cfg_.bandit_params(space_.size());
    auto positions = place_devices(cfg_.devices, cfg_.radius_m, cfg_.seed);
    devices_.reserve(static_cast<std::size_t>(cfg_.devices));
    for (int d = 0; d < cfg_.devices; ++d) {
      auto id = static_cast<std::uint64_t>(d);
      Device dev{
          .x = positions[static_cast<std::size_t>(d)].first,
          .y = positions[static_cast<std::size_t>(d)].second,
          .policy = make_policy(cfg_.policy, space_.size(), params),
          .traffic = Rng(derive_seed(cfg_.seed, id, Stream::Traffic)),
          .policy_rng = Rng(derive_seed(cfg_.seed, id, Stream::Policy)),
          .shadow = Rng(derive_seed(cfg_.seed, id, Stream::Shadowing)),
          .gates = std::vector<DutyCycleGate>(channels_.size()),
      };
      dev.distance_m = std::hypot(dev.x, dev.y);
      dev.base_loss_db = path_loss_db(dev.distance_m, cfg_.path_loss);
      devices_.push_back(std::move(dev));
    }
  }

  RunResult run() {
    MetricsSeries metrics(cfg_.devices, cfg_.num_buckets(),
                          cfg_.resolved_bucket_ms());
    metrics_ = &metrics;
    for (int d = 0; d < cfg_.devices; ++d) {
      double t = arrival_gap_ms(cfg_.rate_per_hour, cfg_.arrivals,
                                devices_[static_cast<std::size_t>(d)].traffic);
      if (t <= cfg_.horizon_ms) push({t, EventKind::PacketArrival, d});
    }
    while (!queue_.empty()) {
      Ev ev = queue_.top();
      queue_.pop();
      // The horizon is a hard stop: a frame still in the air (or a service
      // whose duty-cycle slot lies beyond it) never completes and its packet
      // counts toward the residual, not toward sent.
      if (ev.t > cfg_.horizon_ms) continue;
      dispatch(ev);
    }
    RunResult result;
    result.metrics = std::move(metrics);
    result.events = std::move(events_);
    for (Device& dev : devices_) {
      result.generated += dev.generated;
      result.sent += dev.sent;
      result.received += dev.received;
      // The packet in service stays at the backlog front until its ACK, so
      // the backlog alone is every packet not yet completed.
      result.residual.push_back(static_cast<long long>(dev.backlog.size()));
      result.positions.emplace_back(dev.x, dev.y);
    }
    metrics_ = nullptr;
    return result;
  }

 private:
  struct Ev {
    double t;
    EventKind kind;
    int device;
  };
  struct EvLater {
    bool operator()(const Ev& a, const Ev& b) const {
      if (a.t != b.t) return a.t > b.t;
      if (a.kind != b.kind) return a.kind > b.kind;
      return a.device > b.device;
    }
  };
  struct Device {
    double x = 0.0, y = 0.0;
    double distance_m = 0.0;
    double base_loss_db = 0.0;
    std::unique_ptr<UplinkPolicy> policy;
    Rng traffic{0};
    Rng policy_rng{0};
    Rng shadow{0};
    std::vector<DutyCycleGate> gates;  // indexed like channels_
    std::deque<double> backlog;        // arrival times awaiting service
    bool busy = false;
    // current service
    int arm = -1;
    int channel_index = -1;
    double airtime_ms = 0.0;
    Transmission tx{};
    bool decoded = false;
    long long generated = 0, sent = 0, received = 0;
  };

  void push(Ev ev) { queue_.push(ev); }

  void log(double t, EventKind kind, int device, int action, int outcome) {
    if (cfg_.record_events) events_.push_back({t, kind, device, action, outcome});
  }

  int channel_index(int channel_hz) const {
    auto it = std::find(channels_.begin(), channels_.end(), channel_hz);
    if (it == channels_.end()) throw SimError("unknown channel");
    return static_cast<int>(it - channels_.begin());
  }

  void dispatch(const Ev& ev) {
    Device& dev = devices_[static_cast<std::size_t>(ev.device)];
    switch (ev.kind) {
      case EventKind::PacketArrival: {
        ++dev.generated;
        metrics_->record_generated(ev.device, ev.t);
        log(ev.t, EventKind::PacketArrival, ev.device, -1, -1);
        dev.backlog.push_back(ev.t);
        double next = ev.t + arrival_gap_ms(cfg_.rate_per_hour, cfg_.arrivals,
                                            dev.traffic);
        if (next <= cfg_.horizon_ms)
          push({next, EventKind::PacketArrival, ev.device});
        if (!dev.busy) begin_service(ev.device, ev.t);
        break;
      }
      case EventKind::TxStart: {
        double loss = cfg_.path_loss.shadowing_sigma_db > 0.0
                          ? dev.base_loss_db +
                                dev.shadow.normal(
                                    cfg_.path_loss.shadowing_sigma_db)
                          : dev.base_loss_db;
        const ActionConfig& action = space_[dev.arm];
        dev.tx = Transmission{
            .device_id = ev.device,
            .action = action,
            .start_ms = ev.t,
            .airtime_ms = dev.airtime_ms,
            .rx_power_dbm = received_power_dbm(action.tp_dbm, loss),
            .payload_bytes = cfg_.payload_bytes,
        };
        history_[static_cast<std::size_t>(dev.channel_index)].push_back(dev.tx);
        log(ev.t, EventKind::TxStart, ev.device, dev.arm, -1);
        push({ev.t + dev.airtime_ms, EventKind::TxEnd, ev.device});
        break;
      }
      case EventKind::TxEnd: {
        auto& hist = history_[static_cast<std::size_t>(dev.channel_index)];
        dev.decoded = decodable(dev.tx, hist, cfg_.link);
        ++dev.sent;
        dev.received += dev.decoded ? 1 : 0;
        metrics_->record_outcome(
            ev.device, ev.t, dev.decoded,
            packet_energy_mj(dev.tx.action.tp_dbm, dev.tx.airtime_ms));
        log(ev.t, EventKind::TxEnd, ev.device, dev.arm, dev.decoded ? 1 : 0);
        prune(hist, ev.t);
        // The downlink ACK (or its absence) is what the device learns from;
        // modeled as instantaneous and lossless.
        push({ev.t, EventKind::AckDelivery, ev.device});
        break;
      }
      case EventKind::AckDelivery: {
        dev.policy->update(dev.arm, dev.decoded);
        log(ev.t, EventKind::AckDelivery, ev.device, dev.arm,
            dev.decoded ? 1 : 0);
        dev.busy = false;
        dev.backlog.pop_front();
        if (!dev.backlog.empty()) begin_service(ev.device, ev.t);
        break;
      }
    }
  }

  void begin_service(int device, double now) {
    Device& dev = devices_[static_cast<std::size_t>(device)];
    dev.busy = true;
    dev.arm = dev.policy->select(dev.policy_rng);
    const ActionConfig& action = space_[dev.arm];
    dev.channel_index = channel_index(action.channel_hz);
    dev.airtime_ms = time_on_air_ms(action.sf, cfg_.payload_bytes, cfg_.radio);
    double start =
        dev.gates[static_cast<std::size_t>(dev.channel_index)].claim(
            now, dev.airtime_ms, cfg_.duty_cycle);
    push({start, EventKind::TxStart, device});
  }

  // Drops history records no future TxEnd can overlap: anything ending
  // before the earliest start among records still ending at/after `now`.
  static void prune(std::vector<Transmission>& hist, double now) {
    double bound = now;
    for (const Transmission& r : hist)
      if (r.end_ms() >= now) bound = std::min(bound, r.start_ms);
    std::erase_if(hist,
                  [bound](const Transmission& r) { return r.end_ms() < bound; });
  }

  SimConfig cfg_;
  ActionSpace space_;
  std::vector<int> channels_;
  std::vector<std::vector<Transmission>> history_;
  std::vector<Device> devices_;
  std::priority_queue<Ev, std::vector<Ev>, EvLater> queue_;
  std::vector<EventRecord> events_;
  MetricsSeries* metrics_ = nullptr;
};

}  // namespace detail

// Runs one simulation to the horizon. Deterministic: the same config
// (seed included) produces identical metrics, events and artifacts.
inline RunResult run_simulation(const SimConfig& cfg) {
  detail::Simulation sim(cfg);
  return sim.run();
}

}  // namespace lorabandit
