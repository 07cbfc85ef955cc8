#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lorabandit/errors.hpp"

namespace lorabandit {

// Fixed-point decimal formatting for CSV cells: deterministic for identical
// doubles and free of locale effects. 10 significant digits.
inline std::string format_csv_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// Full-precision formatting that round-trips through strtod.
inline std::string format_exact_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct BucketRecord {
  long long generated = 0;  // packets that arrived at the MAC queue
  long long sent = 0;       // transmissions completed
  long long received = 0;   // transmissions decoded by the gateway
  double energy_mj = 0.0;   // radiated energy of the sent packets
};

inline BucketRecord& operator+=(BucketRecord& a, const BucketRecord& b) {
  a.generated += b.generated;
  a.sent += b.sent;
  a.received += b.received;
  a.energy_mj += b.energy_mj;
  return a;
}

// Time-bucketed per-device and fleet-aggregated counters for one run.
class MetricsSeries {
 public:
  MetricsSeries() = default;
  MetricsSeries(int num_devices, int num_buckets, double bucket_ms)
      : bucket_ms_(bucket_ms),
        aggregate_(static_cast<std::size_t>(num_buckets)),
        per_device_(static_cast<std::size_t>(num_devices),
                    std::vector<BucketRecord>(
                        static_cast<std::size_t>(num_buckets))) {
    if (num_devices < 1) throw ConfigError("metrics require >= 1 device");
    if (num_buckets < 1) throw ConfigError("metrics require >= 1 bucket");
    if (!(bucket_ms > 0.0)) throw ConfigError("bucket_ms must be > 0");
  }

  int num_devices() const { return static_cast<int>(per_device_.size()); }
  int num_buckets() const { return static_cast<int>(aggregate_.size()); }
  double bucket_ms() const { return bucket_ms_; }

  // Times at or past the horizon clamp into the last bucket.
  int bucket_index(double time_ms) const {
    if (time_ms < 0.0) throw SimError("negative event time");
    int b = static_cast<int>(time_ms / bucket_ms_);
    return b < num_buckets() ? b : num_buckets() - 1;
  }

  void record_generated(int device, double time_ms) {
    int b = bucket_index(time_ms);
    ++cell(device, b).generated;
    ++aggregate_[static_cast<std::size_t>(b)].generated;
  }

  void record_outcome(int device, double time_ms, bool decoded,
                      double energy_mj) {
    int b = bucket_index(time_ms);
    BucketRecord& r = cell(device, b);
    ++r.sent;
    r.received += decoded ? 1 : 0;
    r.energy_mj += energy_mj;
    BucketRecord& a = aggregate_[static_cast<std::size_t>(b)];
    ++a.sent;
    a.received += decoded ? 1 : 0;
    a.energy_mj += energy_mj;
  }

  std::span<const BucketRecord> aggregate() const { return aggregate_; }
  std::span<const BucketRecord> device(int d) const {
    return per_device_.at(static_cast<std::size_t>(d));
  }

 private:
  BucketRecord& cell(int d, int b) {
    return per_device_.at(static_cast<std::size_t>(d))[
        static_cast<std::size_t>(b)];
  }

  double bucket_ms_ = 1.0;
  std::vector<BucketRecord> aggregate_;
  std::vector<std::vector<BucketRecord>> per_device_;
};

// Half-open bucket window [first, last]; last = -1 means the final bucket.
struct BucketWindow {
  int first = 0;
  int last = -1;
};

namespace detail {

inline std::pair<int, int> resolve_window(const MetricsSeries& m,
                                          BucketWindow w) {
  int last = w.last < 0 ? m.num_buckets() - 1 : w.last;
  if (w.first < 0 || last >= m.num_buckets() || w.first > last)
    throw ConfigError("bucket window out of range");
  return {w.first, last};
}

}  // namespace detail

// Fleet PDR over the window: received / sent. nullopt when nothing was sent.
inline std::optional<double> pdr(const MetricsSeries& m, BucketWindow w = {}) {
  auto [first, last] = detail::resolve_window(m, w);
  long long sent = 0, received = 0;
  for (int b = first; b <= last; ++b) {
    sent += m.aggregate()[static_cast<std::size_t>(b)].sent;
    received += m.aggregate()[static_cast<std::size_t>(b)].received;
  }
  if (sent == 0) return std::nullopt;
  return static_cast<double>(received) / static_cast<double>(sent);
}

// Fleet EC over the window: mean over devices of (device energy / device
// sent). Devices that sent nothing in the window are excluded from the mean;
// nullopt when no device sent anything.
inline std::optional<double> energy_per_packet_mj(const MetricsSeries& m,
                                                  BucketWindow w = {}) {
  auto [first, last] = detail::resolve_window(m, w);
  double sum = 0.0;
  int devices = 0;
  for (int d = 0; d < m.num_devices(); ++d) {
    long long sent = 0;
    double energy = 0.0;
    for (int b = first; b <= last; ++b) {
      sent += m.device(d)[static_cast<std::size_t>(b)].sent;
      energy += m.device(d)[static_cast<std::size_t>(b)].energy_mj;
    }
    if (sent == 0) continue;
    sum += energy / static_cast<double>(sent);
    ++devices;
  }
  if (devices == 0) return std::nullopt;
  return sum / devices;
}

// Cumulative fleet PDR after each bucket; NaN while cumulative sent is 0.
inline std::vector<double> cumulative_pdr(const MetricsSeries& m) {
  std::vector<double> curve;
  curve.reserve(static_cast<std::size_t>(m.num_buckets()));
  long long sent = 0, received = 0;
  for (const BucketRecord& r : m.aggregate()) {
    sent += r.sent;
    received += r.received;
    curve.push_back(sent == 0
                        ? std::numeric_limits<double>::quiet_NaN()
                        : static_cast<double>(received) / sent);
  }
  return curve;
}

// Convergence time of a cumulative metric curve: the start of the earliest
// window of `window_buckets` whose least-squares slope has magnitude at most
// slope_epsilon per bucket and after which the curve never rises by more
// than slope_epsilon * window_buckets above the window's starting value.
// Returns the window start time in ms, or nullopt if the curve never
// settles. Windows containing NaN (no traffic yet) are skipped.
inline std::optional<double> convergence_time_ms(std::span<const double> curve,
                                                 double bucket_ms,
                                                 double slope_epsilon,
                                                 int window_buckets) {
  int n = static_cast<int>(curve.size());
  if (window_buckets < 1) throw ConfigError("window_buckets must be >= 1");
  if (!(slope_epsilon >= 0.0)) throw ConfigError("slope_epsilon must be >= 0");
  if (!(bucket_ms > 0.0)) throw ConfigError("bucket_ms must be > 0");
  if (n < 2 * window_buckets)
    throw ConfigError("curve must span at least two detector windows");
  for (int b = 0; b + window_buckets < n; ++b) {
    bool valid = true;
    // least-squares slope over curve[b .. b+window_buckets]
    int pts = window_buckets + 1;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (int i = 0; i < pts; ++i) {
      double y = curve[static_cast<std::size_t>(b + i)];
      if (std::isnan(y)) {
        valid = false;
        break;
      }
      sx += i;
      sy += y;
      sxx += static_cast<double>(i) * i;
      sxy += i * y;
    }
    if (!valid) continue;
    double denom = pts * sxx - sx * sx;
    double slope = (pts * sxy - sx * sy) / denom;
    if (std::abs(slope) > slope_epsilon) continue;
    double ceiling = curve[static_cast<std::size_t>(b)] +
                     slope_epsilon * window_buckets;
    bool settled = true;
    for (int j = b + 1; j < n; ++j) {
      double y = curve[static_cast<std::size_t>(j)];
      if (!std::isnan(y) && y > ceiling) {
        settled = false;
        break;
      }
    }
    if (settled) return b * bucket_ms;
  }
  return std::nullopt;
}

namespace detail {

inline void write_csv_row(std::ostream& out, const BucketRecord& r,
                          double bucket_start_ms) {
  out << format_csv_double(bucket_start_ms) << ',' << r.sent << ','
      << r.received << ',';
  if (r.sent > 0)
    out << format_csv_double(static_cast<double>(r.received) / r.sent);
  out << ',';
  if (r.sent > 0)
    out << format_csv_double(r.energy_mj / static_cast<double>(r.sent));
  out << '\n';
}

}  // namespace detail

// Aggregated per-bucket CSV. pdr and energy cells are empty when the bucket
// has no completed transmissions.
inline void write_aggregate_csv(std::ostream& out, const MetricsSeries& m) {
  out << "bucket_start_ms,sent,received,pdr,energy_mj_per_packet\n";
  for (int b = 0; b < m.num_buckets(); ++b)
    detail::write_csv_row(out, m.aggregate()[static_cast<std::size_t>(b)],
                          b * m.bucket_ms());
}

// Per-device CSV: same schema with a device_id column prepended.
inline void write_per_device_csv(std::ostream& out, const MetricsSeries& m) {
  out << "device_id,bucket_start_ms,sent,received,pdr,energy_mj_per_packet\n";
  for (int d = 0; d < m.num_devices(); ++d)
    for (int b = 0; b < m.num_buckets(); ++b) {
      out << d << ',';
      detail::write_csv_row(out, m.device(d)[static_cast<std::size_t>(b)],
                            b * m.bucket_ms());
    }
}

}  // namespace lorabandit
