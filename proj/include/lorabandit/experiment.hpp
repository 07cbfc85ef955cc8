#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lorabandit/config.hpp"
#include "lorabandit/metrics.hpp"
#include "lorabandit/sim.hpp"

namespace lorabandit {

// Root directory for result artifacts: $LORABANDIT_OUT if set, else
// ./results under the current working directory.
inline std::filesystem::path output_root() {
  if (const char* env = std::getenv("LORABANDIT_OUT"); env && *env)
    return std::filesystem::path(env);
  return std::filesystem::path("results");
}

struct RunSummary {
  long long generated = 0;
  long long sent = 0;
  long long received = 0;
  long long residual = 0;
  std::optional<double> final_pdr;
  std::optional<double> energy_mj_per_packet;
  std::optional<double> convergence_ms;
  double gamma = 0.0;
  int num_actions = 0;
};

// Convergence detector defaults: slope tolerance per bucket, window = 10% of
// the series (at least one bucket).
inline constexpr double kConvergenceEpsilon = 1e-4;

inline std::optional<double> detect_convergence(const MetricsSeries& m) {
  auto curve = cumulative_pdr(m);
  int window = std::max(1, m.num_buckets() / 10);
  if (static_cast<int>(curve.size()) < 2 * window) return std::nullopt;
  return convergence_time_ms(curve, m.bucket_ms(), kConvergenceEpsilon,
                             window);
}

inline RunSummary summarize(const SimConfig& cfg, const RunResult& result) {
  RunSummary s;
  s.generated = result.generated;
  s.sent = result.sent;
  s.received = result.received;
  for (long long r : result.residual) s.residual += r;
  s.final_pdr = pdr(result.metrics);
  s.energy_mj_per_packet = energy_per_packet_mj(result.metrics);
  s.convergence_ms = detect_convergence(result.metrics);
  s.num_actions = cfg.action_space().size();
  s.gamma = cfg.resolved_gamma(s.num_actions);
  return s;
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SimError("cannot open for writing: " + path.string());
  out << content;
  out.flush();
  if (!out) throw SimError("write failed: " + path.string());
}

inline std::string optional_cell(const std::optional<double>& v) {
  return v ? format_csv_double(*v) : std::string();
}

}  // namespace detail

inline std::string summary_text(const SimConfig& cfg, const RunSummary& s) {
  std::ostringstream out;
  out << "policy = " << to_string(cfg.policy) << "\n";
  out << "scenario = " << cfg.scenario << "\n";
  out << "seed = " << cfg.seed << "\n";
  out << "num_actions = " << s.num_actions << "\n";
  out << "gamma = " << format_exact_double(s.gamma) << "\n";
  out << "generated = " << s.generated << "\n";
  out << "sent = " << s.sent << "\n";
  out << "received = " << s.received << "\n";
  out << "residual = " << s.residual << "\n";
  out << "final_pdr = "
      << (s.final_pdr ? format_csv_double(*s.final_pdr) : "n/a") << "\n";
  out << "energy_mj_per_packet = "
      << (s.energy_mj_per_packet ? format_csv_double(*s.energy_mj_per_packet)
                                 : "n/a")
      << "\n";
  out << "convergence_ms = "
      << (s.convergence_ms ? format_csv_double(*s.convergence_ms)
                           : "not_converged")
      << "\n";
  if (s.convergence_ms)
    out << "convergence_hours = "
        << format_csv_double(*s.convergence_ms / 3600.0e3) << "\n";
  return out.str();
}

// Runs one simulation and writes its artifact set into `dir`:
// manifest.ini, metrics.csv, summary.txt, and optionally per_device.csv and
// events.csv. Returns the summary. The config must already be resolved.
inline RunSummary run_to_directory(const SimConfig& cfg,
                                   const std::filesystem::path& dir,
                                   bool per_device_csv = false) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw SimError("cannot create output dir " + dir.string() + ": " +
                         ec.message());
  RunResult result = run_simulation(cfg);
  RunSummary summary = summarize(cfg, result);
  detail::write_text_file(dir / "manifest.ini", serialize_config(cfg));
  {
    std::ostringstream csv;
    write_aggregate_csv(csv, result.metrics);
    detail::write_text_file(dir / "metrics.csv", csv.str());
  }
  if (per_device_csv) {
    std::ostringstream csv;
    write_per_device_csv(csv, result.metrics);
    detail::write_text_file(dir / "per_device.csv", csv.str());
  }
  if (cfg.record_events) {
    std::ostringstream csv;
    write_event_csv(csv, result.events);
    detail::write_text_file(dir / "events.csv", csv.str());
  }
  detail::write_text_file(dir / "summary.txt", summary_text(cfg, summary));
  return summary;
}

// Midpoint median; +/-inf entries participate normally. Throws on empty.
inline double median(std::vector<double> v) {
  if (v.empty()) throw ConfigError("median of empty set");
  std::sort(v.begin(), v.end());
  std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  double lo = v[n / 2 - 1], hi = v[n / 2];
  if (std::isinf(lo) || std::isinf(hi)) return std::isinf(hi) ? hi : lo;
  return 0.5 * (lo + hi);
}

// Convergence as a number: runs that never settle count as +infinity.
inline double convergence_or_inf(const RunSummary& s) {
  return s.convergence_ms ? *s.convergence_ms
                          : std::numeric_limits<double>::infinity();
}

struct ComparisonRow {
  PolicyKind policy;
  std::uint64_t seed;
  RunSummary summary;
};

struct ComparisonResult {
  std::vector<ComparisonRow> rows;

  std::vector<const RunSummary*> rows_for(PolicyKind p) const {
    std::vector<const RunSummary*> out;
    for (const ComparisonRow& r : rows)
      if (r.policy == p) out.push_back(&r.summary);
    return out;
  }
  double median_pdr(PolicyKind p) const {
    std::vector<double> v;
    for (auto* s : rows_for(p))
      if (s->final_pdr) v.push_back(*s->final_pdr);
    return median(std::move(v));
  }
  double median_energy(PolicyKind p) const {
    std::vector<double> v;
    for (auto* s : rows_for(p))
      if (s->energy_mj_per_packet) v.push_back(*s->energy_mj_per_packet);
    return median(std::move(v));
  }
  double median_convergence_ms(PolicyKind p) const {
    std::vector<double> v;
    for (auto* s : rows_for(p)) v.push_back(convergence_or_inf(*s));
    return median(std::move(v));
  }
};

// Runs the config once per (policy, seed). Runs are independent and
// deterministic, so results do not depend on execution order. If `dir` is
// non-empty, per-run artifacts land in dir/<policy>_seed<seed>/ and a
// summary.csv table (one row per run plus per-policy median rows) in dir.
inline ComparisonResult run_comparison(const SimConfig& base,
                                       const std::vector<PolicyKind>& policies,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::filesystem::path& dir = {}) {
  if (policies.empty()) throw ConfigError("compare requires >= 1 policy");
  if (seeds.empty()) throw ConfigError("compare requires >= 1 seed");
  ComparisonResult result;
  for (PolicyKind policy : policies)
    for (std::uint64_t seed : seeds) {
      SimConfig cfg = base;
      cfg.policy = policy;
      cfg.seed = seed;
      RunSummary s;
      if (dir.empty()) {
        s = summarize(cfg, run_simulation(cfg));
      } else {
        s = run_to_directory(cfg, dir / (std::string(to_string(policy)) +
                                         "_seed" + std::to_string(seed)));
      }
      result.rows.push_back({policy, seed, s});
    }
  if (!dir.empty()) {
    std::ostringstream csv;
    csv << "policy,seed,final_pdr,energy_mj_per_packet,convergence_ms,"
           "generated,sent,received\n";
    for (const ComparisonRow& r : result.rows)
      csv << to_string(r.policy) << ',' << r.seed << ','
          << detail::optional_cell(r.summary.final_pdr) << ','
          << detail::optional_cell(r.summary.energy_mj_per_packet) << ','
          << detail::optional_cell(r.summary.convergence_ms) << ','
          << r.summary.generated << ',' << r.summary.sent << ','
          << r.summary.received << '\n';
    for (PolicyKind policy : policies) {
      double conv = result.median_convergence_ms(policy);
      csv << to_string(policy) << ",median,"
          << format_csv_double(result.median_pdr(policy)) << ','
          << format_csv_double(result.median_energy(policy)) << ','
          << (std::isinf(conv) ? std::string() : format_csv_double(conv))
          << ",,,\n";
    }
    detail::write_text_file(dir / "summary.csv", csv.str());
  }
  return result;
}

struct SweepRate {
  std::string tag;  // directory label, e.g. "1ph"
  double per_hour;
};

struct SweepRow {
  std::string tag;
  double rate_per_hour;
  std::uint64_t seed;
  RunSummary summary;
};

// Runs the config at each packet rate (for each seed); artifacts as in
// run_comparison, under dir/rate_<tag>_seed<seed>/.
inline std::vector<SweepRow> run_sweep(const SimConfig& base,
                                       const std::vector<SweepRate>& rates,
                                       const std::vector<std::uint64_t>& seeds,
                                       const std::filesystem::path& dir = {}) {
  if (rates.empty()) throw ConfigError("sweep requires >= 1 rate");
  if (seeds.empty()) throw ConfigError("sweep requires >= 1 seed");
  std::vector<SweepRow> rows;
  for (const SweepRate& rate : rates)
    for (std::uint64_t seed : seeds) {
      SimConfig cfg = base;
      cfg.rate_per_hour = rate.per_hour;
      cfg.seed = seed;
      RunSummary s;
      if (dir.empty()) {
        s = summarize(cfg, run_simulation(cfg));
      } else {
        s = run_to_directory(cfg, dir / ("rate_" + rate.tag + "_seed" +
                                         std::to_string(seed)));
      }
      rows.push_back({rate.tag, rate.per_hour, seed, s});
    }
  if (!dir.empty()) {
    std::ostringstream csv;
    csv << "rate,rate_per_hour,seed,final_pdr,energy_mj_per_packet,"
           "convergence_ms,generated,sent,received\n";
    for (const SweepRow& r : rows)
      csv << r.tag << ',' << format_csv_double(r.rate_per_hour) << ','
          << r.seed << ',' << detail::optional_cell(r.summary.final_pdr)
          << ',' << detail::optional_cell(r.summary.energy_mj_per_packet)
          << ',' << detail::optional_cell(r.summary.convergence_ms) << ','
          << r.summary.generated << ',' << r.summary.sent << ','
          << r.summary.received << '\n';
    for (const SweepRate& rate : rates) {
      std::vector<double> pdrs, ecs, convs;
      for (const SweepRow& r : rows)
        if (r.tag == rate.tag) {
          if (r.summary.final_pdr) pdrs.push_back(*r.summary.final_pdr);
          if (r.summary.energy_mj_per_packet)
            ecs.push_back(*r.summary.energy_mj_per_packet);
          convs.push_back(convergence_or_inf(r.summary));
        }
      double conv = median(convs);
      csv << rate.tag << ',' << format_csv_double(rate.per_hour) << ",median,"
          << (pdrs.empty() ? std::string() : format_csv_double(median(pdrs)))
          << ','
          << (ecs.empty() ? std::string() : format_csv_double(median(ecs)))
          << ','
          << (std::isinf(conv) ? std::string() : format_csv_double(conv))
          << ",,,\n";
    }
    detail::write_text_file(dir / "summary.csv", csv.str());
  }
  return rows;
}

}  // namespace lorabandit
