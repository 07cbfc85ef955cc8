#include <cmath>
#include <cstdlib>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "lorabandit/metrics.hpp"
#include "lorabandit/rng.hpp"

using namespace lorabandit;

namespace {

// Fills one device's buckets with `sent` outcomes of which `received` decode.
void fill_bucket(MetricsSeries& m, int device, int bucket, int sent,
                 int received, double energy_each) {
  double t = (bucket + 0.5) * m.bucket_ms();
  for (int i = 0; i < sent; ++i)
    m.record_outcome(device, t, i < received, energy_each);
}

}  // namespace

TEST_CASE("pdr is received over sent", "[metrics]") {
  MetricsSeries m(1, 4, 1000.0);
  fill_bucket(m, 0, 0, 100, 100, 1.0);
  CHECK(pdr(m).value() == 1.0);

  MetricsSeries n(1, 4, 1000.0);
  fill_bucket(n, 0, 0, 120, 90, 1.0);
  fill_bucket(n, 0, 2, 80, 60, 1.0);
  CHECK(pdr(n).value() == 0.75);

  MetricsSeries empty(2, 4, 1000.0);
  empty.record_generated(0, 500.0);  // arrivals alone do not make a ratio
  CHECK_FALSE(pdr(empty).has_value());

  // windows restrict the ratio and validate their bounds
  CHECK(pdr(n, {0, 0}).value() == 0.75);
  CHECK(pdr(n, {2, 2}).value() == 0.75);
  CHECK_FALSE(pdr(n, {1, 1}).has_value());
  CHECK_THROWS_AS(pdr(n, {2, 1}), ConfigError);
  CHECK_THROWS_AS(pdr(n, {0, 4}), ConfigError);
}

TEST_CASE("cumulative pdr is the sent-weighted mean of bucket pdrs",
          "[metrics]") {
  Rng rng(606);
  MetricsSeries m(3, 20, 500.0);
  for (int d = 0; d < 3; ++d)
    for (int b = 0; b < 20; ++b) {
      int sent = static_cast<int>(rng.below(6));
      int received = sent == 0 ? 0 : static_cast<int>(rng.below(
                                          static_cast<std::uint64_t>(sent) + 1));
      fill_bucket(m, d, b, sent, received, 1.5);
    }
  double weighted = 0.0;
  long long total_sent = 0;
  for (int b = 0; b < 20; ++b) {
    const BucketRecord& r = m.aggregate()[static_cast<std::size_t>(b)];
    if (r.sent == 0) continue;
    double bucket_pdr = static_cast<double>(r.received) / r.sent;
    weighted += bucket_pdr * static_cast<double>(r.sent);
    total_sent += r.sent;
  }
  REQUIRE(total_sent > 0);
  CHECK(pdr(m).value() ==
        Catch::Approx(weighted / static_cast<double>(total_sent))
            .epsilon(1e-12));
}

TEST_CASE("pdr is monotone in received packets", "[metrics]") {
  MetricsSeries lo(1, 2, 1000.0);
  MetricsSeries hi(1, 2, 1000.0);
  fill_bucket(lo, 0, 0, 10, 4, 1.0);
  fill_bucket(hi, 0, 0, 10, 5, 1.0);
  CHECK(pdr(lo).value() >= 0.0);
  CHECK(pdr(hi).value() <= 1.0);
  CHECK(pdr(lo).value() < pdr(hi).value());
}

TEST_CASE("energy per packet averages over devices", "[metrics]") {
  // one device, 10 packets, 24.5 mJ total
  MetricsSeries m(1, 4, 1000.0);
  fill_bucket(m, 0, 1, 10, 10, 2.45);
  CHECK(energy_per_packet_mj(m).value() == Catch::Approx(2.45).epsilon(1e-12));

  // same fixed action for every device -> identical per-device EC
  MetricsSeries same(3, 4, 1000.0);
  fill_bucket(same, 0, 0, 5, 5, 2.45);
  fill_bucket(same, 1, 0, 9, 2, 2.45);
  fill_bucket(same, 2, 2, 2, 0, 2.45);
  CHECK(energy_per_packet_mj(same).value() ==
        Catch::Approx(2.45).epsilon(1e-12));

  // one low-power device pulls the fleet mean down
  MetricsSeries mixed(3, 4, 1000.0);
  fill_bucket(mixed, 0, 0, 5, 5, 2.45);
  fill_bucket(mixed, 1, 0, 5, 5, 2.45);
  fill_bucket(mixed, 2, 0, 5, 5, 0.6153);
  CHECK(energy_per_packet_mj(mixed).value() <
        energy_per_packet_mj(same).value());

  // silent devices are excluded from the mean rather than diluting it
  MetricsSeries sparse(4, 4, 1000.0);
  fill_bucket(sparse, 1, 0, 4, 4, 2.0);
  CHECK(energy_per_packet_mj(sparse).value() ==
        Catch::Approx(2.0).epsilon(1e-12));

  MetricsSeries quiet(2, 4, 1000.0);
  CHECK_FALSE(energy_per_packet_mj(quiet).has_value());
}

TEST_CASE("cumulative pdr carries a NaN prefix until traffic flows",
          "[metrics]") {
  MetricsSeries m(1, 5, 1000.0);
  fill_bucket(m, 0, 2, 4, 3, 1.0);
  fill_bucket(m, 0, 4, 4, 1, 1.0);
  auto curve = cumulative_pdr(m);
  REQUIRE(curve.size() == 5);
  CHECK(std::isnan(curve[0]));
  CHECK(std::isnan(curve[1]));
  CHECK(curve[2] == 0.75);
  CHECK(curve[3] == 0.75);
  CHECK(curve[4] == 0.5);
}

TEST_CASE("convergence detector on canonical shapes", "[metrics]") {
  const double bucket = 1000.0;
  const int window = 10;

  // constant series settles immediately
  std::vector<double> flat(100, 0.8);
  CHECK(convergence_time_ms(flat, bucket, 1e-4, window).value() == 0.0);

  // a ramp that never flattens never converges
  std::vector<double> ramp(100);
  for (int b = 0; b < 100; ++b) ramp[static_cast<std::size_t>(b)] = 0.005 * b;
  CHECK_FALSE(convergence_time_ms(ramp, bucket, 1e-4, window).has_value());

  // ramp for 40 buckets then flat: detected within 2 buckets of the knee
  std::vector<double> knee(100);
  for (int b = 0; b < 100; ++b)
    knee[static_cast<std::size_t>(b)] = b < 40 ? 0.0125 * b : 0.5;
  double t = convergence_time_ms(knee, bucket, 1e-4, window).value();
  CHECK(t >= 38.0 * bucket);
  CHECK(t <= 42.0 * bucket);

  // NaN lead-in is skipped, not treated as settled
  std::vector<double> nan_lead(60, 0.7);
  for (int b = 0; b < 5; ++b)
    nan_lead[static_cast<std::size_t>(b)] =
        std::numeric_limits<double>::quiet_NaN();
  CHECK(convergence_time_ms(nan_lead, bucket, 1e-4, window).value() ==
        5.0 * bucket);

  // a late surge above the tolerance breaks earlier flat windows
  std::vector<double> surge(100, 0.5);
  for (int b = 80; b < 100; ++b) surge[static_cast<std::size_t>(b)] = 0.9;
  double ts = convergence_time_ms(surge, bucket, 1e-4, window).value();
  CHECK(ts >= 80.0 * bucket);
}

TEST_CASE("convergence tolerance is monotone", "[metrics]") {
  const double bucket = 1000.0;
  const int window = 10;
  std::vector<double> curve(200);
  for (int b = 0; b < 200; ++b)
    curve[static_cast<std::size_t>(b)] = 0.5 + 0.05 * std::exp(-b / 10.0);
  auto loose = convergence_time_ms(curve, bucket, 1e-3, window);
  auto tight = convergence_time_ms(curve, bucket, 1e-5, window);
  REQUIRE(loose.has_value());
  REQUIRE(tight.has_value());
  CHECK(loose.value() <= tight.value());
  CHECK(tight.value() > loose.value());  // the tighter tolerance waits longer
}

TEST_CASE("convergence detector validates its inputs", "[metrics]") {
  std::vector<double> shorty(19, 0.5);
  CHECK_THROWS_AS(convergence_time_ms(shorty, 1000.0, 1e-4, 10), ConfigError);
  std::vector<double> okay(20, 0.5);
  CHECK(convergence_time_ms(okay, 1000.0, 1e-4, 10).has_value());
  CHECK_THROWS_AS(convergence_time_ms(okay, 1000.0, 1e-4, 0), ConfigError);
  CHECK_THROWS_AS(convergence_time_ms(okay, 1000.0, -1.0, 10), ConfigError);
  CHECK_THROWS_AS(convergence_time_ms(okay, 0.0, 1e-4, 10), ConfigError);
}

TEST_CASE("aggregate equals the element-wise device sum", "[metrics]") {
  Rng rng(1212);
  MetricsSeries m(4, 12, 250.0);
  for (int d = 0; d < 4; ++d)
    for (int b = 0; b < 12; ++b) {
      if (rng.below(3) == 0) m.record_generated(d, (b + 0.25) * 250.0);
      int sent = static_cast<int>(rng.below(4));
      fill_bucket(m, d, b, sent, sent > 0 ? sent - 1 : 0, 0.25 * (d + 1));
    }
  for (int b = 0; b < 12; ++b) {
    BucketRecord sum;
    for (int d = 0; d < 4; ++d)
      sum += m.device(d)[static_cast<std::size_t>(b)];
    const BucketRecord& agg = m.aggregate()[static_cast<std::size_t>(b)];
    CHECK(agg.generated == sum.generated);
    CHECK(agg.sent == sum.sent);
    CHECK(agg.received == sum.received);
    CHECK(agg.energy_mj == Catch::Approx(sum.energy_mj).epsilon(1e-12));
  }
}

TEST_CASE("bucket indexing clamps the horizon edge", "[metrics]") {
  MetricsSeries m(1, 10, 100.0);
  CHECK(m.bucket_index(0.0) == 0);
  CHECK(m.bucket_index(99.9999) == 0);
  CHECK(m.bucket_index(100.0) == 1);
  CHECK(m.bucket_index(999.0) == 9);
  CHECK(m.bucket_index(1000.0) == 9);   // exactly at the horizon
  CHECK(m.bucket_index(5000.0) == 9);   // clamped, never out of range
  CHECK_THROWS_AS(m.bucket_index(-1.0), SimError);
  CHECK_THROWS_AS(MetricsSeries(0, 10, 100.0), ConfigError);
  CHECK_THROWS_AS(MetricsSeries(1, 0, 100.0), ConfigError);
  CHECK_THROWS_AS(MetricsSeries(1, 10, 0.0), ConfigError);
}

TEST_CASE("csv writers emit the documented schema", "[metrics]") {
  MetricsSeries m(1, 2, 1000.0);
  m.record_generated(0, 100.0);
  m.record_outcome(0, 200.0, true, 2.5);
  m.record_outcome(0, 300.0, false, 2.5);

  std::ostringstream agg;
  write_aggregate_csv(agg, m);
  CHECK(agg.str() ==
        "bucket_start_ms,sent,received,pdr,energy_mj_per_packet\n"
        "0,2,1,0.5,2.5\n"
        "1000,0,0,,\n");

  std::ostringstream dev;
  write_per_device_csv(dev, m);
  CHECK(dev.str() ==
        "device_id,bucket_start_ms,sent,received,pdr,energy_mj_per_packet\n"
        "0,0,2,1,0.5,2.5\n"
        "0,1000,0,0,,\n");
}

TEST_CASE("double formatting is deterministic and round-trips", "[metrics]") {
  CHECK(format_csv_double(0.5) == "0.5");
  CHECK(format_csv_double(1.0 / 3.0) == "0.3333333333");
  CHECK(format_csv_double(240000.0) == "240000");
  double pi = 3.14159265358979323846;
  CHECK(std::strtod(format_exact_double(pi).c_str(), nullptr) == pi);
  double tiny = 2.4499935498371834;
  CHECK(std::strtod(format_exact_double(tiny).c_str(), nullptr) == tiny);
}
