#include <algorithm>
#include <cmath>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "lorabandit/phy.hpp"
#include "lorabandit/rng.hpp"

using namespace lorabandit;

namespace {

// Independent airtime reference, structured differently from the production
// code (integer symbol accounting, explicit branches).
double ref_time_on_air_ms(int sf, int payload, int bw_hz, int cr,
                          int preamble, bool header, bool crc) {
  double t_sym_s = std::pow(2.0, sf) / bw_hz;
  bool de = (t_sym_s * 1000.0 >= 16.0);
  double numerator = 8.0 * payload - 4.0 * sf + 28.0 + (crc ? 16.0 : 0.0) -
                     (header ? 0.0 : 20.0);
  double blocks = std::ceil(numerator / (4.0 * (sf - (de ? 2.0 : 0.0))));
  double symbols = blocks * (cr + 4.0);
  if (symbols < 0.0) symbols = 0.0;
  double payload_symbols = 8.0 + symbols;
  return ((preamble + 4.25) + payload_symbols) * t_sym_s * 1000.0;
}

Transmission make_tx(int device, int sf, int ch, double start, double airtime,
                     double rx) {
  return Transmission{device, ActionConfig{sf, ch, 14}, start, airtime, rx, 50};
}

// Exhaustive checker applying rules (i)-(iii) pair by pair.
std::vector<int> brute_force_decoded(const std::vector<Transmission>& group,
                                     const LinkTables& link) {
  std::vector<int> decoded;
  for (std::size_t i = 0; i < group.size(); ++i) {
    const Transmission& t = group[i];
    bool ok = t.rx_power_dbm >= link.sensitivity(t.action.sf);
    for (std::size_t j = 0; ok && j < group.size(); ++j) {
      if (i == j) continue;
      const Transmission& o = group[j];
      if (o.action.channel_hz != t.action.channel_hz) continue;
      bool time_overlap = t.start_ms < o.start_ms + o.airtime_ms &&
                          o.start_ms < t.start_ms + t.airtime_ms;
      if (!time_overlap) continue;
      double threshold = t.action.sf == o.action.sf
                             ? link.co_sf_capture_db
                             : link.inter_sf(t.action.sf, o.action.sf);
      if (t.rx_power_dbm < o.rx_power_dbm + threshold) ok = false;
    }
    if (ok) decoded.push_back(t.device_id);
  }
  std::sort(decoded.begin(), decoded.end());
  return decoded;
}

}  // namespace

TEST_CASE("time on air matches the frozen 50-byte table at CR 4/5", "[phy]") {
  RadioConfig radio;  // 125 kHz, CR 4/5, preamble 8, explicit header, CRC
  CHECK(time_on_air_ms(7, 50, radio) == Catch::Approx(97.536).margin(1e-6));
  CHECK(time_on_air_ms(8, 50, radio) == Catch::Approx(174.592).margin(1e-6));
  CHECK(time_on_air_ms(9, 50, radio) == Catch::Approx(328.704).margin(1e-6));
  CHECK(time_on_air_ms(10, 50, radio) == Catch::Approx(616.448).margin(1e-6));
  CHECK(time_on_air_ms(11, 50, radio) == Catch::Approx(1314.816).margin(1e-6));
  CHECK(time_on_air_ms(12, 50, radio) == Catch::Approx(2301.952).margin(1e-6));
}

TEST_CASE("time on air clamps the payload symbol count at 8", "[phy]") {
  RadioConfig radio;
  // payload 0 at SF12 drives the block count negative; only the preamble
  // and the 8 mandatory payload symbols remain
  double t_sym = 4096.0 / 125000.0 * 1000.0;
  CHECK(time_on_air_ms(12, 0, radio) ==
        Catch::Approx((8 + 4.25 + 8) * t_sym).margin(1e-9));
}

TEST_CASE("time on air is monotone in SF and payload", "[phy]") {
  RadioConfig radio;
  for (int cr = 1; cr <= 4; ++cr) {
    radio.coding_rate = cr;
    for (int sf = 7; sf < 12; ++sf)
      for (int payload : {1, 10, 50, 128, 255})
        CHECK(time_on_air_ms(sf + 1, payload, radio) >
              time_on_air_ms(sf, payload, radio));
    for (int sf = 7; sf <= 12; ++sf)
      for (int payload = 1; payload < 255; payload += 13)
        CHECK(time_on_air_ms(sf, payload + 13, radio) >=
              time_on_air_ms(sf, payload, radio));
  }
}

TEST_CASE("time on air matches an independent reference", "[phy]") {
  RadioConfig radio;
  for (int cr : {1, 4}) {
    radio.coding_rate = cr;
    for (int sf = 7; sf <= 12; ++sf)
      for (int payload : {1, 50, 255})
        CHECK(time_on_air_ms(sf, payload, radio) ==
              Catch::Approx(ref_time_on_air_ms(sf, payload, 125000, cr, 8,
                                               true, true))
                  .margin(1e-6));
  }
  // and with header/CRC variants at 250 kHz
  radio = RadioConfig{250000, 2, 10, false, false};
  for (int sf = 7; sf <= 12; ++sf)
    CHECK(time_on_air_ms(sf, 50, radio) ==
          Catch::Approx(ref_time_on_air_ms(sf, 50, 250000, 2, 10, false,
                                           false))
              .margin(1e-6));
}

TEST_CASE("low data rate optimization engages at 16 ms symbols", "[phy]") {
  RadioConfig radio;
  CHECK_FALSE(low_data_rate_optimize(10, radio));
  CHECK(low_data_rate_optimize(11, radio));  // 16.384 ms symbol
  CHECK(low_data_rate_optimize(12, radio));
  radio.bandwidth_hz = 250000;
  CHECK_FALSE(low_data_rate_optimize(11, radio));
  CHECK(low_data_rate_optimize(12, radio));  // exactly 16.384 ms
}

TEST_CASE("time on air rejects invalid spreading factors", "[phy]") {
  RadioConfig radio;
  CHECK_THROWS_AS(time_on_air_ms(6, 50, radio), ConfigError);
  CHECK_THROWS_AS(time_on_air_ms(13, 50, radio), ConfigError);
  CHECK_THROWS_AS(time_on_air_ms(7, -1, radio), ConfigError);
}

TEST_CASE("path loss anchors at the reference and follows the log law",
          "[phy]") {
  PathLossModel model;  // 127.41 dB @ 40 m, exponent 2.08
  CHECK(path_loss_db(40.0, model) == Catch::Approx(127.41).margin(1e-12));
  // one decade above the reference
  CHECK(path_loss_db(400.0, model) == Catch::Approx(148.21).margin(1e-9));
  // doubling the distance adds 10 * 2.08 * log10(2)
  double delta = path_loss_db(800.0, model) - path_loss_db(400.0, model);
  CHECK(delta == Catch::Approx(6.2614239098108095).epsilon(1e-12));
  // distances inside the reference clamp (including 0)
  CHECK(path_loss_db(0.0, model) == Catch::Approx(127.41).margin(1e-12));
  CHECK(path_loss_db(10.0, model) == Catch::Approx(127.41).margin(1e-12));
  CHECK_THROWS_AS(path_loss_db(-1.0, model), ConfigError);
}

TEST_CASE("shadowing adds a zero-mean normal with the configured sigma",
          "[phy]") {
  PathLossModel model;
  model.shadowing_sigma_db = 4.0;
  Rng rng(808);
  double base = path_loss_db(500.0, model);
  double sum = 0.0, sum_sq = 0.0;
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    double diff = path_loss_db(500.0, model, rng) - base;
    sum += diff;
    sum_sq += diff * diff;
  }
  double mean = sum / draws;
  double sd = std::sqrt(sum_sq / draws - mean * mean);
  CHECK(std::abs(mean) < 0.1);
  CHECK(sd == Catch::Approx(4.0).epsilon(0.05));

  // sigma 0 keeps the loss deterministic even through the drawing overload
  model.shadowing_sigma_db = 0.0;
  Rng rng2(808);
  CHECK(path_loss_db(500.0, model, rng2) == base);
}

TEST_CASE("received power is transmit power minus loss", "[phy]") {
  CHECK(received_power_dbm(14.0, 148.21) ==
        Catch::Approx(-134.21).margin(1e-12));
  CHECK(received_power_dbm(14.0, 0.0) == 14.0);
  CHECK(received_power_dbm(14.0, 120.0) - received_power_dbm(8.0, 120.0) ==
        Catch::Approx(6.0).margin(1e-12));
}

TEST_CASE("packet energy follows the radiated-power model", "[phy]") {
  // 14 dBm for the SF7 50-byte airtime
  CHECK(packet_energy_mj(14.0, 97.536) ==
        Catch::Approx(2.4499935498371834).epsilon(1e-12));
  // 0 dBm = 1 mW
  CHECK(packet_energy_mj(0.0, 1000.0) == Catch::Approx(1.0).margin(1e-12));
  // dB ratio 10^0.6
  CHECK(packet_energy_mj(14.0, 500.0) / packet_energy_mj(8.0, 500.0) ==
        Catch::Approx(3.9810717055349722).epsilon(1e-12));
  // strictly increasing in both arguments
  CHECK(packet_energy_mj(15.0, 100.0) > packet_energy_mj(14.0, 100.0));
  CHECK(packet_energy_mj(14.0, 101.0) > packet_energy_mj(14.0, 100.0));
}

TEST_CASE("sensitivity table and link validation", "[phy]") {
  LinkTables link;
  CHECK(link.sensitivity(7) == -123.0);
  CHECK(link.sensitivity(12) == -137.0);
  CHECK(link.inter_sf(7, 12) == -8.0);
  CHECK_THROWS_AS(link.sensitivity(6), ConfigError);

  LinkTables bad = link;
  bad.sensitivity_dbm[3] = -120.0;  // SF10 less sensitive than SF9
  CHECK_THROWS_AS(validate(bad), ConfigError);
  bad = link;
  bad.co_sf_capture_db = 0.0;
  CHECK_THROWS_AS(validate(bad), ConfigError);
}

TEST_CASE("reception: solo, symmetric collision, capture boundary, channels",
          "[phy]") {
  LinkTables link;
  const int ch1 = 868100000, ch2 = 868300000;

  // single transmission above sensitivity
  std::vector<Transmission> solo{make_tx(0, 7, ch1, 0, 100, -120.0)};
  CHECK(resolve_reception(solo, link) == std::vector<int>{0});

  // below the floor it is lost even alone
  solo[0].rx_power_dbm = -123.5;
  CHECK(resolve_reception(solo, link).empty());

  // two equal-power same-SF frames destroy each other
  std::vector<Transmission> pair{make_tx(0, 7, ch1, 0, 100, -110.0),
                                 make_tx(1, 7, ch1, 50, 100, -110.0)};
  CHECK(resolve_reception(pair, link).empty());

  // capture: A exactly 6 dB above B; the >= boundary decodes A
  pair[0].rx_power_dbm = -104.0;
  CHECK(resolve_reception(pair, link) == std::vector<int>{0});

  // at 5.9 dB the margin is unmet and both are lost
  pair[0].rx_power_dbm = -104.1;
  CHECK(resolve_reception(pair, link).empty());

  // different channels never interfere
  std::vector<Transmission> cross{make_tx(0, 7, ch1, 0, 100, -120.0),
                                  make_tx(1, 12, ch2, 0, 2300, -136.0)};
  CHECK(resolve_reception(cross, link) == std::vector<int>{0, 1});

  // disjoint times never interfere (touching endpoints do not overlap)
  std::vector<Transmission> seq{make_tx(0, 7, ch1, 0, 100, -110.0),
                                make_tx(1, 7, ch1, 100, 100, -110.0)};
  CHECK(resolve_reception(seq, link) == std::vector<int>{0, 1});
}

TEST_CASE("reception: inter-SF rejection threshold", "[phy]") {
  LinkTables link;
  const int ch = 868100000;
  // victim SF7 at -120; SF9 interferer at -113: -120 >= -113 - 8 passes
  std::vector<Transmission> group{make_tx(0, 7, ch, 0, 100, -120.0),
                                  make_tx(1, 9, ch, 0, 300, -113.0)};
  auto decoded = resolve_reception(group, link);
  CHECK(std::count(decoded.begin(), decoded.end(), 0) == 1);
  // a 2 dB stronger interferer breaks the victim
  group[1].rx_power_dbm = -111.0;
  decoded = resolve_reception(group, link);
  CHECK(std::count(decoded.begin(), decoded.end(), 0) == 0);
}

TEST_CASE("decoded set is anti-monotone under added interference", "[phy]") {
  LinkTables link;
  Rng rng(1234);
  const int channels[2] = {868100000, 868300000};
  for (int trial = 0; trial < 400; ++trial) {
    std::vector<Transmission> group;
    int n = 1 + rng.below(3);
    for (int i = 0; i < n; ++i)
      group.push_back(make_tx(i, 7 + rng.below(6), channels[rng.below(2)],
                              rng.uniform() * 500.0, 50.0 + rng.uniform() * 500.0,
                              -100.0 - rng.uniform() * 40.0));
    auto before = resolve_reception(group, link);
    group.push_back(make_tx(n, 7 + rng.below(6), channels[rng.below(2)],
                            rng.uniform() * 500.0, 50.0 + rng.uniform() * 500.0,
                            -100.0 - rng.uniform() * 40.0));
    auto after = resolve_reception(group, link);
    for (int id : after) {
      if (id == n) continue;
      // anything decoded after was decoded before
      CHECK(std::find(before.begin(), before.end(), id) != before.end());
    }
  }
}

TEST_CASE("channel isolation: joint resolve equals per-channel resolves",
          "[phy]") {
  LinkTables link;
  Rng rng(777);
  const int channels[3] = {868100000, 868300000, 868500000};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Transmission> group;
    int n = 2 + rng.below(4);
    for (int i = 0; i < n; ++i)
      group.push_back(make_tx(i, 7 + rng.below(6), channels[rng.below(3)],
                              rng.uniform() * 300.0, 50.0 + rng.uniform() * 400.0,
                              -100.0 - rng.uniform() * 40.0));
    auto joint = resolve_reception(group, link);
    std::vector<int> unioned;
    for (int ch : channels) {
      std::vector<Transmission> part;
      for (const Transmission& t : group)
        if (t.action.channel_hz == ch) part.push_back(t);
      auto partial = resolve_reception(part, link);
      unioned.insert(unioned.end(), partial.begin(), partial.end());
    }
    std::sort(unioned.begin(), unioned.end());
    CHECK(joint == unioned);
  }
}

TEST_CASE("resolve_reception matches the exhaustive checker on 10^4 groups",
          "[phy]") {
  LinkTables link;
  Rng rng(90210);
  const int channels[2] = {868100000, 868300000};
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<Transmission> group;
    int n = 1 + rng.below(4);  // up to 4 transmissions
    for (int i = 0; i < n; ++i)
      group.push_back(make_tx(i, 7 + rng.below(6), channels[rng.below(2)],
                              rng.uniform() * 400.0,
                              20.0 + rng.uniform() * 400.0,
                              -95.0 - rng.uniform() * 50.0));
    REQUIRE(resolve_reception(group, link) ==
            brute_force_decoded(group, link));
  }
  // empty set resolves to the empty result
  CHECK(resolve_reception(std::vector<Transmission>{}, link).empty());
}
