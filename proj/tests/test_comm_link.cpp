#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "iscc/comm.hpp"

using namespace iscc;
using namespace iscc::comm;

namespace {
SimConfig base_config() {
  SimConfig c;
  finalize_config(c);
  return c;
}

channel::ChannelSnapshot line_snapshot(const std::vector<double>& pos, double gain_scale = 1e-9) {
  channel::ChannelSnapshot s;
  s.n = static_cast<int>(pos.size());
  s.v2v.assign(s.n * s.n, 0.0);
  s.distance_m.assign(s.n * s.n, 0.0);
  for (int i = 0; i < s.n; ++i)
    for (int j = 0; j < s.n; ++j) {
      if (i == j) continue;
      const double d = std::abs(pos[i] - pos[j]);
      s.distance_m[i * s.n + j] = d;
      s.v2v[i * s.n + j] = gain_scale / (d * d);
    }
  s.v2i.assign(s.n, 1e-10);
  return s;
}
}  // namespace

TEST_CASE("packet arrivals") {
  auto c = base_config();
  auto rng = RngStreams(5).stream(Stream::traffic, 0);
  long hits = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) {
    const auto a = arrivals(rng, c);
    CHECK((a == 0 || a == 1520));
    hits += a > 0;
  }
  CHECK(std::abs(hits / double(n) - 0.01) < 0.002);
  c.msg_rate_hz = 0;
  for (int t = 0; t < 1000; ++t) CHECK(arrivals(rng, c) == 0);
}

TEST_CASE("sole transmitter sees only noise") {
  auto c = base_config();
  auto ch = line_snapshot({0, 50, 100});
  std::vector<Transmitter> tx{{0, 10, 4}};
  auto s = sinr_matrix(tx, ch, c);
  const double noise = c.noise_psd_w_per_hz() * 12 * c.scs_hz * 4;
  CHECK(s[1] == doctest::Approx(c.tx_power_w * ch.v2v_gain(0, 1) / noise));
  CHECK(s[0] == 0.0);
}

TEST_CASE("co-resource interference only") {
  auto c = base_config();
  auto ch = line_snapshot({0, 50, 100, 150}, 1e-3);
  std::vector<Transmitter> same{{0, 10, 4}, {2, 10, 4}};
  std::vector<Transmitter> other{{0, 10, 4}, {2, 11, 4}};
  auto s_same = sinr_matrix(same, ch, c);
  auto s_other = sinr_matrix(other, ch, c);
  CHECK(s_same[1] < s_other[1]);
  // receiver 1 is equidistant from 0 and 2: interference-limited SINR ~ 1
  CHECK(s_same[1] == doctest::Approx(1.0).epsilon(1e-3));
  auto alone = sinr_matrix(std::vector<Transmitter>{{0, 10, 4}}, ch, c);
  CHECK(s_other[1] == doctest::Approx(alone[1]));
}

TEST_CASE("PRR and rate from receiver SINRs") {
  auto c = base_config();
  std::vector<double> row{0, db_to_linear(10), db_to_linear(9), db_to_linear(5)};
  std::vector<int> rx{1, 2, 3};
  auto o = tx_outcome(rx, row, 4, 10000, c);
  CHECK(o.prr == doctest::Approx(2.0 / 3.0));
  CHECK(o.decoded == std::vector<std::uint8_t>{1, 1, 0});
  CHECK(o.rate_eff_bps <= o.rate_bps);

  std::vector<double> row15{0, 15, 15};
  auto o15 = tx_outcome(std::vector<int>{1, 2}, row15, 4, 0, c);
  CHECK(o15.rate_bps == doctest::Approx(2.88e6));
  CHECK(o15.delivered_bits == 2880);

  std::vector<double> low{0, 0.1};
  auto z = tx_outcome(std::vector<int>{1}, low, 4, 5000, c);
  CHECK(z.prr == 0.0);
  CHECK(z.rate_eff_bps == 0.0);
  CHECK(z.delivered_bits == 0);
  CHECK(z.sl_delay_s == doctest::Approx(1.0));  // capped
  CHECK_THROWS_AS(tx_outcome(rx, row, 0, 0, c), std::invalid_argument);
}

TEST_CASE("PRR is non-increasing in the decode threshold") {
  auto c = base_config();
  std::vector<double> row{0, 2, 5, 8, 13, 40};
  std::vector<int> rx{1, 2, 3, 4, 5};
  double prev = 1.0;
  for (double thr = -5; thr <= 20; thr += 1) {
    c.snr_decode_threshold_db = thr;
    const double p = tx_outcome(rx, row, 2, 0, c).prr;
    CHECK(p <= prev);
    prev = p;
  }
}

TEST_CASE("isolated transmitter gets PRR 1") {
  auto c = base_config();
  auto ch = line_snapshot({0, 500});
  auto rx = receiver_set(0, ch, c);
  CHECK(rx.empty());
  auto o = tx_outcome(rx, std::vector<double>{0, 0}, 4, 100, c);
  CHECK(o.prr == 1.0);
  CHECK(o.avg_sinr_linear == doctest::Approx(c.sinr_threshold_linear()));
  CHECK(o.delivered_bits == static_cast<std::int64_t>(std::floor(o.rate_bps * c.slot_s)));
  auto ch2 = line_snapshot({0, 150, 199.9, 250});
  CHECK(receiver_set(0, ch2, c) == std::vector<int>{1, 2});
}

TEST_CASE("queue update and conservation") {
  auto c = base_config();
  CommState st;
  st.queue_bits = 5000;
  TxOutcome o;
  o.delivered_bits = 3000;
  CHECK(update_queue(st, o, 1520) == 3000);
  CHECK(st.queue_bits == 3520);
  CommState z;
  CHECK(update_queue(z, o, 0) == 0);
  CHECK(z.queue_bits == 0);

  auto rng = RngStreams(9).stream(Stream::traffic, 2);
  CommState q;
  std::int64_t in = 0, served = 0;
  const auto q0 = q.queue_bits;
  for (int t = 0; t < 20000; ++t) {
    TxOutcome d;
    d.delivered_bits = static_cast<std::int64_t>(rng.uniform_int(3000));
    const auto a = arrivals(rng, c) * 3;
    served += update_queue(q, d, a);
    in += a;
    CHECK(q.queue_bits >= 0);
  }
  CHECK(in == served + q.queue_bits - q0);
}

TEST_CASE("EMAs move only on transmissions") {
  auto c = base_config();
  CommState st;
  update_emas(st, idle_outcome(0, c), c);
  CHECK(st.prr_ema == 0.0);
  TxOutcome o;
  o.transmitted = true;
  o.prr = 1.0;
  o.rate_eff_bps = 1e6;
  update_emas(st, o, c);
  CHECK(st.prr_ema == doctest::Approx(0.1));
  CHECK(st.rate_eff_ema == doctest::Approx(1e5));
}

TEST_CASE("communication utility and deficiency") {
  auto c = base_config();
  const double rmin = min_rate_eff_bps(c);
  CHECK(rmin == doctest::Approx(1.52e6));
  auto u = comm_utility(1.0, rmin, c);
  CHECK(u.utility == doctest::Approx(1.0));
  CHECK(u.deficiency == doctest::Approx(0.0));
  auto z = comm_utility(0, 0, c);
  CHECK(z.utility == 0.0);
  CHECK(z.deficiency == 1.0);
  auto m = comm_utility(0.8, 0.5 * rmin, c);
  CHECK(m.utility == doctest::Approx(0.65));
  CHECK(m.deficiency == doctest::Approx(0.35));
  CHECK(comm_utility(1.0, 10 * rmin, c).deficiency == 0.0);
}

TEST_CASE("minimum PRB demand") {
  auto c = base_config();
  CHECK(min_prb_demand(0.95, 15, c) == 3);
  CHECK_FALSE(min_prb_demand(0.0, 15, c).has_value());
  CHECK_FALSE(min_prb_demand(0.9, 0.0, c).has_value());
  c.d_c_min_bits = 0;
  CHECK(min_prb_demand(0.0, 0.0, c) == 0);
}

TEST_CASE("maximum reliable distance") {
  std::vector<PrrBin> t{{50, 0.95}, {100, 0.9}, {150, 0.7}};
  CHECK(max_reliable_distance(t, 0.8) == 100);
  CHECK(max_reliable_distance(t, 0.99) == 0);
  CHECK(max_reliable_distance(t, 0.5) == 150);
  CHECK_THROWS_AS(max_reliable_distance(std::vector<PrrBin>{}, 0.8), std::invalid_argument);
}

TEST_CASE("PRR by distance bins") {
  PrrByDistance p;
  p.add(75, true);
  p.add(84, false);
  p.add(90, true);  // next bin
  CHECK(p.prr_at(80).value() == doctest::Approx(0.5));
  CHECK(p.prr_at(100).value() == 1.0);
  CHECK_FALSE(p.prr_at(20).has_value());
  PrrByDistance q;
  q.add(80, true);
  p.merge(q);
  CHECK(p.prr_at(80).value() == doctest::Approx(2.0 / 3.0));
  auto t = p.table();
  REQUIRE(t.size() == 2);
  CHECK(t[0].midpoint_m == 80);
}

TEST_CASE("metrics row") {
  std::ostringstream out;
  TxOutcome o;
  o.prr = 0.5;
  write_metrics_row(out, 7, 2, o, 0.25, 1520);
  CHECK(out.str().rfind("7,2,0.5,", 0) == 0);
}
