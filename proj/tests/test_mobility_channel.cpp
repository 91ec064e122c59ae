#include <doctest.h>

#include <cmath>
#include <sstream>

#include "iscc/channel.hpp"

using namespace iscc;
using namespace iscc::channel;

namespace {
SimConfig base_config() {
  SimConfig c;
  finalize_config(c);
  return c;
}
}  // namespace

TEST_CASE("mobility wraps around the ring") {
  World w;
  w.road_length_m = 1000;
  w.vehicles.push_back({0, 999.0, 0, 20.0, 1});
  w.vehicles.push_back({1, 5.0, 2, 0.0, -1});
  w.vehicles.push_back({2, 1.0, 2, 20.0, -1});
  advance_mobility(w, 0.1);
  CHECK(w.vehicles[0].position_m == doctest::Approx(1.0));
  CHECK(w.vehicles[1].position_m == 5.0);
  CHECK(w.vehicles[2].position_m == doctest::Approx(999.0));
  CHECK_THROWS_AS(advance_mobility(w, 0.0), std::invalid_argument);
}

TEST_CASE("placement is seeded and respects invariants") {
  auto c = base_config();
  auto a = place_vehicles(c, RngStreams(11));
  auto b = place_vehicles(c, RngStreams(11));
  auto d = place_vehicles(c, RngStreams(12));
  REQUIRE(a.vehicles.size() == 80);
  bool any_diff = false;
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) {
    CHECK(a.vehicles[i].position_m == b.vehicles[i].position_m);
    CHECK(a.vehicles[i].speed_mps == b.vehicles[i].speed_mps);
    any_diff |= a.vehicles[i].position_m != d.vehicles[i].position_m;
    CHECK(a.vehicles[i].position_m >= 0);
    CHECK(a.vehicles[i].position_m < 1000);
    CHECK(a.vehicles[i].speed_mps <= 70 / 3.6 + 1e-12);
    CHECK(a.vehicles[i].speed_mps >= 0.5 * 70 / 3.6 - 1e-12);
  }
  CHECK(any_diff);
  for (int s = 0; s < 1000; ++s) {
    advance_mobility(a, 1e-3);
    advance_mobility(b, 1e-3);
  }
  for (std::size_t i = 0; i < a.vehicles.size(); ++i) CHECK(a.vehicles[i].position_m == b.vehicles[i].position_m);
}

TEST_CASE("ring geometry") {
  CHECK(ring_offset(990, 10, 1000) == doctest::Approx(20));
  CHECK(ring_offset(10, 990, 1000) == doctest::Approx(-20));
  World w;
  w.road_length_m = 1000;
  w.lane_width_m = 3.5;
  w.vehicles.push_back({0, 0.0, 0, 20.0, 1});
  w.vehicles.push_back({1, 30.0, 0, 10.0, 1});
  w.vehicles.push_back({2, 40.0, 1, 0.0, 1});
  CHECK(separation_m(w, 0, 1) == doctest::Approx(30));
  CHECK(separation_m(w, 0, 2) == doctest::Approx(std::hypot(40, 3.5)));
  // leader slower than follower: gap closes at 10 m/s
  CHECK(radial_velocity_mps(w, 0, 1) == doctest::Approx(-10));
  CHECK(radial_velocity_mps(w, 1, 0) == doctest::Approx(-10));
}

TEST_CASE("pathloss values") {
  auto c = base_config();
  CHECK(pathloss_db(1.0, c) == doctest::Approx(47.86).epsilon(1e-4));
  CHECK(pathloss_db(100.0, c) == doctest::Approx(pathloss_db(1.0, c) + 55.0));
  CHECK(pathloss_db(100.0, c) == doctest::Approx(102.86).epsilon(1e-4));
  CHECK(pathloss_db(0.1, c) == pathloss_db(1.0, c));
}

TEST_CASE("fading disabled gives deterministic pathloss plus antenna gains") {
  auto c = base_config();
  c.fading_enabled = false;
  World w;
  w.road_length_m = 1000;
  w.vehicles.push_back({0, 0.0, 0, 0.0, 1});
  w.vehicles.push_back({1, 100.0, 0, 0.0, 1});
  ChannelModel m(c, RngStreams(1));
  auto s = m.sample(w, 0, 0);
  CHECK(s.v2v_gain(0, 1) == doctest::Approx(std::pow(10.0, (6.0 - pathloss_db(100.0, c)) / 10.0)).epsilon(1e-12));
  CHECK(s.v2i[0] == doctest::Approx(std::pow(10.0, (6.0 - pathloss_db(20.0, c)) / 10.0)).epsilon(1e-12));
}

TEST_CASE("expected gain decreases with distance when fading is off") {
  auto c = base_config();
  c.fading_enabled = false;
  World w;
  w.road_length_m = 10000;
  for (int i = 0; i < 10; ++i) w.vehicles.push_back({i, 20.0 * i * i + 0.5 * i, 0, 0.0, 1});
  ChannelModel m(c, RngStreams(1));
  auto s = m.sample(w, 0, 0);
  for (int j = 2; j < 10; ++j) CHECK(s.v2v_gain(0, j) < s.v2v_gain(0, j - 1));
}

TEST_CASE("snapshots are quasi-static, symmetric and seeded") {
  auto c = base_config();
  auto w = place_vehicles(c, RngStreams(5));
  ChannelModel m1(c, RngStreams(5)), m2(c, RngStreams(5));
  auto a = m1.sample(w, 17, 0);
  auto b = m1.sample(w, 17, 0);
  auto d = m2.sample(w, 17, 0);
  CHECK(a.v2v == b.v2v);
  CHECK(a.v2i == b.v2i);
  CHECK(a.v2v == d.v2v);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      if (i == j) continue;
      CHECK(a.v2v_gain(i, j) == a.v2v_gain(j, i));
      CHECK(a.v2v_gain(i, j) > 0);
      CHECK(std::isfinite(a.v2v_gain(i, j)));
    }
  // V2V fading held within the epoch, V2I redrawn per slot
  auto e = m1.sample(w, 18, 0);
  CHECK(e.shadowing_db == a.shadowing_db);
  CHECK(e.v2i != a.v2i);
  auto f = m1.sample(w, 118, 1);
  CHECK(f.shadowing_db != a.shadowing_db);
}

TEST_CASE("V2I fading has unit mean") {
  auto c = base_config();
  World w;
  w.road_length_m = 1000;
  w.vehicles.push_back({0, 0.0, 0, 0.0, 1});
  w.vehicles.push_back({1, 500.0, 0, 0.0, 1});
  c.fading_enabled = false;
  ChannelModel flat(c, RngStreams(2));
  const double g0 = flat.sample(w, 0, 0).v2i[0];
  c.fading_enabled = true;
  ChannelModel m(c, RngStreams(2));
  double sum = 0;
  const int n = 100000;
  for (int t = 0; t < n; ++t) sum += m.sample(w, t, t / 100).v2i[0] / g0;
  CHECK(sum / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("channel trace export") {
  auto c = base_config();
  c.fading_enabled = false;
  World w;
  w.road_length_m = 1000;
  w.vehicles.push_back({0, 0.0, 0, 0.0, 1});
  w.vehicles.push_back({1, 100.0, 0, 0.0, 1});
  ChannelModel m(c, RngStreams(1));
  std::ostringstream out;
  write_channel_trace(out, m.sample(w, 3, 0));
  const std::string s = out.str();
  CHECK(s.rfind("3,0,1,", 0) == 0);
  CHECK(s.find("3,1,-1,") != std::string::npos);
}
