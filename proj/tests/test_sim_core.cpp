#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/resource_pool.hpp"
#include "iscc/rng.hpp"

using namespace iscc;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& text) {
  auto p = std::filesystem::temp_directory_path() / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("defaults derive a 52-PRB pool and 1 ms slots") {
  SimConfig c;
  finalize_config(c);
  CHECK(c.n_prb_pool == 52);
  CHECK(c.slot_s == doctest::Approx(1e-3).epsilon(1e-15));
  CHECK(c.sym_s == doctest::Approx(1.0 / 15e3));
  CHECK(c.n_subchannels() == 4);
  CHECK(c.slots_per_epoch() == 100);
  CHECK(c.pool_size() == 400);
  CHECK(c.vehicle_count() == 80);
  CHECK(c.tx_power_dbm() == doctest::Approx(23.0).epsilon(1e-3));
}

TEST_CASE("numerology drives slot and spacing") {
  SimConfig c;
  c.numerology_mu = 1;
  finalize_config(c);
  CHECK(c.scs_hz == 30e3);
  CHECK(c.slot_s == 0.5e-3);
  CHECK(c.n_prb_pool == static_cast<int>(std::floor(10e6 / 360e3 - 3.5)));
}

TEST_CASE("weights must sum to one") {
  unsetenv("ISCC_SEED");
  CHECK_NOTHROW(parse_config_toml("[objective]\nweights = [0.30, 0.35, 0.35]\n"));
  auto c = parse_config_toml("[objective]\nweights = [0.30, 0.35, 0.35]\n");
  CHECK(c.weights[0] + c.weights[1] + c.weights[2] == 1.0);
  try {
    parse_config_toml("[objective]\nweights = [0.5, 0.5, 0.5]\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("weights must sum to 1") != std::string::npos);
  }
}

TEST_CASE("unknown keys and bad values are rejected with the field name") {
  CHECK_THROWS_AS(parse_config_toml("[radio]\nbogus_hz = 1.0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_toml("[nosuchsection]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_toml("radio = [ broken"), ConfigError);
  try {
    parse_config_toml("[radio]\ntx_power_w = -1.0\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("radio.tx_power_w") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config_toml("[radio]\nn_sl_prb_per_vehicle = 60\n"), ConfigError);
  CHECK_THROWS_AS(parse_config_toml("[radio]\nscs_hz = 30000.0\n"), ConfigError);
  CHECK_NOTHROW(parse_config_toml("[radio]\nscs_hz = 15000.0\n"));
  CHECK_THROWS_AS(parse_config_json("{\"radio\": {\"n_o_max_prb\": -1}}"), ConfigError);
}

TEST_CASE("density and road length must give a whole vehicle count") {
  CHECK_THROWS_AS(parse_config_toml("[mobility]\ndensity_veh_per_km = 45.5\n"), ConfigError);
  auto c = parse_config_toml("[mobility]\ndensity_veh_per_km = 40.0\nn_vehicles = 8\n");
  CHECK(c.vehicle_count() == 8);
  CHECK(c.road_length_m == doctest::Approx(200.0));
  CHECK_THROWS_AS(parse_config_toml("[mobility]\ndensity_veh_per_km = 40.0\nn_vehicles = 8\nroad_length_m = 300.0\n"),
                  ConfigError);
}

TEST_CASE("saved config round-trips in both formats") {
  unsetenv("ISCC_SEED");
  SimConfig c;
  c.density_veh_per_km = 40;
  c.n_vehicles = 8;
  c.msg_rate_hz = 20;
  c.actor_hidden = {16, 8};
  c.seed = 1234567890123ULL;
  c.fading_enabled = false;
  finalize_config(c);
  const auto pt = std::filesystem::temp_directory_path() / "iscc_rt.toml";
  const auto pj = std::filesystem::temp_directory_path() / "iscc_rt.json";
  save_config(c, pt);
  save_config(c, pj);
  CHECK(load_config(pt) == c);
  CHECK(load_config(pj) == c);
  CHECK(config_hash(load_config(pt)) == config_hash(c));
}

TEST_CASE("ISCC_SEED overrides the seed") {
  auto p = temp_file("iscc_seed.toml", "seed = 5\n");
  setenv("ISCC_SEED", "77", 1);
  CHECK(load_config(p).seed == 77);
  setenv("ISCC_SEED", "x7", 1);
  CHECK_THROWS_AS(load_config(p), ConfigError);
  unsetenv("ISCC_SEED");
  CHECK(load_config(p).seed == 5);
}

TEST_CASE("config hash changes with any field") {
  SimConfig a;
  finalize_config(a);
  SimConfig b = a;
  b.rho_si = 2e-7;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("streams are deterministic and key-separated") {
  RngStreams rng(7);
  auto a = rng.stream("fading", 3);
  auto b = rng.stream("fading", 3);
  auto c = rng.stream("fading", 4);
  auto d = rng.stream("traffic", 3);
  bool differs_c = false, differs_d = false;
  for (int i = 0; i < 100; ++i) {
    const auto x = a();
    CHECK(x == b());
    differs_c |= (x != c());
    differs_d |= (x != d());
  }
  CHECK(differs_c);
  CHECK(differs_d);
  CHECK_THROWS_AS(rng.stream("x", 0), std::invalid_argument);
  CHECK(RngStreams(8).stream(Stream::fading, 3)() != RngStreams(7).stream(Stream::fading, 3)());
}

TEST_CASE("seek reproduces any position") {
  auto g = RngStreams(1).stream(Stream::mac, 0);
  std::vector<std::uint64_t> seq;
  for (int i = 0; i < 10; ++i) seq.push_back(g());
  g.seek(5);
  CHECK(g() == seq[5]);
}

TEST_CASE("transforms have the right moments") {
  auto g = RngStreams(3).stream(Stream::mobility, 0);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0, se = 0;
  std::vector<int> counts(7, 0);
  for (int i = 0; i < n; ++i) {
    su += g.uniform();
    const double z = g.normal();
    sn += z;
    sn2 += z * z;
    se += g.exponential();
    counts[g.uniform_int(7)]++;
  }
  CHECK(su / n == doctest::Approx(0.5).epsilon(0.01));
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(sn2 / n == doctest::Approx(1.0).epsilon(0.02));
  CHECK(se / n == doctest::Approx(1.0).epsilon(0.02));
  for (int k : counts) CHECK(k == doctest::Approx(n / 7.0).epsilon(0.03));
}

TEST_CASE("pool indexing") {
  SimConfig c;
  finalize_config(c);
  auto pool = ResourcePool::from_config(c);
  CHECK(pool.size() == 400);
  CHECK(pool.index(3, 2) == 14);
  CHECK(pool.offset(14) == 3);
  CHECK(pool.subchannel(14) == 2);
  CHECK_THROWS(pool.index(100, 0));
}
