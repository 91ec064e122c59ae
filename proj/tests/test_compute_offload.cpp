#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "iscc/compute.hpp"
#include "iscc/rng.hpp"

using namespace iscc;
using namespace iscc::compute;

namespace {
SimConfig base_config() {
  SimConfig c;
  finalize_config(c);
  return c;
}
}  // namespace

TEST_CASE("local schedule gives communication priority") {
  auto c = base_config();
  CHECK(local_capacity_cycles(c) == doctest::Approx(2e6));
  auto s = local_schedule(1.5e6, 1.0e6, c);
  CHECK(s.f_c == doctest::Approx(1.5e6));
  CHECK(s.f_s == doctest::Approx(0.5e6));
  CHECK(s.ov_c == 0.0);
  CHECK(s.ov_s == doctest::Approx(0.5e6));
  CHECK(s.t_loc_c_s == doctest::Approx(0.75e-3));
  CHECK(s.t_loc_s_s == doctest::Approx(1e-3));
  auto big = local_schedule(3e6, 1e6, c);
  CHECK(big.f_c == doctest::Approx(2e6));
  CHECK(big.f_s == 0.0);
  CHECK(big.ov_c == doctest::Approx(1e6));
  auto z = local_schedule(0, 0, c);
  CHECK(z.f_c == 0);
  CHECK(z.ov_s == 0);
  CHECK(z.e_loc_j == 0);
  CHECK_THROWS_AS(local_schedule(-1, 0, c), std::invalid_argument);
}

TEST_CASE("local energy") {
  auto c = base_config();
  auto s = local_schedule(2e6, 0, c);
  CHECK(s.e_loc_j == doctest::Approx(0.8e-3));
  // cube law in the processed volume
  auto h = local_schedule(1e6, 0, c);
  CHECK(h.e_loc_j == doctest::Approx(0.8e-3 / 8));
}

TEST_CASE("local schedule invariants on random demands") {
  auto c = base_config();
  auto rng = RngStreams(4).stream(Stream::traffic, 0);
  const double cap = local_capacity_cycles(c);
  for (int k = 0; k < 2000; ++k) {
    const double vc = rng.uniform() * 4e6, vs = rng.uniform() * 4e6;
    auto s = local_schedule(vc, vs, c);
    CHECK(s.f_c + s.f_s <= cap * (1 + 1e-12));
    CHECK(s.f_c <= vc);
    CHECK(s.f_s <= vs);
    CHECK(s.ov_c + s.f_c == doctest::Approx(vc));
    CHECK(s.ov_s + s.f_s == doctest::Approx(vs));
    CHECK((s.f_c + s.f_s) / c.slot_s <= c.f_local_hz * (1 + 1e-12));
  }
}

TEST_CASE("offload link") {
  auto c = base_config();
  CHECK(offload_bandwidth_hz(2, c) == doctest::Approx(360e3));
  std::vector<double> g{1e-10, 1e-10, 1e-12};
  std::vector<int> n_o{2, 2, 2};
  std::vector<int> one{0};
  auto s1 = offload_sinr(one, g, n_o, c);
  CHECK(s1[0] == doctest::Approx(c.tx_power_w * 1e-10 / (c.noise_psd_w_per_hz() * 360e3)));
  CHECK(s1[1] == 0.0);
  std::vector<int> two{0, 1};
  auto s2 = offload_sinr(two, g, n_o, c);
  CHECK(s2[0] == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(s2[1] == doctest::Approx(s2[0]));
  CHECK(offload_rate_bps(15, 0, c) == 0.0);
  CHECK(offload_rate_bps(15, 2, c) == doctest::Approx(360e3 * 4));
}

TEST_CASE("upload FIFO drains in order and keeps partial chunks") {
  UploadQueue q;
  q.push({TaskClass::comm, Route::mec, 3000, 3e5});
  q.push({TaskClass::sens, Route::cloud, 5000, 2.5e6});
  CHECK(q.backlog_bits() == 8000);
  auto d = q.transmit(4000, 4e6);
  CHECK(d.bits_c == 3000);
  CHECK(d.bits_s == 1000);
  CHECK(d.airtime_s == doctest::Approx(1e-3));
  REQUIRE(d.completed.size() == 1);
  CHECK(d.completed[0].cls == TaskClass::comm);
  CHECK(q.backlog_bits() == 4000);
  auto none = q.transmit(0, 0);
  CHECK(none.completed.empty());
  CHECK(q.backlog_bits() == 4000);
  auto d2 = q.transmit(1e9, 1e12);
  REQUIRE(d2.completed.size() == 1);
  CHECK(d2.completed[0].route == Route::cloud);
  CHECK(d2.completed[0].cycles == 2.5e6);
  CHECK(q.empty());
  CHECK(q.backlog_bits() == 0);
}

TEST_CASE("MEC strict priority") {
  auto c = base_config();
  MecState m;
  m.l_c = 15e6;
  m.l_s = 10e6;
  step_mec(m, 0, 0, c);
  CHECK(m.served_c == doctest::Approx(15e6));
  CHECK(m.served_s == doctest::Approx(5e6));
  CHECK(m.l_c == 0);
  CHECK(m.l_s == doctest::Approx(5e6));
  MecState full;
  full.l_c = 2e7;
  full.l_s = 1e6;
  step_mec(full, 0, 0, c);
  CHECK(full.served_s == 0.0);
  MecState q;
  step_mec(q, 4e7, 2e7, c);
  CHECK(q.que_delay_c_s == doctest::Approx(2e-3));
  CHECK(q.que_delay_s_s == doctest::Approx(3e-3));
}

TEST_CASE("MEC conservation and priority on random traffic") {
  auto c = base_config();
  auto rng = RngStreams(8).stream(Stream::traffic, 3);
  MecState m;
  for (int t = 0; t < 5000; ++t) {
    const double ac = rng.uniform() * 1.5e7, as = rng.uniform() * 1.5e7;
    const double lc0 = m.l_c, ls0 = m.l_s;
    step_mec(m, ac, as, c);
    CHECK(m.l_c - lc0 == doctest::Approx(ac - m.served_c));
    CHECK(m.l_s - ls0 == doctest::Approx(as - m.served_s));
    CHECK(m.served_c + m.served_s <= c.c_mec_cycles_per_slot * (1 + 1e-12));
    if (m.served_s > 0) CHECK(m.served_c == doctest::Approx(lc0));
    CHECK(m.l_c >= 0);
    CHECK(m.l_s >= 0);
  }
}

TEST_CASE("completion follows the slower branch") {
  auto c = base_config();
  LocalComputeState loc;
  loc.t_loc_c_s = 0.4e-3;
  loc.t_loc_s_s = 0.9e-3;
  loc.ov_c = 0;
  MecState mec;
  CompletionInput in;
  in.eta_c = 1;
  in.t_tx_c_s = 1.2e-3;
  auto o = completion(loc, in, mec, c);
  CHECK(o.t_comp_c_s == doctest::Approx(1.2e-3));
  in.eta_c = 0;
  auto o0 = completion(loc, in, mec, c);
  CHECK(o0.t_rem_c_s == 0.0);
  CHECK(o0.t_comp_c_s == doctest::Approx(0.4e-3));
  CHECK(o0.t_rem_s_s == 0.0);

  in.eta_s = 2;
  in.t_tx_s_s = 1e-3;
  auto oc = completion(loc, in, mec, c);
  CHECK(oc.t_rem_s_s == doctest::Approx(1e-3 + c.t_bh_s + c.t_cl_s));
  in.eta_s = 1;
  mec.que_delay_s_s = 3e-3;
  loc.ov_s = 2e7;
  auto om = completion(loc, in, mec, c);
  CHECK(om.t_rem_s_s == doctest::Approx(1e-3 + 3e-3 + 1e-3));
  in.sl_delay_s = 5e-3;
  CHECK(completion(loc, in, mec, c).t_e2e_c_s == doctest::Approx(5e-3 + 0.4e-3));
}

TEST_CASE("completion is monotone in both branches") {
  auto c = base_config();
  MecState mec;
  CompletionInput in;
  in.eta_c = 1;
  double prev = 0;
  for (double tl = 0; tl < 5e-3; tl += 0.5e-3)
    for (double tx = 0; tx < 5e-3; tx += 0.5e-3) {
      LocalComputeState loc;
      loc.t_loc_c_s = tl;
      in.t_tx_c_s = tx;
      const double t = completion(loc, in, mec, c).t_comp_c_s;
      CHECK(t >= std::max(tl, tx) - 1e-15);
      if (tx > 0) CHECK(t >= prev - 1e-15);
      prev = t;
    }
}

TEST_CASE("energy accounting") {
  auto c = base_config();
  CHECK(sensing_energy_j(4, c) == doctest::Approx(53.2e-6).epsilon(1e-3));
  auto loc = local_schedule(1e6, 1e6, c);
  CompletionInput in;
  in.e_tx_c_j = 1e-4;
  in.e_tx_s_j = 2e-4;
  in.m_s_sym = 6;
  in.sensing_active = true;
  auto o = completion(loc, in, MecState{}, c);
  CHECK(o.e_tot_j == doctest::Approx(loc.e_loc_j + 1e-4 + 2e-4 + sensing_energy_j(6, c)).epsilon(1e-15));
  in.sensing_active = false;
  CHECK(completion(loc, in, MecState{}, c).e_sens_j == 0.0);
}

TEST_CASE("computation penalty") {
  auto c = base_config();
  CHECK(comp_penalty(c.delta_c_s, c.delta_s_s, c.e_max_j_per_slot, c) == doctest::Approx(1.0));
  CHECK(comp_penalty(0, 0, 0, c) == 0.0);
  CHECK(comp_penalty(10e-3, 25e-3, 25e-3, c) == doctest::Approx(0.5));
  CHECK(comp_penalty(10, 10, 10, c) == doctest::Approx(1.0));
}

TEST_CASE("violation flags") {
  auto c = base_config();
  LocalComputeState loc;
  CompletionInput in;
  in.sl_delay_s = 0.5;
  auto o = completion(loc, in, MecState{}, c);
  CHECK(o.viol_delay_c);
  CHECK_FALSE(o.viol_delay_s);
  CHECK_FALSE(o.viol_energy);
}

TEST_CASE("compute row") {
  std::ostringstream out;
  LocalComputeState loc;
  loc.ov_c = 5;
  OffloadOutcome o;
  o.t_comp_c_s = 2e-3;
  write_compute_row(out, 3, 1, loc, 1, 2, o, MecState{});
  CHECK(out.str() == "3,1,5,0,1,2,2,0,0,0,0\n");
}
