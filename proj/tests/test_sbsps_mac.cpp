#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "iscc/mac.hpp"

using namespace iscc;
using namespace iscc::mac;

namespace {
ResourcePool small_pool() { return ResourcePool{100, 4, 12, 52}; }

// Reference feasibility: every index in range, candidate-or-frozen resource, and n_s + n_c <= n_sl.
bool reference_feasible(const ActionDomain& d, const std::vector<int>& cands, const Reservation& cur, bool pending,
                        const ActionVector& a) {
  const auto sz = d.head_sizes();
  for (int h = 0; h < kNumHeads; ++h)
    if (a.idx[h] < 0 || a.idx[h] >= sz[h]) return false;
  if (pending) {
    if (std::find(cands.begin(), cands.end(), a.idx[kResource]) == cands.end()) return false;
  } else {
    if (a.idx[kResource] != cur.resource || a.idx[kRc] != cur.rc_index || a.idx[kKeep] != cur.keep_index)
      return false;
  }
  return a.idx[kNs] + a.idx[kNc] <= d.n_sl;
}
}  // namespace

TEST_CASE("observations must arrive in slot order") {
  ResourceGrid g(small_pool(), 1000, 100);
  std::vector<HeardReservation> none;
  g.record_observation(5, none, -128);
  CHECK_THROWS_AS(g.record_observation(5, none, -128), std::invalid_argument);
  CHECK_THROWS_AS(g.record_observation(4, none, -128), std::invalid_argument);
  std::vector<HeardReservation> bad{{400, -90, 12}};
  CHECK_THROWS_AS(g.record_observation(6, bad, -128), std::out_of_range);
}

TEST_CASE("empty grid keeps the whole pool and has zero CBR") {
  ResourceGrid g(small_pool(), 1000, 100);
  CHECK(g.cbr() == 0.0);
  CHECK(g.candidate_set(-128, 0.2, 3).size() == 400);
}

TEST_CASE("heard reservations above threshold are excluded") {
  ResourceGrid g(small_pool(), 1000, 100);
  std::vector<HeardReservation> h{{3, -100, 12}, {7, -130, 12}};
  g.record_observation(0, h, -128);
  auto c = g.candidate_set(-128, 0.2, 3);
  CHECK(c.size() == 399);
  CHECK(std::find(c.begin(), c.end(), 3) == c.end());
  CHECK(std::find(c.begin(), c.end(), 7) != c.end());
  CHECK(g.observed_busy(3, 0, -128));
  CHECK_FALSE(g.observed_busy(7, 0, -128));
  CHECK_FALSE(g.observed_busy(3, 1, -128));
}

TEST_CASE("threshold is raised until the retained fraction is met") {
  ResourceGrid g(small_pool(), 1000, 100);
  // 380 resources at -100 dBm, 20 at -90 dBm: base threshold leaves nothing
  for (int s = 0; s < 100; ++s) {
    std::vector<HeardReservation> h;
    for (int k = 0; k < 4; ++k) {
      const int r = s * 4 + k;
      h.push_back({r, r < 20 ? -90.0 : -100.0, 12});
    }
    g.record_observation(s, h, -128);
  }
  auto c = g.candidate_set(-128, 0.2, 3);
  CHECK(c.size() == 380);  // -128 + 10 * 3 = -98 is the first level that passes
  CHECK(c.size() >= 80);
  CHECK(std::find(c.begin(), c.end(), 5) == c.end());
  auto c2 = g.candidate_set(-128, 1.0, 3);
  CHECK(c2.size() == 400);
}

TEST_CASE("co-resource transmissions merge into one busy marker") {
  ResourceGrid g(small_pool(), 1000, 100);
  std::vector<HeardReservation> h{{2, -100, 12}, {2, -95, 12}};
  g.record_observation(0, h, -128);
  CHECK(g.cbr() == doctest::Approx(12.0 / 52.0));
  CHECK(g.candidate_set(-128, 0.2, 3).size() == 399);
  CHECK(g.observed_busy(2, 0, -96));  // merged level is the max
}

TEST_CASE("CBR over the last window") {
  ResourceGrid g(small_pool(), 1000, 100);
  std::vector<HeardReservation> busy{{0, -100, 12}, {1, -100, 12}};
  std::vector<HeardReservation> none;
  for (int s = 0; s < 100; ++s) g.record_observation(s, s % 2 == 0 ? busy : none, -128);
  CHECK(g.cbr() == doctest::Approx(0.5 * 24.0 / 52.0));
  for (int s = 100; s < 200; ++s) g.record_observation(s, none, -128);
  CHECK(g.cbr() == 0.0);
  // below threshold does not count as busy
  ResourceGrid g2(small_pool(), 1000, 100);
  std::vector<HeardReservation> weak{{0, -140, 12}};
  g2.record_observation(0, weak, -128);
  CHECK(g2.cbr() == 0.0);
}

TEST_CASE("entries leave the sensing window") {
  ResourceGrid g(small_pool(), 1000, 100);
  std::vector<HeardReservation> h{{9, -100, 12}};
  std::vector<HeardReservation> none;
  g.record_observation(0, h, -128);
  g.record_observation(999, none, -128);
  CHECK(g.candidate_set(-128, 0.2, 3).size() == 399);
  g.record_observation(1000, none, -128);
  CHECK(g.candidate_set(-128, 0.2, 3).size() == 400);
}

TEST_CASE("reservation counter ticks and expiry branches") {
  std::vector<int> rc{5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  auto rng = RngStreams(3).stream(Stream::mac, 0);
  Reservation r{17, 2, 0, 0, 0.0, 100};
  CHECK(tick_reservation(r, rng, rc) == ReselectionEvent::none);
  CHECK(r.rc_remaining == 1);
  CHECK(tick_reservation(r, rng, rc) == ReselectionEvent::reselect);
  CHECK(r.rc_remaining == 0);

  Reservation k{17, 1, 0, 4, 1.0, 100};
  CHECK(tick_reservation(k, rng, rc) == ReselectionEvent::keep);
  CHECK(k.resource == 17);
  CHECK(k.rc_remaining >= 5);
  CHECK(k.rc_remaining <= 15);
  CHECK(k.rc_remaining == rc[k.rc_index]);
}

TEST_CASE("keep frequency follows the keep probability") {
  std::vector<int> rc{5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  auto rng = RngStreams(11).stream(Stream::mac, 1);
  for (double p : {0.2, 0.6}) {
    int keeps = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      Reservation r{1, 1, 0, 0, p, 100};
      if (tick_reservation(r, rng, rc) == ReselectionEvent::keep) ++keeps;
    }
    const double sd = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(keeps / double(n) - p) < 4 * sd);
  }
}

TEST_CASE("action domain layout") {
  SimConfig c;
  finalize_config(c);
  auto d = ActionDomain::from_config(c);
  const auto sz = d.head_sizes();
  CHECK(sz[kResource] == 400);
  CHECK(sz[kRc] == 11);
  CHECK(sz[kKeep] == 5);
  CHECK(sz[kNs] == 13);
  CHECK(sz[kMs] == 14);
  CHECK(d.total_logits() == 466);
  auto off = d.head_offsets();
  CHECK(off[kRc] == 400);
  CHECK(off[kEtaS] + sz[kEtaS] == 466);
  CHECK(head_name(kNo) == "n_o");
}

TEST_CASE("frozen mask pins the MAC heads to the current reservation") {
  ActionDomain d;
  Reservation cur{42, 7, 3, 2, 0.4, 100};
  auto m = build_mask(d, std::vector<int>{}, cur, false);
  CHECK(m.mac_frozen);
  CHECK(m.count(kResource) == 1);
  CHECK(m.allowed[kResource][42] == 1);
  CHECK(m.count(kRc) == 1);
  CHECK(m.allowed[kRc][3] == 1);
  CHECK(m.count(kKeep) == 1);
  CHECK(m.count(kNs) == 13);
  Reservation none;
  CHECK_THROWS_AS(build_mask(d, std::vector<int>{}, none, false), std::logic_error);
  CHECK_THROWS_AS(build_mask(d, std::vector<int>{}, none, true), std::logic_error);
}

TEST_CASE("PRB budget couples the sensing and comm heads") {
  ActionDomain d;
  Reservation cur{0, 5, 0, 0, 0, 100};
  auto m = build_mask(d, std::vector<int>{0, 1}, cur, true);
  auto nc = m.n_c_allowed(8);
  CHECK(nc[4] == 1);
  CHECK(nc[5] == 0);
  ActionVector a;
  a.idx[kNs] = 8;
  a.idx[kNc] = 8;
  CHECK_FALSE(m.admits(a));
  a.idx[kNc] = 4;
  CHECK(m.admits(a));
  a.idx[kResource] = 2;
  CHECK_FALSE(m.admits(a));
}

TEST_CASE("mask admits exactly the feasible actions on a small domain") {
  ActionDomain d;
  d.pool_size = 8;
  d.rc_set = {5, 10};
  d.keep_set = {0.0, 0.5};
  d.n_sl = 4;
  d.n_o_max = 1;
  d.max_symbols = 2;
  const std::vector<int> cands{1, 4, 6};
  const Reservation cur{4, 3, 1, 0, 0.0, 100};
  for (bool pending : {true, false}) {
    auto m = build_mask(d, cands, cur, pending);
    const auto sz = d.head_sizes();
    long total = 1;
    for (int s : sz) total *= s + 1;  // include one out-of-range value per head
    int admitted = 0, mismatches = 0;
    for (long code = 0; code < total; ++code) {
      ActionVector a;
      long rest = code;
      for (int h = 0; h < kNumHeads; ++h) {
        a.idx[h] = static_cast<int>(rest % (sz[h] + 1));
        rest /= sz[h] + 1;
      }
      const bool ref = reference_feasible(d, cands, cur, pending, a);
      mismatches += m.admits(a) != ref;
      admitted += ref;
    }
    CHECK(mismatches == 0);
    CHECK(admitted > 0);
  }
}

TEST_CASE("MAC trace row") {
  std::ostringstream out;
  write_mac_trace_row(out, 3, 7, Reservation{12, 9, 4, 1, 0.2, 100}, ReselectionEvent::keep);
  CHECK(out.str() == "3,7,12,9,0.20000000000000001,keep\n");
}
