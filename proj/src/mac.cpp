#include "iscc/mac.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace iscc::mac {

ResourceGrid::ResourceGrid(const ResourcePool& pool, int window_slots, int cbr_window_slots)
    : pool_(pool), window_slots_(window_slots), cbr_window_slots_(cbr_window_slots) {
  if (window_slots < 1 || cbr_window_slots < 1) throw std::invalid_argument("grid windows must be positive");
}

void ResourceGrid::record_observation(std::int64_t slot, std::span<const HeardReservation> heard,
                                      double busy_threshold_dbm) {
  if (slot <= last_slot_) throw std::invalid_argument("record_observation: slot out of order");
  last_slot_ = slot;

  SlotRecord rec{slot, {}};
  // per subchannel busy PRBs; co-resource transmissions merge into one marker
  std::vector<int> busy_per_sub(pool_.n_subchannels, 0);
  for (const auto& h : heard) {
    if (!pool_.contains(h.resource)) throw std::out_of_range("record_observation: resource outside pool");
    auto it = std::find_if(rec.entries.begin(), rec.entries.end(), [&](const Entry& e) { return e.resource == h.resource; });
    if (it == rec.entries.end())
      rec.entries.push_back({h.resource, h.rsrp_dbm});
    else
      it->rsrp_dbm = std::max(it->rsrp_dbm, h.rsrp_dbm);
    if (h.rsrp_dbm > busy_threshold_dbm) {
      int& b = busy_per_sub[pool_.subchannel(h.resource)];
      b = std::max(b, std::min(h.busy_prbs, pool_.prb_per_subchannel));
    }
  }
  int busy = 0;
  for (int b : busy_per_sub) busy += b;
  busy = std::min(busy, pool_.n_prb);

  if (!rec.entries.empty() || !records_.empty()) records_.push_back(std::move(rec));
  while (!records_.empty() && records_.front().slot <= slot - window_slots_) records_.pop_front();

  busy_.emplace_back(slot, busy);
  busy_sum_ += busy;
  while (!busy_.empty() && busy_.front().first <= slot - cbr_window_slots_) {
    busy_sum_ -= busy_.front().second;
    busy_.pop_front();
  }
}

std::vector<int> ResourceGrid::candidate_set(double threshold_dbm, double retain_fraction, double step_db) const {
  const int n = pool_.size();
  std::vector<double> level(n, -std::numeric_limits<double>::infinity());
  for (const auto& rec : records_)
    for (const auto& e : rec.entries) level[e.resource] = std::max(level[e.resource], e.rsrp_dbm);
  const int need = std::max(1, static_cast<int>(std::ceil(retain_fraction * n - 1e-9)));
  double thr = threshold_dbm;
  for (;;) {
    std::vector<int> out;
    for (int r = 0; r < n; ++r)
      if (!(level[r] > thr)) out.push_back(r);
    if (static_cast<int>(out.size()) >= need) return out;
    thr += step_db;
  }
}

double ResourceGrid::cbr() const {
  if (busy_.empty()) return 0.0;
  return static_cast<double>(busy_sum_) / (static_cast<double>(busy_.size()) * pool_.n_prb);
}

bool ResourceGrid::observed_busy(int resource, std::int64_t since_slot, double threshold_dbm) const {
  for (auto it = records_.rbegin(); it != records_.rend() && it->slot >= since_slot; ++it)
    for (const auto& e : it->entries)
      if (e.resource == resource && e.rsrp_dbm > threshold_dbm) return true;
  return false;
}

std::string_view event_name(ReselectionEvent e) {
  switch (e) {
    case ReselectionEvent::none: return "none";
    case ReselectionEvent::keep: return "keep";
    case ReselectionEvent::reselect: return "reselect";
    case ReselectionEvent::reevaluate: return "reevaluate";
  }
  return "?";
}

ReselectionEvent tick_reservation(Reservation& res, CounterRng& rng, std::span<const int> rc_set) {
  if (res.rc_remaining <= 0) return ReselectionEvent::reselect;
  res.rc_remaining -= 1;
  if (res.rc_remaining > 0) return ReselectionEvent::none;
  if (rng.uniform() < res.keep_prob) {
    res.rc_index = static_cast<int>(rng.uniform_int(rc_set.size()));
    res.rc_remaining = rc_set[res.rc_index];
    return ReselectionEvent::keep;
  }
  return ReselectionEvent::reselect;
}

std::string_view head_name(int h) {
  static constexpr std::string_view names[kNumHeads] = {"resource", "rc", "keep", "n_s", "n_c",
                                                        "n_o", "m_s", "eta_c", "eta_s"};
  return (h >= 0 && h < kNumHeads) ? names[h] : "?";
}

ActionDomain ActionDomain::from_config(const SimConfig& cfg) {
  ActionDomain d;
  d.pool_size = cfg.pool_size();
  d.rc_set = cfg.rc_set;
  d.keep_set = cfg.keep_prob_set;
  d.n_sl = cfg.n_sl_prb_per_vehicle;
  d.n_o_max = cfg.n_o_max_prb;
  return d;
}

std::array<int, kNumHeads> ActionDomain::head_sizes() const {
  return {pool_size, static_cast<int>(rc_set.size()), static_cast<int>(keep_set.size()), n_sl + 1, n_sl + 1,
          n_o_max + 1, max_symbols, 2, 3};
}

int ActionDomain::total_logits() const {
  int t = 0;
  for (int s : head_sizes()) t += s;
  return t;
}

std::array<int, kNumHeads> ActionDomain::head_offsets() const {
  std::array<int, kNumHeads> off{};
  const auto sz = head_sizes();
  for (int h = 1; h < kNumHeads; ++h) off[h] = off[h - 1] + sz[h - 1];
  return off;
}

std::vector<std::uint8_t> ActionMask::n_c_allowed(int n_s) const {
  auto out = allowed[kNc];
  for (std::size_t c = 0; c < out.size(); ++c)
    if (n_s + static_cast<int>(c) > n_sl) out[c] = 0;
  return out;
}

bool ActionMask::admits(const ActionVector& a) const {
  for (int h = 0; h < kNumHeads; ++h) {
    const int i = a.idx[h];
    if (i < 0 || i >= static_cast<int>(allowed[h].size()) || !allowed[h][i]) return false;
  }
  return a.idx[kNs] + a.idx[kNc] <= n_sl;
}

int ActionMask::count(int head) const {
  int c = 0;
  for (auto v : allowed[head]) c += v;
  return c;
}

ActionMask build_mask(const ActionDomain& dom, std::span<const int> candidates, const Reservation& current,
                      bool reselection_pending) {
  ActionMask m;
  m.n_sl = dom.n_sl;
  const auto sz = dom.head_sizes();
  for (int h = 0; h < kNumHeads; ++h) m.allowed[h].assign(sz[h], 1);
  m.mac_frozen = !reselection_pending;
  if (m.mac_frozen) {
    if (current.resource < 0 || current.resource >= dom.pool_size)
      throw std::logic_error("build_mask: frozen reservation has no valid resource");
    std::fill(m.allowed[kResource].begin(), m.allowed[kResource].end(), 0);
    std::fill(m.allowed[kRc].begin(), m.allowed[kRc].end(), 0);
    std::fill(m.allowed[kKeep].begin(), m.allowed[kKeep].end(), 0);
    m.allowed[kResource][current.resource] = 1;
    m.allowed[kRc][current.rc_index] = 1;
    m.allowed[kKeep][current.keep_index] = 1;
  } else {
    std::fill(m.allowed[kResource].begin(), m.allowed[kResource].end(), 0);
    for (int r : candidates)
      if (r >= 0 && r < dom.pool_size) m.allowed[kResource][r] = 1;
    if (m.count(kResource) == 0) throw std::logic_error("build_mask: empty candidate set");
  }
  return m;
}

ActionVector sample_uniform(const ActionMask& mask, CounterRng& rng) {
  auto pick = [&](const std::vector<std::uint8_t>& allowed) {
    int n = 0;
    for (auto v : allowed) n += v;
    if (n == 0) throw std::logic_error("sample_uniform: head has no allowed value");
    auto k = static_cast<int>(rng.uniform_int(n));
    for (std::size_t i = 0; i < allowed.size(); ++i)
      if (allowed[i] && k-- == 0) return static_cast<int>(i);
    return -1;
  };
  ActionVector a;
  for (int h = 0; h < kNumHeads; ++h) a.idx[h] = h == kNc ? pick(mask.n_c_allowed(a.idx[kNs])) : pick(mask.allowed[h]);
  return a;
}

void write_mac_trace_row(std::ostream& out, int epoch, int vehicle, const Reservation& r, ReselectionEvent e) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d,%d,%d,%d,%.17g,%s\n", epoch, vehicle, r.resource, r.rc_remaining, r.keep_prob,
                std::string(event_name(e)).c_str());
  out << buf;
}

}  // namespace iscc::mac
