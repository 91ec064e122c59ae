#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/resource_pool.hpp"
#include "iscc/rng.hpp"

namespace iscc::mac {

// One decoded reservation heard in a slot, with the RSRP measured on it.
struct HeardReservation {
  int resource = -1;
  double rsrp_dbm = -300.0;
  int busy_prbs = 0;  // PRBs the transmission occupies
};

class ResourceGrid {
 public:
  ResourceGrid(const ResourcePool& pool, int window_slots, int cbr_window_slots);

  // Slots must be strictly increasing (std::invalid_argument otherwise). A slot the
  // owner spent transmitting is recorded with an empty list (half-duplex blindness).
  void record_observation(std::int64_t slot, std::span<const HeardReservation> heard, double busy_threshold_dbm);

  // Resources not excluded at the base threshold; the threshold is raised in steps
  // until at least retain_fraction of the pool remains.
  std::vector<int> candidate_set(double threshold_dbm, double retain_fraction, double step_db) const;

  // Busy PRB fraction over the most recent cbr window (0 for an empty grid).
  double cbr() const;

  // True if a reservation on `resource` was heard above the threshold at or after `since_slot`.
  bool observed_busy(int resource, std::int64_t since_slot, double threshold_dbm) const;

  std::size_t history_slots() const { return records_.size(); }
  std::int64_t last_slot() const { return last_slot_; }
  const ResourcePool& pool() const { return pool_; }

 private:
  struct Entry {
    int resource;
    double rsrp_dbm;
  };
  struct SlotRecord {
    std::int64_t slot;
    std::vector<Entry> entries;
  };

  ResourcePool pool_;
  int window_slots_;
  int cbr_window_slots_;
  std::int64_t last_slot_ = -1;
  std::deque<SlotRecord> records_;
  std::deque<std::pair<std::int64_t, int>> busy_;  // (slot, busy PRBs) within the cbr window
  long long busy_sum_ = 0;
};

struct Reservation {
  int resource = -1;
  int rc_remaining = 0;
  int rc_index = 0;    // index into the rc set of the counter last drawn
  int keep_index = 0;  // index into the keep-probability set
  double keep_prob = 0.0;
  double rri_ms = 100.0;
};

// reevaluate: the held resource was heard in use by another vehicle before the counter expired.
enum class ReselectionEvent { none, keep, reselect, reevaluate };
std::string_view event_name(ReselectionEvent e);

// Called once per RRI boundary.
ReselectionEvent tick_reservation(Reservation& res, CounterRng& rng, std::span<const int> rc_set);

enum Head : int { kResource = 0, kRc, kKeep, kNs, kNc, kNo, kMs, kEtaC, kEtaS, kNumHeads };
std::string_view head_name(int h);

struct ActionDomain {
  int pool_size = 400;
  std::vector<int> rc_set{5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};
  std::vector<double> keep_set{0.0, 0.2, 0.4, 0.6, 0.8};
  int n_sl = 12;
  int n_o_max = 4;
  int max_symbols = 14;

  static ActionDomain from_config(const SimConfig& cfg);
  std::array<int, kNumHeads> head_sizes() const;
  int total_logits() const;
  std::array<int, kNumHeads> head_offsets() const;
};

// Categorical index per head. Values: rc = rc_set[i], keep = keep_set[i], n_s/n_c/n_o = i,
// m_s = i + 1, eta_c/eta_s = i.
struct ActionVector {
  std::array<int, kNumHeads> idx{};
  bool operator==(const ActionVector&) const = default;
};

struct ActionMask {
  std::array<std::vector<std::uint8_t>, kNumHeads> allowed;
  int n_sl = 12;
  bool mac_frozen = false;  // resource/rc/keep forced to the current reservation

  // n_c choices compatible with a chosen n_s (n_s + n_c <= n_sl).
  std::vector<std::uint8_t> n_c_allowed(int n_s) const;
  bool admits(const ActionVector& a) const;
  int count(int head) const;
};

ActionMask build_mask(const ActionDomain& dom, std::span<const int> candidates, const Reservation& current,
                      bool reselection_pending);

// Uniform over each head's allowed values, n_c drawn after n_s so the pair stays within budget.
ActionVector sample_uniform(const ActionMask& mask, CounterRng& rng);

inline constexpr const char* kMacTraceHeader = "epoch,vehicle,resource,rc,keep_prob,event";
// MAC trace rows in kMacTraceHeader order.
void write_mac_trace_row(std::ostream& out, int epoch, int vehicle, const Reservation& r, ReselectionEvent e);

}  // namespace iscc::mac
