#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <span>
#include <vector>

#include "iscc/config.hpp"

namespace iscc::compute {

struct LocalComputeState {
  double v_c_cycles = 0.0;
  double v_s_cycles = 0.0;
  double f_c = 0.0;
  double f_s = 0.0;
  double ov_c = 0.0;
  double ov_s = 0.0;
  double t_loc_c_s = 0.0;
  double t_loc_s_s = 0.0;
  double e_loc_j = 0.0;
};

// Whole cycles per slot, so cycle bookkeeping stays integral.
double local_capacity_cycles(const SimConfig& cfg);

// Communication first, sensing takes what is left of the slot's CPU budget.
LocalComputeState local_schedule(double v_c, double v_s, const SimConfig& cfg);

double offload_bandwidth_hz(int n_o_prb, const SimConfig& cfg);

// Uplink SINR per vehicle; non-offloaders get 0. Interference is summed over the other
// offloaders in the set, which share the band.
std::vector<double> offload_sinr(std::span<const int> offloaders, std::span<const double> v2i_gain,
                                 std::span<const int> n_o_prb, const SimConfig& cfg);
double offload_rate_bps(double sinr, int n_o_prb, const SimConfig& cfg);

enum class TaskClass : int { comm = 0, sens = 1 };
enum class Route : int { mec = 0, cloud = 1 };

struct Chunk {
  TaskClass cls = TaskClass::comm;
  Route route = Route::mec;
  double bits = 0.0;    // still to upload
  double cycles = 0.0;  // remote work once uploaded
};

struct Departure {
  double bits_c = 0.0;
  double bits_s = 0.0;
  double airtime_s = 0.0;
  std::vector<Chunk> completed;  // chunks whose last bit left this slot
};

// Vehicle-side FIFO for overflow payloads awaiting the uplink.
class UploadQueue {
 public:
  void push(const Chunk& c);
  // Sends up to capacity_bits in FIFO order; airtime = sent / rate.
  Departure transmit(double capacity_bits, double rate_bps);
  double backlog_bits() const { return backlog_; }
  bool empty() const { return q_.empty(); }
  std::size_t size() const { return q_.size(); }
  void clear();

 private:
  std::deque<Chunk> q_;
  double backlog_ = 0.0;
};

struct MecState {
  double l_c = 0.0;
  double l_s = 0.0;
  double served_c = 0.0;
  double served_s = 0.0;
  double que_delay_c_s = 0.0;
  double que_delay_s_s = 0.0;
};

// Strict-priority service from the current backlogs, then enqueue the slot's arrivals.
// Queue delays are backlog/service estimates on the updated backlogs.
void step_mec(MecState& mec, double arrivals_c, double arrivals_s, const SimConfig& cfg);

struct CompletionInput {
  int eta_c = 0;  // 0 local only, 1 MEC
  int eta_s = 0;  // 0 local only, 1 MEC, 2 cloud
  double t_tx_c_s = 0.0;
  double t_tx_s_s = 0.0;
  double e_tx_c_j = 0.0;
  double e_tx_s_j = 0.0;
  double sl_delay_s = 0.0;
  int m_s_sym = 0;
  bool sensing_active = false;
};

struct OffloadOutcome {
  double t_rem_c_s = 0.0;
  double t_rem_s_s = 0.0;
  double t_comp_c_s = 0.0;
  double t_comp_s_s = 0.0;
  double t_e2e_c_s = 0.0;
  double e_sens_j = 0.0;
  double e_tot_j = 0.0;
  double psi = 0.0;
  bool viol_delay_c = false;
  bool viol_delay_s = false;
  bool viol_energy = false;
};

double sensing_energy_j(int m_s_sym, const SimConfig& cfg);

OffloadOutcome completion(const LocalComputeState& loc, const CompletionInput& in, const MecState& mec,
                          const SimConfig& cfg);

// Weighted sum of delay and energy ratios, each clipped to 1.
double comp_penalty(double t_comp_c_s, double t_comp_s_s, double e_tot_j, const SimConfig& cfg);

inline constexpr const char* kComputeHeader =
    "slot,vehicle,ov_c,ov_s,eta_c,eta_s,t_comp_c_ms,t_comp_s_ms,e_tot_mj,mec_lc,mec_ls";
// Per-slot compute rows in kComputeHeader order.
void write_compute_row(std::ostream& out, std::int64_t slot, int vehicle, const LocalComputeState& loc, int eta_c,
                       int eta_s, const OffloadOutcome& o, const MecState& mec);

}  // namespace iscc::compute
