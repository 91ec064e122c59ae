#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string_view>
#include <vector>

#include "iscc/channel.hpp"
#include "iscc/comm.hpp"
#include "iscc/compute.hpp"
#include "iscc/config.hpp"
#include "iscc/mac.hpp"
#include "iscc/resource_pool.hpp"
#include "iscc/rng.hpp"
#include "iscc/sensing.hpp"

namespace iscc::env {

inline constexpr int kObsDim = 12;
enum ObsField : int {
  kObsQueue = 0,
  kObsSensWork,
  kObsOvComm,
  kObsOvSens,
  kObsCbr,
  kObsPrr,
  kObsRateEff,
  kObsSinrDb,
  kObsRcRemaining,
  kObsV2iDb,
  kObsBacklogC,
  kObsBacklogS,
};
std::string_view obs_field_name(int f);

using Observation = std::array<double, kObsDim>;

// Settings a decoded action applies for one epoch.
struct DecodedAction {
  int resource = -1;
  int rc = 0;
  double keep_prob = 0.0;
  int n_s = 0;
  int n_c = 0;
  int n_o = 0;
  int m_s = 1;
  int eta_c = 0;
  int eta_s = 0;
};

// Throws std::invalid_argument for an action the mask does not admit.
DecodedAction decode_action(const mac::ActionDomain& dom, const mac::ActionMask& mask, const mac::ActionVector& a);

// Backlog indicator broadcast by the RSU: backlog / C_R binned at 0.5 and 2.
int backlog_level(double backlog_cycles, const SimConfig& cfg);

// Weighted sum of the three normalized cost terms. Throws std::domain_error when a term
// lies outside [0, 1].
double slot_cost(double eps_sens, double phi_comm, double psi_comp, const SimConfig& cfg);

// What a greedy agent may use: its own state, what it senses and the broadcast backlogs.
struct LocalView {
  int vehicle = -1;
  std::vector<sensing::TargetGeometry> targets;
  std::int64_t queue_bits = 0;
  double prr_ema = 0.0;
  double avg_sinr_linear = 0.0;
  double v2i_gain = 0.0;
  double mec_l_c = 0.0;
  double mec_l_s = 0.0;
  int offloaders_last_epoch = 0;
  std::vector<double> offloader_gains;  // V2I gains of the others that offloaded last epoch
  std::int64_t upload_backlog_bits = 0;
};

enum class Stage : int {
  sensing = 0,
  arrivals,
  tx_outcome,
  queue_update,
  utility,
  comm_workload,
  local_schedule,
  overflow,
  offload_link,
  mec_update,
  completion,
  energy,
  comp_penalty,
  cost,
};
std::string_view stage_name(Stage s);

struct VehicleSlotTrace {
  std::int64_t queue_before = 0;
  std::int64_t arrivals = 0;
  std::int64_t served = 0;
  std::int64_t queue_after = 0;
  bool transmitted = false;
  double prr = 0.0;
  double rate_eff_bps = 0.0;
  double eps = 0.0;
  double phi = 0.0;
  double psi = 0.0;
  double cost = 0.0;
  double v_c = 0.0;
  double v_s = 0.0;
  double ov_c = 0.0;
  double ov_s = 0.0;
  double offload_rate_bps = 0.0;
  double t_tx_c_s = 0.0;
  double t_tx_s_s = 0.0;
  double t_comp_c_s = 0.0;
  double t_comp_s_s = 0.0;
  double e_tot_j = 0.0;
  double dropped_cycles = 0.0;
};

struct SlotTrace {
  int epoch = 0;
  std::int64_t slot = 0;
  std::vector<Stage> stages;
  std::vector<VehicleSlotTrace> vehicles;
  double mec_l_c_before = 0.0, mec_l_s_before = 0.0;
  double mec_arrivals_c = 0.0, mec_arrivals_s = 0.0;
  double mec_served_c = 0.0, mec_served_s = 0.0;
  double mec_l_c_after = 0.0, mec_l_s_after = 0.0;
  double mec_que_delay_c_s = 0.0, mec_que_delay_s_s = 0.0;
};

// Episode-level running sums behind the KPI table.
struct KpiAccumulator {
  double crlb_range_sum = 0.0, crlb_vel_sum = 0.0;
  std::int64_t crlb_count = 0;
  double rate_eff_sum = 0.0, prr_sum = 0.0;
  std::int64_t tx_count = 0;
  double cbr_sum = 0.0;
  double e2e_sum_s = 0.0, tcomp_s_sum_s = 0.0, energy_sum_j = 0.0;
  std::int64_t vehicle_slots = 0;
  double mec_delay_sum_s = 0.0, mec_delay_c_sum_s = 0.0;
  std::int64_t slots = 0;
  std::int64_t viol_c7 = 0, viol_c8 = 0, viol_c9 = 0;
  double cost_sum = 0.0;
  comm::PrrByDistance prr_by_distance;

  void merge(const KpiAccumulator& o);
};

struct EpochResult {
  int epoch = 0;
  double reward = 0.0;
  std::vector<Observation> observations;  // raw, per vehicle
  std::vector<mac::ActionMask> masks;      // for the next epoch
  double mec_l_c = 0.0, mec_l_s = 0.0;
  bool done = false;
  // epoch diagnostics
  double mean_prr = 0.0, mean_cbr = 0.0, mean_crlb_range = 0.0;
  double mean_e2e_ms = 0.0, mean_energy_mj = 0.0, mean_mec_delay_ms = 0.0;
  std::int64_t c7 = 0, c8 = 0, c9 = 0;
  std::vector<mac::ReselectionEvent> mac_events;
};

struct EnvOptions {
  int forced_offloaders = 0;              // vehicles 0..k-1 inject synthetic overflow into the MEC
  double forced_overflow_cycles = 8e5;    // per forced vehicle per slot, sensing class
  int episode = 0;                        // label for logs
  std::ostream* comm_csv = nullptr;       // per-slot comm rows
  std::ostream* compute_csv = nullptr;    // per-slot compute rows
  std::ostream* mac_trace = nullptr;      // per-epoch reservation rows
  std::ostream* epoch_log = nullptr;      // JSONL per epoch
  std::function<void(const SlotTrace&)> on_slot;
};

class IsccEnv {
 public:
  explicit IsccEnv(SimConfig cfg, EnvOptions opts = {});
  IsccEnv(const IsccEnv&) = delete;
  IsccEnv& operator=(const IsccEnv&) = delete;

  // Places vehicles, clears queues and draws random initial reservations.
  std::vector<Observation> reset(std::uint64_t seed);

  // Runs one epoch of slots. Throws std::logic_error for an action outside its mask.
  EpochResult step_epoch(const std::vector<mac::ActionVector>& actions);

  int n_agents() const { return n_; }
  int epoch() const { return epoch_; }
  bool done() const { return epoch_ >= cfg_.epochs_per_episode; }
  const SimConfig& config() const { return cfg_; }
  const mac::ActionDomain& domain() const { return domain_; }
  const std::vector<mac::ActionMask>& masks() const { return masks_; }
  const std::vector<Observation>& observations() const { return obs_; }
  const std::vector<mac::Reservation>& reservations() const { return res_; }
  const compute::MecState& mec() const { return mec_; }
  const KpiAccumulator& kpi() const { return kpi_; }
  const std::vector<comm::CommState>& comm_states() const { return comm_; }
  LocalView local_view(int i) const;
  EnvOptions& options() { return opts_; }

  // Global critic input: normalized observations are supplied by the caller.
  std::vector<double> global_state(const std::vector<Observation>& normalized_obs) const;

 private:
  void run_slot(int s, const std::vector<DecodedAction>& act, SlotTrace* trace);
  Observation build_obs(int i) const;
  void rebuild_masks();
  void write_epoch_log(const EpochResult& r) const;

  SimConfig cfg_;
  EnvOptions opts_;
  ResourcePool pool_;
  mac::ActionDomain domain_;
  int n_ = 0;
  int epoch_ = 0;
  std::int64_t slot_ = 0;
  std::uint64_t seed_ = 0;
  std::optional<RngStreams> rng_;
  std::optional<channel::ChannelModel> chan_;
  channel::World world_;
  channel::ChannelSnapshot snap_;
  std::vector<mac::ResourceGrid> grids_;
  std::vector<mac::Reservation> res_;
  std::vector<std::uint8_t> pending_;
  std::vector<mac::ActionMask> masks_;
  std::vector<comm::CommState> comm_;
  std::vector<compute::UploadQueue> uploads_;
  compute::MecState mec_;
  double mec_pending_c_ = 0.0, mec_pending_s_ = 0.0;  // uploads finished last slot
  std::vector<Observation> obs_;
  KpiAccumulator kpi_;

  // per-epoch accumulators per vehicle
  struct EpochAcc {
    double v_s = 0, ov_c = 0, ov_s = 0;
    int offload_slots = 0;
  };
  std::vector<EpochAcc> acc_;
  std::vector<std::uint8_t> offloaded_last_epoch_;
  std::vector<std::uint8_t> offloaded_this_epoch_;
  double epoch_cost_sum_ = 0.0;
  double ep_prr_sum_ = 0.0, ep_cbr_sum_ = 0.0, ep_crlb_sum_ = 0.0, ep_e2e_sum_ = 0.0, ep_energy_sum_ = 0.0,
         ep_mec_sum_ = 0.0;
  std::int64_t ep_tx_ = 0, ep_crlb_n_ = 0, ep_c7_ = 0, ep_c8_ = 0, ep_c9_ = 0;
};

// Reward of an epoch from its per-vehicle per-slot costs: minus their mean.
double epoch_reward(const std::vector<double>& costs);

}  // namespace iscc::env
