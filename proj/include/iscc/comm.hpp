#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "iscc/channel.hpp"
#include "iscc/config.hpp"
#include "iscc/rng.hpp"

namespace iscc::comm {

struct CommState {
  std::int64_t queue_bits = 0;
  std::int64_t arrivals_bits = 0;
  double prr_ema = 0.0;
  double rate_eff_ema = 0.0;
  double cbr = 0.0;
  double avg_sinr_linear = 0.0;  // last transmission's mean over receivers
};

struct TxOutcome {
  bool transmitted = false;
  std::vector<int> receivers;
  std::vector<double> sinr;             // linear, aligned with receivers
  std::vector<std::uint8_t> decoded;    // aligned with receivers
  double avg_sinr_linear = 0.0;
  double prr = 0.0;
  double rate_bps = 0.0;
  double rate_eff_bps = 0.0;
  std::int64_t delivered_bits = 0;
  double sl_delay_s = 0.0;
};

// One Bernoulli(msg_rate * T_slot) packet draw; returns bits.
std::int64_t arrivals(CounterRng& rng, const SimConfig& cfg);

struct Transmitter {
  int vehicle = -1;
  int resource = -1;
  int n_c_prb = 0;
};

double comm_bandwidth_hz(int n_c_prb, const SimConfig& cfg);

// Row k holds the SINR of transmitter k at every vehicle (n entries; the own entry is 0).
// Interference comes only from other transmitters on the same resource index.
std::vector<double> sinr_matrix(std::span<const Transmitter> tx, const channel::ChannelSnapshot& ch,
                                const SimConfig& cfg);

// Vehicles within the awareness range of i, excluding i.
std::vector<int> receiver_set(int i, const channel::ChannelSnapshot& ch, const SimConfig& cfg);

// Outcome for a vehicle that transmits this slot. sinr_row is indexed by vehicle.
// Empty receiver set: PRR = 1 and the mean SINR is taken at the decode threshold.
TxOutcome tx_outcome(std::span<const int> receivers, std::span<const double> sinr_row, int n_c_prb,
                     std::int64_t queue_bits, const SimConfig& cfg);
// Outcome for a vehicle that does not transmit (N_c = 0 or empty queue).
TxOutcome idle_outcome(std::int64_t queue_bits, const SimConfig& cfg);

double sl_delay_s(std::int64_t queue_bits, double rate_eff_bps, const SimConfig& cfg);

// Serves min(Q, delivered) then adds arrivals. Returns the served bits.
std::int64_t update_queue(CommState& st, const TxOutcome& out, std::int64_t arrival_bits);

// EMAs move only on slots with a transmission.
void update_emas(CommState& st, const TxOutcome& out, const SimConfig& cfg);

struct Utility {
  double utility = 0.0;
  double deficiency = 1.0;
};
double min_rate_eff_bps(const SimConfig& cfg);
Utility comm_utility(double prr, double rate_eff_bps, const SimConfig& cfg);

// Smallest PRB count whose expected delivery covers the per-slot demand; nullopt when
// PRR or the mean SINR is zero.
std::optional<int> min_prb_demand(double prr, double avg_sinr_linear, const SimConfig& cfg);

struct PrrBin {
  double midpoint_m = 0.0;
  double prr = 0.0;
};
// Largest midpoint with prr >= threshold, 0 if none. Throws std::invalid_argument on an empty table.
double max_reliable_distance(std::span<const PrrBin> table, double threshold);

// Decode statistics per 20 m distance bin; bin k covers [20k - 10, 20k + 10).
class PrrByDistance {
 public:
  PrrByDistance() : PrrByDistance(20.0, 400.0) {}
  PrrByDistance(double bin_m, double max_m);
  void add(double distance_m, bool decoded);
  void add(const TxOutcome& out, const channel::ChannelSnapshot& ch, int tx_vehicle);
  void merge(const PrrByDistance& other);
  std::vector<PrrBin> table() const;  // bins with at least one attempt
  // PRR of the bin containing distance_m; nullopt when the bin is empty.
  std::optional<double> prr_at(double distance_m) const;
  double bin_m() const { return bin_m_; }

 private:
  int index(double d) const;
  double bin_m_;
  std::vector<std::int64_t> attempts_;
  std::vector<std::int64_t> successes_;
};

inline constexpr const char* kMetricsHeader = "slot,vehicle,prr,rate_bps,rate_eff_bps,cbr,queue_bits,sl_delay_s";
// Per-slot metrics rows in kMetricsHeader order.
void write_metrics_row(std::ostream& out, std::int64_t slot, int vehicle, const TxOutcome& o, double cbr,
                       std::int64_t queue_bits);

}  // namespace iscc::comm
