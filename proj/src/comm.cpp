#include "iscc/comm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace iscc::comm {

std::int64_t arrivals(CounterRng& rng, const SimConfig& cfg) {
  const double p = std::min(1.0, cfg.msg_rate_hz * cfg.slot_s);
  if (p <= 0.0) return 0;
  return rng.bernoulli(p) ? static_cast<std::int64_t>(cfg.packet_bytes) * 8 : 0;
}

double comm_bandwidth_hz(int n_c_prb, const SimConfig& cfg) { return 12.0 * cfg.scs_hz * n_c_prb; }

std::vector<double> sinr_matrix(std::span<const Transmitter> tx, const channel::ChannelSnapshot& ch,
                                const SimConfig& cfg) {
  const int n = ch.n;
  const double p = cfg.tx_power_w;
  std::vector<double> out(tx.size() * static_cast<std::size_t>(n), 0.0);
  for (std::size_t k = 0; k < tx.size(); ++k) {
    const int i = tx[k].vehicle;
    const double noise = cfg.noise_psd_w_per_hz() * comm_bandwidth_hz(tx[k].n_c_prb, cfg);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double interf = 0.0;
      for (std::size_t m = 0; m < tx.size(); ++m) {
        if (m == k || tx[m].resource != tx[k].resource || tx[m].vehicle == j) continue;
        interf += p * ch.v2v_gain(tx[m].vehicle, j);
      }
      const double denom = interf + noise;
      out[k * n + j] = denom > 0.0 ? p * ch.v2v_gain(i, j) / denom : 0.0;
    }
  }
  return out;
}

std::vector<int> receiver_set(int i, const channel::ChannelSnapshot& ch, const SimConfig& cfg) {
  std::vector<int> r;
  for (int j = 0; j < ch.n; ++j)
    if (j != i && ch.distance(i, j) <= cfg.awareness_range_m) r.push_back(j);
  return r;
}

double sl_delay_s(std::int64_t queue_bits, double rate_eff_bps, const SimConfig& cfg) {
  return std::min(cfg.delay_cap_s, static_cast<double>(queue_bits) / (rate_eff_bps + cfg.epsilon0_bps));
}

TxOutcome tx_outcome(std::span<const int> receivers, std::span<const double> sinr_row, int n_c_prb,
                     std::int64_t queue_bits, const SimConfig& cfg) {
  if (n_c_prb <= 0) throw std::invalid_argument("tx_outcome: transmission needs n_c_prb > 0");
  TxOutcome o;
  o.transmitted = true;
  o.receivers.assign(receivers.begin(), receivers.end());
  const double thr = cfg.sinr_threshold_linear();
  if (receivers.empty()) {
    o.prr = 1.0;
    o.avg_sinr_linear = thr;
  } else {
    double sum = 0.0;
    int ok = 0;
    for (int j : receivers) {
      const double s = sinr_row[j];
      o.sinr.push_back(s);
      const bool dec = s >= thr;
      o.decoded.push_back(dec);
      ok += dec;
      sum += s;
    }
    o.avg_sinr_linear = sum / receivers.size();
    o.prr = static_cast<double>(ok) / receivers.size();
  }
  o.rate_bps = comm_bandwidth_hz(n_c_prb, cfg) * std::log2(1.0 + o.avg_sinr_linear);
  o.rate_eff_bps = o.rate_bps * o.prr;
  o.delivered_bits = static_cast<std::int64_t>(std::floor(cfg.slot_s * o.rate_eff_bps));
  o.sl_delay_s = sl_delay_s(queue_bits, o.rate_eff_bps, cfg);
  return o;
}

TxOutcome idle_outcome(std::int64_t queue_bits, const SimConfig& cfg) {
  TxOutcome o;
  o.sl_delay_s = sl_delay_s(queue_bits, 0.0, cfg);
  return o;
}

std::int64_t update_queue(CommState& st, const TxOutcome& out, std::int64_t arrival_bits) {
  if (arrival_bits < 0) throw std::invalid_argument("update_queue: negative arrivals");
  const std::int64_t served = std::min(st.queue_bits, std::max<std::int64_t>(0, out.delivered_bits));
  st.queue_bits = st.queue_bits - served + arrival_bits;
  st.arrivals_bits = arrival_bits;
  return served;
}

void update_emas(CommState& st, const TxOutcome& out, const SimConfig& cfg) {
  if (!out.transmitted) return;
  const double a = cfg.ema_coef;
  st.prr_ema = (1 - a) * st.prr_ema + a * out.prr;
  st.rate_eff_ema = (1 - a) * st.rate_eff_ema + a * out.rate_eff_bps;
  st.avg_sinr_linear = out.avg_sinr_linear;
}

double min_rate_eff_bps(const SimConfig& cfg) { return cfg.d_c_min_bits / cfg.slot_s; }

Utility comm_utility(double prr, double rate_eff_bps, const SimConfig& cfg) {
  const auto& w = cfg.comm_utility_weights;
  const double rmin = min_rate_eff_bps(cfg);
  const double rate_term = rmin > 0 ? std::min(rate_eff_bps / rmin, 1.0) : 1.0;
  Utility u;
  u.utility = w[0] * prr + w[1] * rate_term;
  u.deficiency = std::clamp(1.0 - u.utility / (w[0] + w[1]), 0.0, 1.0);
  return u;
}

std::optional<int> min_prb_demand(double prr, double avg_sinr_linear, const SimConfig& cfg) {
  if (cfg.d_c_min_bits <= 0) return 0;
  if (!(prr > 0) || !(avg_sinr_linear > 0)) return std::nullopt;
  const double per_prb = cfg.slot_s * 12.0 * cfg.scs_hz * std::log2(1.0 + avg_sinr_linear) * prr;
  return static_cast<int>(std::ceil(cfg.d_c_min_bits / per_prb - 1e-12));
}

double max_reliable_distance(std::span<const PrrBin> table, double threshold) {
  if (table.empty()) throw std::invalid_argument("max_reliable_distance: empty table");
  double best = 0.0;
  for (const auto& b : table)
    if (b.prr >= threshold) best = std::max(best, b.midpoint_m);
  return best;
}

PrrByDistance::PrrByDistance(double bin_m, double max_m) : bin_m_(bin_m) {
  if (!(bin_m > 0) || !(max_m > 0)) throw std::invalid_argument("PrrByDistance: bin and range must be positive");
  const auto n = static_cast<std::size_t>(std::floor(max_m / bin_m + 0.5)) + 1;
  attempts_.assign(n, 0);
  successes_.assign(n, 0);
}

int PrrByDistance::index(double d) const { return static_cast<int>(std::floor(d / bin_m_ + 0.5)); }

void PrrByDistance::add(double distance_m, bool decoded) {
  const int k = index(distance_m);
  if (k < 0 || k >= static_cast<int>(attempts_.size())) return;
  ++attempts_[k];
  successes_[k] += decoded;
}

void PrrByDistance::add(const TxOutcome& out, const channel::ChannelSnapshot& ch, int tx_vehicle) {
  for (std::size_t r = 0; r < out.decoded.size(); ++r) add(ch.distance(tx_vehicle, out.receivers[r]), out.decoded[r]);
}

void PrrByDistance::merge(const PrrByDistance& other) {
  if (other.attempts_.size() != attempts_.size() || other.bin_m_ != bin_m_)
    throw std::invalid_argument("PrrByDistance::merge: layouts differ");
  for (std::size_t k = 0; k < attempts_.size(); ++k) {
    attempts_[k] += other.attempts_[k];
    successes_[k] += other.successes_[k];
  }
}

std::vector<PrrBin> PrrByDistance::table() const {
  std::vector<PrrBin> t;
  for (std::size_t k = 0; k < attempts_.size(); ++k)
    if (attempts_[k] > 0) t.push_back({k * bin_m_, static_cast<double>(successes_[k]) / attempts_[k]});
  return t;
}

std::optional<double> PrrByDistance::prr_at(double distance_m) const {
  const int k = index(distance_m);
  if (k < 0 || k >= static_cast<int>(attempts_.size()) || attempts_[k] == 0) return std::nullopt;
  return static_cast<double>(successes_[k]) / attempts_[k];
}

void write_metrics_row(std::ostream& out, std::int64_t slot, int vehicle, const TxOutcome& o, double cbr,
                       std::int64_t queue_bits) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%lld,%d,%.17g,%.17g,%.17g,%.17g,%lld,%.17g\n", static_cast<long long>(slot), vehicle,
                o.prr, o.rate_bps, o.rate_eff_bps, cbr, static_cast<long long>(queue_bits), o.sl_delay_s);
  out << buf;
}

}  // namespace iscc::comm
