#include "iscc/compute.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace iscc::compute {

double local_capacity_cycles(const SimConfig& cfg) { return std::round(cfg.f_local_hz * cfg.slot_s); }

LocalComputeState local_schedule(double v_c, double v_s, const SimConfig& cfg) {
  if (v_c < 0 || v_s < 0) throw std::invalid_argument("local_schedule: negative demand");
  const double cap = local_capacity_cycles(cfg);
  LocalComputeState s;
  s.v_c_cycles = v_c;
  s.v_s_cycles = v_s;
  s.f_c = std::min(v_c, cap);
  s.f_s = std::min(v_s, std::max(0.0, cap - s.f_c));
  s.ov_c = v_c - s.f_c;
  s.ov_s = v_s - s.f_s;
  s.t_loc_c_s = s.f_c / cfg.f_local_hz;
  s.t_loc_s_s = (s.f_c + s.f_s) / cfg.f_local_hz;
  const double v_loc = s.f_c + s.f_s;
  const double f_eff = v_loc / cfg.slot_s;
  s.e_loc_j = cfg.kappa_dvfs * v_loc * f_eff * f_eff;
  return s;
}

double offload_bandwidth_hz(int n_o_prb, const SimConfig& cfg) { return 12.0 * cfg.scs_hz * n_o_prb; }

std::vector<double> offload_sinr(std::span<const int> offloaders, std::span<const double> v2i_gain,
                                 std::span<const int> n_o_prb, const SimConfig& cfg) {
  std::vector<double> out(v2i_gain.size(), 0.0);
  const double p = cfg.tx_power_w;
  double total = 0.0;
  for (int m : offloaders) total += p * v2i_gain[m];
  for (int i : offloaders) {
    const double own = p * v2i_gain[i];
    const double denom = (total - own) + cfg.noise_psd_w_per_hz() * offload_bandwidth_hz(n_o_prb[i], cfg);
    out[i] = denom > 0 ? own / denom : 0.0;
  }
  return out;
}

double offload_rate_bps(double sinr, int n_o_prb, const SimConfig& cfg) {
  if (n_o_prb <= 0) return 0.0;
  return offload_bandwidth_hz(n_o_prb, cfg) * std::log2(1.0 + sinr);
}

void UploadQueue::push(const Chunk& c) {
  if (c.bits < 0 || c.cycles < 0) throw std::invalid_argument("UploadQueue::push: negative chunk");
  q_.push_back(c);
  backlog_ += c.bits;
}

Departure UploadQueue::transmit(double capacity_bits, double rate_bps) {
  Departure d;
  double left = std::max(0.0, capacity_bits);
  while (!q_.empty() && left > 0.0) {
    Chunk& c = q_.front();
    const double sent = std::min(c.bits, left);
    (c.cls == TaskClass::comm ? d.bits_c : d.bits_s) += sent;
    c.bits -= sent;
    left -= sent;
    backlog_ -= sent;
    if (c.bits <= 0.0) {
      c.bits = 0.0;
      d.completed.push_back(c);
      q_.pop_front();
    }
  }
  if (q_.empty()) backlog_ = 0.0;
  const double sent = d.bits_c + d.bits_s;
  d.airtime_s = rate_bps > 0 ? sent / rate_bps : 0.0;
  return d;
}

void UploadQueue::clear() {
  q_.clear();
  backlog_ = 0.0;
}

void step_mec(MecState& mec, double arrivals_c, double arrivals_s, const SimConfig& cfg) {
  if (arrivals_c < 0 || arrivals_s < 0) throw std::invalid_argument("step_mec: negative arrivals");
  const double cap = cfg.c_mec_cycles_per_slot;
  mec.served_c = std::min(mec.l_c, cap);
  mec.served_s = std::min(mec.l_s, std::max(0.0, cap - mec.served_c));
  mec.l_c = std::max(0.0, mec.l_c - mec.served_c) + arrivals_c;
  mec.l_s = std::max(0.0, mec.l_s - mec.served_s) + arrivals_s;
  mec.que_delay_c_s = mec.l_c * cfg.slot_s / cap;
  mec.que_delay_s_s = (mec.l_c + mec.l_s) * cfg.slot_s / cap;
}

double sensing_energy_j(int m_s_sym, const SimConfig& cfg) { return cfg.tx_power_w * m_s_sym * cfg.sym_s; }

double comp_penalty(double t_comp_c_s, double t_comp_s_s, double e_tot_j, const SimConfig& cfg) {
  const auto& a = cfg.comp_penalty_weights;
  return a[0] * std::min(t_comp_c_s / cfg.delta_c_s, 1.0) + a[1] * std::min(t_comp_s_s / cfg.delta_s_s, 1.0) +
         a[2] * std::min(e_tot_j / cfg.e_max_j_per_slot, 1.0);
}

OffloadOutcome completion(const LocalComputeState& loc, const CompletionInput& in, const MecState& mec,
                          const SimConfig& cfg) {
  OffloadOutcome o;
  const double tpc = cfg.slot_s / cfg.c_mec_cycles_per_slot;
  if (in.eta_c == 1) o.t_rem_c_s = in.t_tx_c_s + mec.que_delay_c_s + loc.ov_c * tpc;
  if (in.eta_s == 1)
    o.t_rem_s_s = in.t_tx_s_s + mec.que_delay_s_s + loc.ov_s * tpc;
  else if (in.eta_s == 2)
    o.t_rem_s_s = in.t_tx_s_s + cfg.t_bh_s + cfg.t_cl_s;
  o.t_comp_c_s = std::max(loc.t_loc_c_s, o.t_rem_c_s);
  o.t_comp_s_s = std::max(loc.t_loc_s_s, o.t_rem_s_s);
  o.t_e2e_c_s = in.sl_delay_s + o.t_comp_c_s;
  o.e_sens_j = in.sensing_active ? sensing_energy_j(in.m_s_sym, cfg) : 0.0;
  o.e_tot_j = loc.e_loc_j + in.e_tx_c_j + in.e_tx_s_j + o.e_sens_j;
  o.psi = comp_penalty(o.t_comp_c_s, o.t_comp_s_s, o.e_tot_j, cfg);
  o.viol_delay_c = o.t_e2e_c_s > cfg.delta_c_s;
  o.viol_delay_s = o.t_comp_s_s > cfg.delta_s_s;
  o.viol_energy = o.e_tot_j > cfg.e_max_j_per_slot;
  return o;
}

void write_compute_row(std::ostream& out, std::int64_t slot, int vehicle, const LocalComputeState& loc, int eta_c,
                       int eta_s, const OffloadOutcome& o, const MecState& mec) {
  char buf[320];
  std::snprintf(buf, sizeof buf, "%lld,%d,%.17g,%.17g,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", static_cast<long long>(slot),
                vehicle, loc.ov_c, loc.ov_s, eta_c, eta_s, o.t_comp_c_s * 1e3, o.t_comp_s_s * 1e3, o.e_tot_j * 1e3,
                mec.l_c, mec.l_s);
  out << buf;
}

}  // namespace iscc::compute
