#include "iscc/env.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <ostream>
#include <span>
#include <string>
#include <stdexcept>

namespace iscc::env {

std::string_view obs_field_name(int f) {
  static constexpr std::string_view names[kObsDim] = {"queue_bits", "v_s_cycles", "ov_c",        "ov_s",
                                                      "cbr",        "prr",        "rate_eff",    "avg_sinr_db",
                                                      "rc_remaining", "v2i_gain_db", "backlog_c", "backlog_s"};
  return (f >= 0 && f < kObsDim) ? names[f] : "?";
}

std::string_view stage_name(Stage s) {
  static constexpr std::string_view names[] = {"sensing",        "arrivals", "tx_outcome",   "queue_update",
                                               "utility",        "comm_workload", "local_schedule", "overflow",
                                               "offload_link",   "mec_update",    "completion",     "energy",
                                               "comp_penalty",   "cost"};
  return names[static_cast<int>(s)];
}

DecodedAction decode_action(const mac::ActionDomain& dom, const mac::ActionMask& mask, const mac::ActionVector& a) {
  if (!mask.admits(a)) throw std::invalid_argument("decode_action: action outside the mask");
  DecodedAction d;
  d.resource = a.idx[mac::kResource];
  d.rc = dom.rc_set[a.idx[mac::kRc]];
  d.keep_prob = dom.keep_set[a.idx[mac::kKeep]];
  d.n_s = a.idx[mac::kNs];
  d.n_c = a.idx[mac::kNc];
  d.n_o = a.idx[mac::kNo];
  d.m_s = a.idx[mac::kMs] + 1;
  d.eta_c = a.idx[mac::kEtaC];
  d.eta_s = a.idx[mac::kEtaS];
  return d;
}

int backlog_level(double backlog_cycles, const SimConfig& cfg) {
  const double r = backlog_cycles / cfg.c_mec_cycles_per_slot;
  return r < 0.5 ? 0 : (r < 2.0 ? 1 : 2);
}

double slot_cost(double eps_sens, double phi_comm, double psi_comp, const SimConfig& cfg) {
  constexpr double tol = 1e-12;
  for (double v : {eps_sens, phi_comm, psi_comp})
    if (!(v >= -tol && v <= 1.0 + tol)) throw std::domain_error("slot_cost: cost term outside [0, 1]");
  const auto& w = cfg.weights;
  return w[0] * std::clamp(eps_sens, 0.0, 1.0) + w[1] * std::clamp(phi_comm, 0.0, 1.0) +
         w[2] * std::clamp(psi_comp, 0.0, 1.0);
}

double epoch_reward(const std::vector<double>& costs) {
  if (costs.empty()) throw std::invalid_argument("epoch_reward: no costs");
  double s = 0.0;
  for (double c : costs) s += c;
  return -s / costs.size();
}

void KpiAccumulator::merge(const KpiAccumulator& o) {
  crlb_range_sum += o.crlb_range_sum;
  crlb_vel_sum += o.crlb_vel_sum;
  crlb_count += o.crlb_count;
  rate_eff_sum += o.rate_eff_sum;
  prr_sum += o.prr_sum;
  tx_count += o.tx_count;
  cbr_sum += o.cbr_sum;
  e2e_sum_s += o.e2e_sum_s;
  tcomp_s_sum_s += o.tcomp_s_sum_s;
  energy_sum_j += o.energy_sum_j;
  vehicle_slots += o.vehicle_slots;
  mec_delay_sum_s += o.mec_delay_sum_s;
  mec_delay_c_sum_s += o.mec_delay_c_sum_s;
  slots += o.slots;
  viol_c7 += o.viol_c7;
  viol_c8 += o.viol_c8;
  viol_c9 += o.viol_c9;
  cost_sum += o.cost_sum;
  prr_by_distance.merge(o.prr_by_distance);
}

IsccEnv::IsccEnv(SimConfig cfg, EnvOptions opts)
    : cfg_(std::move(cfg)), opts_(std::move(opts)), pool_(ResourcePool::from_config(cfg_)),
      domain_(mac::ActionDomain::from_config(cfg_)) {
  if (pool_.rri_slots != cfg_.slots_per_epoch()) throw ConfigError("epoch length must equal the RRI");
  if (opts_.forced_offloaders < 0) throw std::invalid_argument("forced_offloaders must be >= 0");
}

std::vector<Observation> IsccEnv::reset(std::uint64_t seed) {
  seed_ = seed;
  cfg_.seed = seed;
  rng_.emplace(seed);
  world_ = channel::place_vehicles(cfg_, *rng_);
  n_ = static_cast<int>(world_.vehicles.size());
  if (n_ < 1) throw ConfigError("scenario has no vehicles");
  if (opts_.forced_offloaders > n_) throw std::invalid_argument("forced_offloaders exceeds the vehicle count");
  chan_.emplace(cfg_, *rng_);
  epoch_ = 0;
  slot_ = 0;

  grids_.clear();
  grids_.reserve(n_);
  for (int i = 0; i < n_; ++i) grids_.emplace_back(pool_, cfg_.sensing_window_slots(), cfg_.cbr_window_slots);
  res_.assign(n_, {});
  for (int i = 0; i < n_; ++i) {
    auto g = rng_->stream(Stream::mac, static_cast<std::uint64_t>(i));
    auto& r = res_[i];
    r.resource = static_cast<int>(g.uniform_int(pool_.size()));
    r.rc_index = static_cast<int>(g.uniform_int(domain_.rc_set.size()));
    r.rc_remaining = domain_.rc_set[r.rc_index];
    r.keep_index = static_cast<int>(g.uniform_int(domain_.keep_set.size()));
    r.keep_prob = domain_.keep_set[r.keep_index];
    r.rri_ms = cfg_.rri_ms;
  }
  pending_.assign(n_, 0);
  comm_.assign(n_, {});
  uploads_.assign(n_, {});
  mec_ = {};
  mec_pending_c_ = mec_pending_s_ = 0.0;
  kpi_ = KpiAccumulator{};
  acc_.assign(n_, {});
  offloaded_last_epoch_.assign(n_, 0);
  offloaded_this_epoch_.assign(n_, 0);
  snap_ = chan_->sample(world_, 0, 0);
  obs_.resize(n_);
  for (int i = 0; i < n_; ++i) obs_[i] = build_obs(i);
  rebuild_masks();
  return obs_;
}

void IsccEnv::rebuild_masks() {
  masks_.resize(n_);
  for (int i = 0; i < n_; ++i) {
    std::vector<int> cands;
    if (pending_[i])
      cands = grids_[i].candidate_set(cfg_.rsrp_threshold_dbm, cfg_.candidate_retain_fraction, cfg_.threshold_step_db);
    masks_[i] = mac::build_mask(domain_, cands, res_[i], pending_[i] != 0);
  }
}

Observation IsccEnv::build_obs(int i) const {
  Observation o{};
  const double s = cfg_.slots_per_epoch();
  o[kObsQueue] = static_cast<double>(comm_[i].queue_bits);
  o[kObsSensWork] = acc_[i].v_s / s;
  o[kObsOvComm] = acc_[i].ov_c / s;
  o[kObsOvSens] = acc_[i].ov_s / s;
  o[kObsCbr] = comm_[i].cbr;
  o[kObsPrr] = comm_[i].prr_ema;
  o[kObsRateEff] = comm_[i].rate_eff_ema;
  o[kObsSinrDb] = 10.0 * std::log10(std::max(comm_[i].avg_sinr_linear, 1e-3));
  o[kObsRcRemaining] = res_[i].rc_remaining;
  o[kObsV2iDb] = 10.0 * std::log10(std::max(snap_.v2i[i], 1e-30));
  o[kObsBacklogC] = backlog_level(mec_.l_c, cfg_);
  o[kObsBacklogS] = backlog_level(mec_.l_s, cfg_);
  return o;
}

std::vector<double> IsccEnv::global_state(const std::vector<Observation>& normalized_obs) const {
  if (static_cast<int>(normalized_obs.size()) != n_) throw std::invalid_argument("global_state: wrong agent count");
  std::vector<double> g;
  g.reserve(static_cast<std::size_t>(n_) * kObsDim + 2);
  for (const auto& o : normalized_obs) g.insert(g.end(), o.begin(), o.end());
  g.push_back(mec_.l_c / cfg_.c_mec_cycles_per_slot);
  g.push_back(mec_.l_s / cfg_.c_mec_cycles_per_slot);
  return g;
}

LocalView IsccEnv::local_view(int i) const {
  LocalView v;
  v.vehicle = i;
  for (int j = 0; j < n_; ++j) {
    if (j == i) continue;
    const double d = snap_.distance(i, j);
    if (d <= cfg_.r_sens_m) v.targets.push_back({j, d, channel::radial_velocity_mps(world_, i, j)});
  }
  v.queue_bits = comm_[i].queue_bits;
  v.prr_ema = comm_[i].prr_ema;
  v.avg_sinr_linear = comm_[i].avg_sinr_linear;
  v.v2i_gain = snap_.v2i[i];
  v.mec_l_c = mec_.l_c;
  v.mec_l_s = mec_.l_s;
  for (int j = 0; j < n_; ++j)
    if (j != i && offloaded_last_epoch_[j]) {
      ++v.offloaders_last_epoch;
      v.offloader_gains.push_back(snap_.v2i[j]);
    }
  v.upload_backlog_bits = static_cast<std::int64_t>(uploads_[i].backlog_bits());
  return v;
}

EpochResult IsccEnv::step_epoch(const std::vector<mac::ActionVector>& actions) {
  if (!rng_) throw std::logic_error("step_epoch before reset");
  if (done()) throw std::logic_error("step_epoch after the episode ended");
  if (static_cast<int>(actions.size()) != n_) throw std::logic_error("step_epoch: one action per vehicle required");
  std::vector<DecodedAction> act(n_);
  for (int i = 0; i < n_; ++i) {
    if (!masks_[i].admits(actions[i])) throw std::logic_error("step_epoch: infeasible action for vehicle " + std::to_string(i));
    act[i] = decode_action(domain_, masks_[i], actions[i]);
    if (pending_[i]) {
      auto& r = res_[i];
      r.resource = act[i].resource;
      r.rc_index = actions[i].idx[mac::kRc];
      r.rc_remaining = act[i].rc;
      r.keep_index = actions[i].idx[mac::kKeep];
      r.keep_prob = act[i].keep_prob;
      pending_[i] = 0;
    }
  }

  acc_.assign(n_, {});
  std::fill(offloaded_this_epoch_.begin(), offloaded_this_epoch_.end(), 0);
  epoch_cost_sum_ = 0.0;
  ep_prr_sum_ = ep_cbr_sum_ = ep_crlb_sum_ = ep_e2e_sum_ = ep_energy_sum_ = ep_mec_sum_ = 0.0;
  ep_tx_ = ep_crlb_n_ = ep_c7_ = ep_c8_ = ep_c9_ = 0;

  const int slots = cfg_.slots_per_epoch();
  const std::int64_t epoch_start = slot_;
  SlotTrace trace;
  for (int s = 0; s < slots; ++s) run_slot(s, act, opts_.on_slot ? &trace : nullptr);

  EpochResult r;
  r.epoch = epoch_;
  r.mac_events.resize(n_);
  auto tick_rng_base = static_cast<std::uint64_t>(epoch_) * 4;
  for (int i = 0; i < n_; ++i) {
    auto g = rng_->stream(Stream::mac, (std::uint64_t{1} << 32) + i);
    g.seek(tick_rng_base);
    auto ev = mac::tick_reservation(res_[i], g, domain_.rc_set);
    if (ev == mac::ReselectionEvent::reselect) {
      pending_[i] = 1;
    } else if (grids_[i].observed_busy(res_[i].resource, epoch_start, cfg_.rsrp_threshold_dbm)) {
      // another vehicle was heard on our resource during this RRI
      pending_[i] = 1;
      ev = mac::ReselectionEvent::reevaluate;
      res_[i].rc_remaining = 0;
    }
    r.mac_events[i] = ev;
    if (opts_.mac_trace) mac::write_mac_trace_row(*opts_.mac_trace, epoch_, i, res_[i], ev);
  }
  offloaded_last_epoch_ = offloaded_this_epoch_;

  const double vs = static_cast<double>(n_) * slots;
  r.reward = -epoch_cost_sum_ / vs;
  r.mean_prr = ep_tx_ ? ep_prr_sum_ / ep_tx_ : 0.0;
  r.mean_cbr = ep_cbr_sum_ / vs;
  r.mean_crlb_range = ep_crlb_n_ ? ep_crlb_sum_ / ep_crlb_n_ : 0.0;
  r.mean_e2e_ms = ep_e2e_sum_ / vs * 1e3;
  r.mean_energy_mj = ep_energy_sum_ / vs * 1e3;
  r.mean_mec_delay_ms = ep_mec_sum_ / slots * 1e3;
  r.c7 = ep_c7_;
  r.c8 = ep_c8_;
  r.c9 = ep_c9_;

  ++epoch_;
  for (int i = 0; i < n_; ++i) obs_[i] = build_obs(i);
  rebuild_masks();
  r.observations = obs_;
  r.masks = masks_;
  r.mec_l_c = mec_.l_c;
  r.mec_l_s = mec_.l_s;
  r.done = done();
  write_epoch_log(r);
  return r;
}

void IsccEnv::run_slot(int s, const std::vector<DecodedAction>& act, SlotTrace* trace) {
  const std::int64_t t = slot_;
  snap_ = chan_->sample(world_, t, epoch_);
  if (trace) {
    trace->epoch = epoch_;
    trace->slot = t;
    trace->stages.clear();
    trace->vehicles.assign(n_, {});
  }
  auto stage = [&](Stage st) {
    if (trace) trace->stages.push_back(st);
  };

  // sensing
  stage(Stage::sensing);
  std::vector<sensing::SensingReport> rep(n_);
  std::vector<sensing::TargetGeometry> cands;
  for (int i = 0; i < n_; ++i) {
    cands.clear();
    for (int j = 0; j < n_; ++j)
      if (j != i && snap_.distance(i, j) <= cfg_.r_sens_m)
        cands.push_back({j, snap_.distance(i, j), channel::radial_velocity_mps(world_, i, j)});
    rep[i] = sensing::build_report(cands, sensing::SensingAlloc{act[i].n_s, act[i].m_s, cfg_.tx_power_w}, cfg_);
  }

  // arrivals
  stage(Stage::arrivals);
  std::vector<std::int64_t> arr(n_);
  for (int i = 0; i < n_; ++i) {
    auto g = rng_->stream(Stream::traffic, static_cast<std::uint64_t>(i));
    g.seek(static_cast<std::uint64_t>(t) * 2);
    arr[i] = comm::arrivals(g, cfg_);
  }

  // sidelink transmissions
  stage(Stage::tx_outcome);
  std::vector<comm::Transmitter> tx;
  std::vector<int> tx_slot(n_, -1);
  for (int i = 0; i < n_; ++i)
    if (act[i].n_c > 0 && comm_[i].queue_bits > 0) {
      tx_slot[i] = static_cast<int>(tx.size());
      tx.push_back({i, res_[i].resource, act[i].n_c});
    }
  const auto sinr = comm::sinr_matrix(tx, snap_, cfg_);
  std::vector<comm::TxOutcome> out(n_);
  for (int i = 0; i < n_; ++i) {
    if (tx_slot[i] >= 0) {
      const auto rx = comm::receiver_set(i, snap_, cfg_);
      std::span<const double> row(sinr.data() + static_cast<std::size_t>(tx_slot[i]) * n_, n_);
      out[i] = comm::tx_outcome(rx, row, act[i].n_c, comm_[i].queue_bits, cfg_);
      kpi_.prr_by_distance.add(out[i], snap_, i);
    } else {
      out[i] = comm::idle_outcome(comm_[i].queue_bits, cfg_);
    }
  }
  // reservations announced in this slot offset, as each vehicle senses them
  {
    const double rsrp_offset_db = cfg_.tx_power_dbm() - 10.0 * std::log10(12.0 * pool_.prb_per_subchannel);
    std::vector<int> here;
    for (int i = 0; i < n_; ++i)
      if (pool_.offset(res_[i].resource) == s) here.push_back(i);
    std::vector<mac::HeardReservation> heard;
    for (int j = 0; j < n_; ++j) {
      heard.clear();
      const bool own_slot = pool_.offset(res_[j].resource) == s;  // half duplex: blind while transmitting
      if (!own_slot)
        for (int i : here) {
          const double g = snap_.v2v_gain(i, j);
          if (g <= 0) continue;
          heard.push_back({res_[i].resource, rsrp_offset_db + 10.0 * std::log10(g), act[i].n_s + act[i].n_c});
        }
      grids_[j].record_observation(t, heard, cfg_.rsrp_threshold_dbm);
      comm_[j].cbr = grids_[j].cbr();
    }
  }

  stage(Stage::queue_update);
  std::vector<std::int64_t> q_before(n_), served(n_);
  for (int i = 0; i < n_; ++i) {
    q_before[i] = comm_[i].queue_bits;
    served[i] = comm::update_queue(comm_[i], out[i], arr[i]);
    comm::update_emas(comm_[i], out[i], cfg_);
  }

  stage(Stage::utility);
  std::vector<double> phi(n_);
  for (int i = 0; i < n_; ++i) phi[i] = comm::comm_utility(out[i].prr, out[i].rate_eff_bps, cfg_).deficiency;

  stage(Stage::comm_workload);
  std::vector<double> v_c(n_);
  for (int i = 0; i < n_; ++i) v_c[i] = cfg_.kappa_c_cycles_per_bit * static_cast<double>(arr[i]);

  stage(Stage::local_schedule);
  std::vector<compute::LocalComputeState> loc(n_);
  for (int i = 0; i < n_; ++i) loc[i] = compute::local_schedule(v_c[i], rep[i].workload_cycles, cfg_);

  stage(Stage::overflow);
  std::vector<double> d_c(n_, 0.0), d_s(n_, 0.0), backlog_before(n_, 0.0), dropped(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    backlog_before[i] = uploads_[i].backlog_bits();
    if (loc[i].ov_c > 0) {
      if (act[i].eta_c == 1) {
        d_c[i] = cfg_.xi_c_bits_per_cycle * loc[i].ov_c;
        uploads_[i].push({compute::TaskClass::comm, compute::Route::mec, d_c[i], loc[i].ov_c});
      } else {
        dropped[i] += loc[i].ov_c;
      }
    }
    if (loc[i].ov_s > 0) {
      if (act[i].eta_s == 1 || act[i].eta_s == 2) {
        d_s[i] = cfg_.xi_s_bits_per_cycle * loc[i].ov_s;
        uploads_[i].push({compute::TaskClass::sens, act[i].eta_s == 1 ? compute::Route::mec : compute::Route::cloud,
                          d_s[i], loc[i].ov_s});
      } else {
        dropped[i] += loc[i].ov_s;
      }
    }
  }

  stage(Stage::offload_link);
  std::vector<int> offl;
  std::vector<int> n_o(n_);
  std::vector<double> v2i(n_);
  for (int i = 0; i < n_; ++i) {
    n_o[i] = act[i].n_o;
    v2i[i] = snap_.v2i[i];
    if (!uploads_[i].empty() && act[i].n_o > 0) offl.push_back(i);
  }
  const auto off_sinr = compute::offload_sinr(offl, v2i, n_o, cfg_);
  std::vector<double> rate(n_, 0.0), t_tx_c(n_, 0.0), t_tx_s(n_, 0.0), e_tx_c(n_, 0.0), e_tx_s(n_, 0.0);
  double next_c = 0.0, next_s = 0.0;
  for (int i = 0; i < n_; ++i) {
    rate[i] = compute::offload_rate_bps(off_sinr[i], n_o[i], cfg_);
    auto fifo_delay = [&](double bits) {
      return rate[i] > 0 ? std::min(cfg_.delay_cap_s, bits / rate[i]) : cfg_.delay_cap_s;
    };
    if (d_c[i] > 0) t_tx_c[i] = fifo_delay(backlog_before[i] + d_c[i]);
    if (d_s[i] > 0) t_tx_s[i] = fifo_delay(backlog_before[i] + d_c[i] + d_s[i]);
    if (rate[i] > 0 && !uploads_[i].empty()) {
      offloaded_this_epoch_[i] = 1;
      auto dep = uploads_[i].transmit(rate[i] * cfg_.slot_s, rate[i]);
      e_tx_c[i] = cfg_.tx_power_w * dep.bits_c / rate[i];
      e_tx_s[i] = cfg_.tx_power_w * dep.bits_s / rate[i];
      for (const auto& ch : dep.completed) {
        if (ch.route != compute::Route::mec) continue;
        (ch.cls == compute::TaskClass::comm ? next_c : next_s) += ch.cycles;
      }
    }
  }

  stage(Stage::mec_update);
  const double forced = opts_.forced_offloaders * opts_.forced_overflow_cycles;
  const double in_c = mec_pending_c_, in_s = mec_pending_s_ + forced;
  if (trace) {
    trace->mec_l_c_before = mec_.l_c;
    trace->mec_l_s_before = mec_.l_s;
    trace->mec_arrivals_c = in_c;
    trace->mec_arrivals_s = in_s;
  }
  compute::step_mec(mec_, in_c, in_s, cfg_);
  mec_pending_c_ = next_c;
  mec_pending_s_ = next_s;

  stage(Stage::completion);
  std::vector<compute::OffloadOutcome> comp(n_);
  for (int i = 0; i < n_; ++i) {
    compute::CompletionInput in;
    in.eta_c = loc[i].ov_c > 0 ? act[i].eta_c : 0;
    in.eta_s = loc[i].ov_s > 0 ? act[i].eta_s : 0;
    in.t_tx_c_s = t_tx_c[i];
    in.t_tx_s_s = t_tx_s[i];
    in.e_tx_c_j = e_tx_c[i];
    in.e_tx_s_j = e_tx_s[i];
    in.sl_delay_s = out[i].sl_delay_s;
    in.m_s_sym = act[i].m_s;
    in.sensing_active = act[i].n_s > 0;
    comp[i] = compute::completion(loc[i], in, mec_, cfg_);
  }
  stage(Stage::energy);
  stage(Stage::comp_penalty);

  stage(Stage::cost);
  for (int i = 0; i < n_; ++i) {
    const double eps = rep[i].normalized_penalty;
    const double cost = slot_cost(eps, phi[i], comp[i].psi, cfg_);
    epoch_cost_sum_ += cost;
    kpi_.cost_sum += cost;

    auto& a = acc_[i];
    a.v_s += rep[i].workload_cycles;
    a.ov_c += loc[i].ov_c;
    a.ov_s += loc[i].ov_s;

    if (out[i].transmitted) {
      kpi_.rate_eff_sum += out[i].rate_eff_bps;
      kpi_.prr_sum += out[i].prr;
      ++kpi_.tx_count;
      ep_prr_sum_ += out[i].prr;
      ++ep_tx_;
    }
    if (!rep[i].detected.empty() && std::isfinite(rep[i].root_crlb_range_m) && std::isfinite(rep[i].root_crlb_vel_mps)) {
      kpi_.crlb_range_sum += rep[i].root_crlb_range_m;
      kpi_.crlb_vel_sum += rep[i].root_crlb_vel_mps;
      ++kpi_.crlb_count;
      ep_crlb_sum_ += rep[i].root_crlb_range_m;
      ++ep_crlb_n_;
    }
    kpi_.cbr_sum += comm_[i].cbr;
    kpi_.e2e_sum_s += comp[i].t_e2e_c_s;
    kpi_.tcomp_s_sum_s += comp[i].t_comp_s_s;
    kpi_.energy_sum_j += comp[i].e_tot_j;
    ++kpi_.vehicle_slots;
    kpi_.viol_c7 += comp[i].viol_delay_c;
    kpi_.viol_c8 += comp[i].viol_delay_s;
    kpi_.viol_c9 += comp[i].viol_energy;
    ep_cbr_sum_ += comm_[i].cbr;
    ep_e2e_sum_ += comp[i].t_e2e_c_s;
    ep_energy_sum_ += comp[i].e_tot_j;
    ep_c7_ += comp[i].viol_delay_c;
    ep_c8_ += comp[i].viol_delay_s;
    ep_c9_ += comp[i].viol_energy;

    if (opts_.comm_csv) comm::write_metrics_row(*opts_.comm_csv, t, i, out[i], comm_[i].cbr, comm_[i].queue_bits);
    if (opts_.compute_csv)
      compute::write_compute_row(*opts_.compute_csv, t, i, loc[i], act[i].eta_c, act[i].eta_s, comp[i], mec_);

    if (trace) {
      auto& v = trace->vehicles[i];
      v.queue_before = q_before[i];
      v.arrivals = arr[i];
      v.served = served[i];
      v.queue_after = comm_[i].queue_bits;
      v.transmitted = out[i].transmitted;
      v.prr = out[i].prr;
      v.rate_eff_bps = out[i].rate_eff_bps;
      v.eps = eps;
      v.phi = phi[i];
      v.psi = comp[i].psi;
      v.cost = cost;
      v.v_c = v_c[i];
      v.v_s = rep[i].workload_cycles;
      v.ov_c = loc[i].ov_c;
      v.ov_s = loc[i].ov_s;
      v.offload_rate_bps = rate[i];
      v.t_tx_c_s = t_tx_c[i];
      v.t_tx_s_s = t_tx_s[i];
      v.t_comp_c_s = comp[i].t_comp_c_s;
      v.t_comp_s_s = comp[i].t_comp_s_s;
      v.e_tot_j = comp[i].e_tot_j;
      v.dropped_cycles = dropped[i];
    }
  }
  kpi_.mec_delay_sum_s += mec_.que_delay_s_s;
  kpi_.mec_delay_c_sum_s += mec_.que_delay_c_s;
  ++kpi_.slots;
  ep_mec_sum_ += mec_.que_delay_s_s;

  if (trace) {
    trace->mec_served_c = mec_.served_c;
    trace->mec_served_s = mec_.served_s;
    trace->mec_l_c_after = mec_.l_c;
    trace->mec_l_s_after = mec_.l_s;
    trace->mec_que_delay_c_s = mec_.que_delay_c_s;
    trace->mec_que_delay_s_s = mec_.que_delay_s_s;
    opts_.on_slot(*trace);
  }

  ++slot_;
  channel::advance_mobility(world_, cfg_.slot_s);
}

void IsccEnv::write_epoch_log(const EpochResult& r) const {
  if (!opts_.epoch_log) return;
  nlohmann::ordered_json j;
  j["episode"] = opts_.episode;
  j["epoch"] = r.epoch;
  j["reward"] = r.reward;
  j["mean_prr"] = r.mean_prr;
  j["mean_cbr"] = r.mean_cbr;
  j["mean_crlb_range"] = r.mean_crlb_range;
  j["mec_lc"] = r.mec_l_c;
  j["mec_ls"] = r.mec_l_s;
  j["mean_e2e_ms"] = r.mean_e2e_ms;
  j["mean_energy_mj"] = r.mean_energy_mj;
  j["c7_violations"] = r.c7;
  j["c8_violations"] = r.c8;
  j["c9_violations"] = r.c9;
  *opts_.epoch_log << j.dump() << '\n';
}

}  // namespace iscc::env
