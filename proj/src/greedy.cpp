#include "iscc/greedy.hpp"

#include <algorithm>
#include <stdexcept>

#include "iscc/comm.hpp"
#include "iscc/compute.hpp"
#include "iscc/sensing.hpp"

namespace iscc::greedy {

Prediction predict_epoch(const env::LocalView& view, const env::DecodedAction& a, const SimConfig& cfg) {
  const double slots = cfg.slots_per_epoch();
  Prediction p;
  const auto rep = sensing::build_report(view.targets, sensing::SensingAlloc{a.n_s, a.m_s, cfg.tx_power_w}, cfg);
  p.sensing = slots * rep.normalized_penalty;

  const double packet_bits = 8.0 * cfg.packet_bytes;
  const double v_c = cfg.kappa_c_cycles_per_bit * cfg.msg_rate_hz * cfg.slot_s * packet_bits;
  const auto loc = compute::local_schedule(v_c, rep.workload_cycles, cfg);
  const int eta_c = loc.ov_c > 0 ? a.eta_c : 0;
  const int eta_s = loc.ov_s > 0 ? a.eta_s : 0;
  const double d_c = eta_c == 1 ? cfg.xi_c_bits_per_cycle * loc.ov_c : 0.0;
  const double d_s = eta_s != 0 ? cfg.xi_s_bits_per_cycle * loc.ov_s : 0.0;
  const double backlog = static_cast<double>(view.upload_backlog_bits);

  double rate = 0.0;
  if (a.n_o > 0 && d_c + d_s + backlog > 0) {
    std::vector<double> gains{view.v2i_gain};
    gains.insert(gains.end(), view.offloader_gains.begin(), view.offloader_gains.end());
    std::vector<int> who(gains.size()), n_o(gains.size(), a.n_o);
    for (std::size_t k = 0; k < who.size(); ++k) who[k] = static_cast<int>(k);
    rate = compute::offload_rate_bps(compute::offload_sinr(who, gains, n_o, cfg)[0], a.n_o, cfg);
  }
  auto fifo = [&](double bits) { return rate > 0 ? std::min(cfg.delay_cap_s, bits / rate) : cfg.delay_cap_s; };
  compute::CompletionInput in;
  in.eta_c = eta_c;
  in.eta_s = eta_s;
  in.t_tx_c_s = d_c > 0 ? fifo(backlog + d_c) : 0.0;
  in.t_tx_s_s = d_s > 0 ? fifo(backlog + d_c + d_s) : 0.0;
  in.e_tx_c_j = rate > 0 ? cfg.tx_power_w * std::min(cfg.slot_s, (backlog + d_c + d_s) / rate) : 0.0;
  in.m_s_sym = a.m_s;
  in.sensing_active = a.n_s > 0;
  compute::MecState mec;
  mec.l_c = view.mec_l_c;
  mec.l_s = view.mec_l_s;
  mec.que_delay_c_s = mec.l_c * cfg.slot_s / cfg.c_mec_cycles_per_slot;
  mec.que_delay_s_s = (mec.l_c + mec.l_s) * cfg.slot_s / cfg.c_mec_cycles_per_slot;
  p.compute = slots * compute::completion(loc, in, mec, cfg).psi;
  return p;
}

int comm_floor(const env::LocalView& view, const SimConfig& cfg) {
  const auto need = comm::min_prb_demand(view.prr_ema, view.avg_sinr_linear, cfg);
  const int hi = cfg.n_sl_prb_per_vehicle - std::max(cfg.min_sensing_prb, 0);
  return std::clamp(need.value_or(4), 0, std::max(hi, 0));
}

mac::ActionMask valid_mask(const mac::ActionMask& m, const SimConfig& cfg, int min_n_c) {
  auto v = m;
  auto& ns = v.allowed[mac::kNs];
  for (int k = 0; k < static_cast<int>(ns.size()); ++k)
    if (k < cfg.min_sensing_prb || k > m.n_sl - min_n_c) ns[k] = 0;
  auto& nc = v.allowed[mac::kNc];
  for (int k = 0; k < std::min<int>(min_n_c, static_cast<int>(nc.size())); ++k) nc[k] = 0;
  auto& ms = v.allowed[mac::kMs];
  for (int k = 0; k < std::min<int>(cfg.min_sensing_symbols - 1, static_cast<int>(ms.size())); ++k) ms[k] = 0;
  for (int h = 0; h < mac::kNumHeads; ++h)
    if (v.count(h) == 0) throw std::logic_error("greedy: no valid value left for head " + std::string(mac::head_name(h)));
  return v;
}

namespace {

int first_allowed(const std::vector<std::uint8_t>& a) {
  for (std::size_t k = 0; k < a.size(); ++k)
    if (a[k]) return static_cast<int>(k);
  return -1;
}
int last_allowed(const std::vector<std::uint8_t>& a) {
  for (std::size_t k = a.size(); k-- > 0;)
    if (a[k]) return static_cast<int>(k);
  return -1;
}

}  // namespace

mac::ActionVector corner_action(Objective obj, const mac::ActionMask& valid, const env::LocalView& view,
                                const mac::ActionDomain& dom, const SimConfig& cfg, int min_n_c, CounterRng& rng) {
  auto a = mac::sample_uniform(valid, rng);  // reservation heads
  a.idx[mac::kNo] = last_allowed(valid.allowed[mac::kNo]);
  a.idx[mac::kNc] = min_n_c;
  if (obj == Objective::sensing) {
    a.idx[mac::kNs] = last_allowed(valid.allowed[mac::kNs]);
    a.idx[mac::kMs] = last_allowed(valid.allowed[mac::kMs]);
    a.idx[mac::kEtaC] = 1;
    a.idx[mac::kEtaS] = 1;
    return a;
  }
  a.idx[mac::kNs] = first_allowed(valid.allowed[mac::kNs]);
  a.idx[mac::kMs] = first_allowed(valid.allowed[mac::kMs]);
  double best = 0.0;
  bool have = false;
  auto trial = a;
  for (int ec = 0; ec < 2; ++ec)
    for (int es = 0; es < 3; ++es) {
      trial.idx[mac::kEtaC] = ec;
      trial.idx[mac::kEtaS] = es;
      const double s = predict_epoch(view, env::decode_action(dom, valid, trial), cfg).compute;
      if (!have || s < best) {
        best = s;
        have = true;
        a = trial;
      }
    }
  return a;
}

std::size_t pick_best(Objective obj, const std::vector<Scored>& cands) {
  if (cands.empty()) throw std::invalid_argument("pick_best: no candidates");
  std::size_t best = 0;
  for (std::size_t k = 1; k < cands.size(); ++k) {
    const auto& c = cands[k];
    const auto& b = cands[best];
    if (c.score < b.score) {
      best = k;
    } else if (c.score == b.score) {
      if (obj == Objective::sensing && c.action.idx[mac::kNs] > b.action.idx[mac::kNs]) best = k;
      if (obj == Objective::compute && c.action.idx[mac::kMs] < b.action.idx[mac::kMs]) best = k;
    }
  }
  return best;
}

mac::ActionVector choose(Objective obj, const env::LocalView& view, const mac::ActionMask& mask,
                         const mac::ActionDomain& dom, const SimConfig& cfg, int n_candidates, CounterRng& rng) {
  const int min_n_c = comm_floor(view, cfg);
  const auto valid = valid_mask(mask, cfg, min_n_c);
  std::vector<Scored> cands;
  cands.reserve(n_candidates + 1);
  auto score = [&](const mac::ActionVector& a) {
    const auto p = predict_epoch(view, env::decode_action(dom, valid, a), cfg);
    return obj == Objective::sensing ? p.sensing : p.compute;
  };
  const auto corner = corner_action(obj, valid, view, dom, cfg, min_n_c, rng);
  cands.push_back({corner, score(corner)});
  for (int k = 0; k < n_candidates; ++k) {
    const auto a = mac::sample_uniform(valid, rng);
    cands.push_back({a, score(a)});
  }
  return cands[pick_best(obj, cands)].action;
}

std::vector<mac::ActionVector> GreedyPolicy::act(const env::IsccEnv& env, const std::vector<env::Observation>&,
                                                 CounterRng& rng) {
  std::vector<mac::ActionVector> out;
  for (int i = 0; i < env.n_agents(); ++i)
    out.push_back(choose(obj_, env.local_view(i), env.masks()[i], env.domain(), env.config(), k_, rng));
  return out;
}

}  // namespace iscc::greedy
