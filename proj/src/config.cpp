#include "iscc/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <variant>

#include <json.hpp>
#include <toml.hpp>

namespace iscc {

using nlohmann::json;

namespace {

using Member = std::variant<double SimConfig::*, int SimConfig::*, bool SimConfig::*,
                            std::uint64_t SimConfig::*, std::array<double, 2> SimConfig::*,
                            std::array<double, 3> SimConfig::*, std::vector<double> SimConfig::*,
                            std::vector<int> SimConfig::*>;

struct Field {
  const char* section;  // empty string: top level
  const char* key;
  Member member;
  bool derived;
};

const std::vector<Field>& registry() {
  static const std::vector<Field> fields = {
      {"radio", "carrier_freq_hz", &SimConfig::carrier_freq_hz, false},
      {"radio", "bandwidth_hz", &SimConfig::bandwidth_hz, false},
      {"radio", "numerology_mu", &SimConfig::numerology_mu, false},
      {"radio", "scs_hz", &SimConfig::scs_hz, true},
      {"radio", "slot_s", &SimConfig::slot_s, true},
      {"radio", "sym_s", &SimConfig::sym_s, true},
      {"radio", "guard_band_prb", &SimConfig::guard_band_prb, false},
      {"radio", "n_prb_pool", &SimConfig::n_prb_pool, true},
      {"radio", "n_sl_prb_per_vehicle", &SimConfig::n_sl_prb_per_vehicle, false},
      {"radio", "n_o_max_prb", &SimConfig::n_o_max_prb, false},
      {"radio", "tx_power_w", &SimConfig::tx_power_w, false},
      {"radio", "rsrp_threshold_dbm", &SimConfig::rsrp_threshold_dbm, false},
      {"radio", "snr_decode_threshold_db", &SimConfig::snr_decode_threshold_db, false},
      {"radio", "antenna_gain_db", &SimConfig::antenna_gain_db, false},
      {"radio", "noise_figure_db", &SimConfig::noise_figure_db, false},
      {"radio", "noise_temp_k", &SimConfig::noise_temp_k, false},

      {"channel", "pathloss_exponent", &SimConfig::pathloss_exponent, false},
      {"channel", "shadowing_sigma_db", &SimConfig::shadowing_sigma_db, false},
      {"channel", "fading_enabled", &SimConfig::fading_enabled, false},
      {"channel", "rsu_position_m", &SimConfig::rsu_position_m, false},
      {"channel", "rsu_offset_m", &SimConfig::rsu_offset_m, false},

      {"sensing", "rho_si", &SimConfig::rho_si, false},
      {"sensing", "rcs_dbsm", &SimConfig::rcs_dbsm, false},
      {"sensing", "gamma_det_s_db", &SimConfig::gamma_det_s_db, false},
      {"sensing", "r_sens_m", &SimConfig::r_sens_m, false},
      {"sensing", "crlb_weights", &SimConfig::crlb_weights, false},
      {"sensing", "min_sensing_prb", &SimConfig::min_sensing_prb, false},
      {"sensing", "min_sensing_symbols", &SimConfig::min_sensing_symbols, false},

      {"traffic", "packet_bytes", &SimConfig::packet_bytes, false},
      {"traffic", "msg_rate_hz", &SimConfig::msg_rate_hz, false},
      {"traffic", "awareness_range_m", &SimConfig::awareness_range_m, false},
      {"traffic", "d_c_min_bits", &SimConfig::d_c_min_bits, false},
      {"traffic", "epsilon0_bps", &SimConfig::epsilon0_bps, false},
      {"traffic", "delay_cap_s", &SimConfig::delay_cap_s, false},
      {"traffic", "ema_coef", &SimConfig::ema_coef, false},
      {"traffic", "prr_target", &SimConfig::prr_target, false},
      {"traffic", "comm_utility_weights", &SimConfig::comm_utility_weights, false},

      {"mobility", "density_veh_per_km", &SimConfig::density_veh_per_km, false},
      {"mobility", "n_vehicles", &SimConfig::n_vehicles, false},
      {"mobility", "road_length_m", &SimConfig::road_length_m, false},
      {"mobility", "max_speed_kmh", &SimConfig::max_speed_kmh, false},
      {"mobility", "n_lanes", &SimConfig::n_lanes, false},
      {"mobility", "lane_width_m", &SimConfig::lane_width_m, false},

      {"mac", "t_sen_ms", &SimConfig::t_sen_ms, false},
      {"mac", "t_sel_ms", &SimConfig::t_sel_ms, false},
      {"mac", "rri_ms", &SimConfig::rri_ms, false},
      {"mac", "cbr_window_slots", &SimConfig::cbr_window_slots, false},
      {"mac", "candidate_retain_fraction", &SimConfig::candidate_retain_fraction, false},
      {"mac", "threshold_step_db", &SimConfig::threshold_step_db, false},
      {"mac", "keep_prob_set", &SimConfig::keep_prob_set, false},
      {"mac", "rc_set", &SimConfig::rc_set, false},

      {"compute", "f_local_hz", &SimConfig::f_local_hz, false},
      {"compute", "c_mec_cycles_per_slot", &SimConfig::c_mec_cycles_per_slot, false},
      {"compute", "kappa_s_cycles_per_bit", &SimConfig::kappa_s_cycles_per_bit, false},
      {"compute", "kappa_c_cycles_per_bit", &SimConfig::kappa_c_cycles_per_bit, false},
      {"compute", "b_quant_bits", &SimConfig::b_quant_bits, false},
      {"compute", "kappa_dvfs", &SimConfig::kappa_dvfs, false},
      {"compute", "xi_c_bits_per_cycle", &SimConfig::xi_c_bits_per_cycle, false},
      {"compute", "xi_s_bits_per_cycle", &SimConfig::xi_s_bits_per_cycle, false},
      {"compute", "t_bh_s", &SimConfig::t_bh_s, false},
      {"compute", "t_cl_s", &SimConfig::t_cl_s, false},
      {"compute", "delta_c_s", &SimConfig::delta_c_s, false},
      {"compute", "delta_s_s", &SimConfig::delta_s_s, false},
      {"compute", "e_max_j_per_slot", &SimConfig::e_max_j_per_slot, false},
      {"compute", "comp_penalty_weights", &SimConfig::comp_penalty_weights, false},

      {"objective", "weights", &SimConfig::weights, false},

      {"train", "episodes", &SimConfig::episodes, false},
      {"train", "epochs_per_episode", &SimConfig::epochs_per_episode, false},
      {"train", "actor_lr", &SimConfig::actor_lr, false},
      {"train", "critic_lr", &SimConfig::critic_lr, false},
      {"train", "gamma", &SimConfig::gamma, false},
      {"train", "gae_lambda", &SimConfig::gae_lambda, false},
      {"train", "clip_eps", &SimConfig::clip_eps, false},
      {"train", "value_coef", &SimConfig::value_coef, false},
      {"train", "entropy_coef", &SimConfig::entropy_coef, false},
      {"train", "grad_clip_norm", &SimConfig::grad_clip_norm, false},
      {"train", "update_epochs", &SimConfig::update_epochs, false},
      {"train", "actor_hidden", &SimConfig::actor_hidden, false},
      {"train", "critic_hidden", &SimConfig::critic_hidden, false},
      {"train", "share_actor_params", &SimConfig::share_actor_params, false},
      {"train", "greedy_candidates", &SimConfig::greedy_candidates, false},

      {"", "seed", &SimConfig::seed, false},
  };
  return fields;
}

std::string field_name(const Field& f) {
  return std::string(f.section).empty() ? f.key : std::string(f.section) + "." + f.key;
}

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw ConfigError(field + ": " + what);
}

double as_double(const json& v, const std::string& name) {
  if (!v.is_number()) fail(name, "expected a number");
  return v.get<double>();
}

long long as_integer(const json& v, const std::string& name) {
  if (v.is_number_integer() || v.is_number_unsigned()) return v.get<long long>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<long long>(d);
  }
  fail(name, "expected an integer");
}

void assign(SimConfig& cfg, const Field& f, const json& v) {
  const std::string name = field_name(f);
  std::visit(
      [&](auto m) {
        using T = std::remove_reference_t<decltype(cfg.*m)>;
        if constexpr (std::is_same_v<T, double>) {
          cfg.*m = as_double(v, name);
        } else if constexpr (std::is_same_v<T, int>) {
          const long long x = as_integer(v, name);
          if (x < INT32_MIN || x > INT32_MAX) fail(name, "out of range");
          cfg.*m = static_cast<int>(x);
        } else if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) fail(name, "expected a boolean");
          cfg.*m = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          const long long x = as_integer(v, name);
          if (x < 0) fail(name, "must be nonnegative");
          cfg.*m = static_cast<std::uint64_t>(x);
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
          if (!v.is_array()) fail(name, "expected an array");
          T out;
          for (const auto& e : v) out.push_back(as_double(e, name));
          cfg.*m = out;
        } else if constexpr (std::is_same_v<T, std::vector<int>>) {
          if (!v.is_array()) fail(name, "expected an array");
          T out;
          for (const auto& e : v) out.push_back(static_cast<int>(as_integer(e, name)));
          cfg.*m = out;
        } else {
          if (!v.is_array() || v.size() != std::tuple_size_v<T>)
            fail(name, "expected an array of " + std::to_string(std::tuple_size_v<T>) + " numbers");
          T out{};
          for (std::size_t i = 0; i < out.size(); ++i) out[i] = as_double(v[i], name);
          cfg.*m = out;
        }
      },
      f.member);
}

json value_of(const SimConfig& cfg, const Field& f) {
  return std::visit([&](auto m) { return json(cfg.*m); }, f.member);
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(std::abs(a), std::abs(b)); }

json toml_to_json(const toml::node& node) {
  if (auto t = node.as_table()) {
    json out = json::object();
    for (auto&& [k, v] : *t) out[std::string(k.str())] = toml_to_json(v);
    return out;
  }
  if (auto a = node.as_array()) {
    json out = json::array();
    for (auto&& v : *a) out.push_back(toml_to_json(v));
    return out;
  }
  if (auto v = node.as_integer()) return json(v->get());
  if (auto v = node.as_floating_point()) return json(v->get());
  if (auto v = node.as_boolean()) return json(v->get());
  if (auto v = node.as_string()) return json(v->get());
  throw ConfigError("unsupported TOML value type (dates/times are not config values)");
}

SimConfig from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config root must be a table/object");
  std::map<std::string, const Field*> by_name;
  std::set<std::string> sections;
  for (const auto& f : registry()) {
    by_name[field_name(f)] = &f;
    if (*f.section) sections.insert(f.section);
  }
  SimConfig cfg;
  std::vector<std::pair<const Field*, json>> derived_given;
  auto take = [&](const std::string& name, const json& v) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw ConfigError("unknown key: " + name);
    if (it->second->derived)
      derived_given.emplace_back(it->second, v);
    else
      assign(cfg, *it->second, v);
  };
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    if (it.value().is_object()) {
      if (!sections.count(it.key())) throw ConfigError("unknown key: " + it.key());
      for (auto jt = it.value().begin(); jt != it.value().end(); ++jt) take(it.key() + "." + jt.key(), jt.value());
    } else {
      take(it.key(), it.value());
    }
  }
  // road_length_m is derived only when n_vehicles is given
  const bool road_given = doc.contains("mobility") && doc["mobility"].contains("road_length_m");
  const double road_in = cfg.road_length_m;
  if (const char* env = std::getenv("ISCC_SEED"); env && *env) {
    std::uint64_t s = 0;
    auto [p, ec] = std::from_chars(env, env + std::strlen(env), s);
    if (ec != std::errc() || *p != '\0') throw ConfigError("ISCC_SEED: not a nonnegative integer");
    cfg.seed = s;
  }
  finalize_config(cfg);
  if (road_given && cfg.n_vehicles > 0 && !close(road_in, cfg.road_length_m))
    fail("mobility.road_length_m", "density/road-length inconsistency with n_vehicles");
  for (const auto& [f, v] : derived_given) {
    SimConfig probe = cfg;
    assign(probe, *f, v);
    const json want = value_of(cfg, *f);
    const json got = value_of(probe, *f);
    const bool ok = (want.is_number() && got.is_number()) ? close(want.get<double>(), got.get<double>()) : want == got;
    if (!ok) fail(field_name(*f), "inconsistent with derived value " + want.dump());
  }
  return cfg;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string toml_number(double d) {
  if (!std::isfinite(d)) throw ConfigError("non-finite value cannot be saved");
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
  std::string s(buf, p);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string toml_value(const json& v) {
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
  if (v.is_number_float()) return toml_number(v.get<double>());
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += toml_value(v[i]);
  }
  return out + "]";
}

json to_json(const SimConfig& cfg) {
  json doc = json::object();
  for (const auto& f : registry()) {
    if (*f.section)
      doc[f.section][f.key] = value_of(cfg, f);
    else
      doc[f.key] = value_of(cfg, f);
  }
  return doc;
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

int SimConfig::vehicle_count() const {
  if (n_vehicles > 0) return n_vehicles;
  return static_cast<int>(std::llround(density_veh_per_km * road_length_m / 1000.0));
}
int SimConfig::slots_per_epoch() const { return static_cast<int>(std::llround(rri_ms * 1e-3 / slot_s)); }
int SimConfig::n_subchannels() const { return n_prb_pool / n_sl_prb_per_vehicle; }
int SimConfig::pool_size() const { return slots_per_epoch() * n_subchannels(); }
double SimConfig::wavelength_m() const { return kSpeedOfLight / carrier_freq_hz; }
double SimConfig::noise_psd_w_per_hz() const { return kBoltzmann * noise_temp_k * db_to_linear(noise_figure_db); }
double SimConfig::tx_power_dbm() const { return linear_to_db(tx_power_w * 1e3); }
double SimConfig::sinr_threshold_linear() const { return db_to_linear(snr_decode_threshold_db); }
double SimConfig::gamma_det_linear() const { return db_to_linear(gamma_det_s_db); }
int SimConfig::sensing_window_slots() const { return static_cast<int>(std::llround(t_sen_ms * 1e-3 / slot_s)); }

void finalize_config(SimConfig& c) {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(name, "must be strictly positive and finite");
  };
  auto nonneg = [](double v, const char* name) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(name, "must be nonnegative and finite");
  };
  if (c.numerology_mu < 0 || c.numerology_mu > 4) fail("radio.numerology_mu", "must be in 0..4");
  c.scs_hz = 15e3 * std::ldexp(1.0, c.numerology_mu);
  c.slot_s = 1e-3 * std::ldexp(1.0, -c.numerology_mu);
  c.sym_s = 1.0 / c.scs_hz;
  positive(c.carrier_freq_hz, "radio.carrier_freq_hz");
  positive(c.bandwidth_hz, "radio.bandwidth_hz");
  nonneg(c.guard_band_prb, "radio.guard_band_prb");
  c.n_prb_pool = static_cast<int>(std::floor(c.bandwidth_hz / (12.0 * c.scs_hz) - c.guard_band_prb));
  if (c.n_prb_pool < 1) fail("radio.n_prb_pool", "bandwidth leaves no usable PRBs");
  if (c.n_sl_prb_per_vehicle < 1 || c.n_sl_prb_per_vehicle > c.n_prb_pool)
    fail("radio.n_sl_prb_per_vehicle", "must be in 1..n_prb_pool");
  if (c.n_o_max_prb < 0) fail("radio.n_o_max_prb", "must be >= 0");
  positive(c.tx_power_w, "radio.tx_power_w");
  positive(c.noise_temp_k, "radio.noise_temp_k");
  if (!std::isfinite(c.rsrp_threshold_dbm)) fail("radio.rsrp_threshold_dbm", "must be finite");

  positive(c.pathloss_exponent, "channel.pathloss_exponent");
  nonneg(c.shadowing_sigma_db, "channel.shadowing_sigma_db");
  nonneg(c.rsu_offset_m, "channel.rsu_offset_m");

  nonneg(c.rho_si, "sensing.rho_si");
  positive(c.r_sens_m, "sensing.r_sens_m");
  if (c.crlb_weights[0] < 0 || c.crlb_weights[1] < 0) fail("sensing.crlb_weights", "must be nonnegative");
  if (c.min_sensing_prb < 0 || c.min_sensing_prb > c.n_sl_prb_per_vehicle)
    fail("sensing.min_sensing_prb", "must be in 0..n_sl_prb_per_vehicle");
  if (c.min_sensing_symbols < 1 || c.min_sensing_symbols > 14) fail("sensing.min_sensing_symbols", "must be in 1..14");

  if (c.packet_bytes < 0) fail("traffic.packet_bytes", "must be >= 0");
  nonneg(c.msg_rate_hz, "traffic.msg_rate_hz");
  if (c.msg_rate_hz * c.slot_s > 1.0) fail("traffic.msg_rate_hz", "at most one packet per slot");
  positive(c.awareness_range_m, "traffic.awareness_range_m");
  nonneg(c.d_c_min_bits, "traffic.d_c_min_bits");
  positive(c.epsilon0_bps, "traffic.epsilon0_bps");
  positive(c.delay_cap_s, "traffic.delay_cap_s");
  if (!(c.ema_coef > 0 && c.ema_coef <= 1)) fail("traffic.ema_coef", "must be in (0,1]");
  if (!(c.prr_target >= 0 && c.prr_target <= 1)) fail("traffic.prr_target", "must be in [0,1]");
  if (c.comm_utility_weights[0] < 0 || c.comm_utility_weights[1] < 0 ||
      c.comm_utility_weights[0] + c.comm_utility_weights[1] <= 0)
    fail("traffic.comm_utility_weights", "must be nonnegative with positive sum");

  positive(c.density_veh_per_km, "mobility.density_veh_per_km");
  if (c.n_vehicles < 0) fail("mobility.n_vehicles", "must be >= 0");
  if (c.n_vehicles > 0) {
    c.road_length_m = c.n_vehicles / c.density_veh_per_km * 1000.0;
  } else {
    positive(c.road_length_m, "mobility.road_length_m");
    const double n = c.density_veh_per_km * c.road_length_m / 1000.0;
    if (std::abs(n - std::round(n)) > 1e-9) fail("mobility.road_length_m", "density/road-length inconsistency");
  }
  if (c.vehicle_count() < 2) fail("mobility.n_vehicles", "need at least 2 vehicles");
  nonneg(c.max_speed_kmh, "mobility.max_speed_kmh");
  if (c.n_lanes < 1) fail("mobility.n_lanes", "must be >= 1");
  nonneg(c.lane_width_m, "mobility.lane_width_m");

  positive(c.t_sen_ms, "mac.t_sen_ms");
  positive(c.t_sel_ms, "mac.t_sel_ms");
  positive(c.rri_ms, "mac.rri_ms");
  const double rri_slots = c.rri_ms * 1e-3 / c.slot_s;
  if (std::abs(rri_slots - std::round(rri_slots)) > 1e-9) fail("mac.rri_ms", "must be a whole number of slots");
  if (c.cbr_window_slots < 1) fail("mac.cbr_window_slots", "must be >= 1");
  if (!(c.candidate_retain_fraction > 0 && c.candidate_retain_fraction <= 1))
    fail("mac.candidate_retain_fraction", "must be in (0,1]");
  positive(c.threshold_step_db, "mac.threshold_step_db");
  if (c.keep_prob_set.empty()) fail("mac.keep_prob_set", "must be nonempty");
  for (double p : c.keep_prob_set)
    if (!(p >= 0 && p <= 1)) fail("mac.keep_prob_set", "entries must be in [0,1]");
  if (c.rc_set.empty()) fail("mac.rc_set", "must be nonempty");
  for (int r : c.rc_set)
    if (r < 1) fail("mac.rc_set", "entries must be >= 1");

  positive(c.f_local_hz, "compute.f_local_hz");
  positive(c.c_mec_cycles_per_slot, "compute.c_mec_cycles_per_slot");
  nonneg(c.kappa_s_cycles_per_bit, "compute.kappa_s_cycles_per_bit");
  nonneg(c.kappa_c_cycles_per_bit, "compute.kappa_c_cycles_per_bit");
  if (c.b_quant_bits < 1) fail("compute.b_quant_bits", "must be >= 1");
  nonneg(c.kappa_dvfs, "compute.kappa_dvfs");
  nonneg(c.xi_c_bits_per_cycle, "compute.xi_c_bits_per_cycle");
  nonneg(c.xi_s_bits_per_cycle, "compute.xi_s_bits_per_cycle");
  positive(c.t_bh_s, "compute.t_bh_s");
  positive(c.t_cl_s, "compute.t_cl_s");
  positive(c.delta_c_s, "compute.delta_c_s");
  positive(c.delta_s_s, "compute.delta_s_s");
  positive(c.e_max_j_per_slot, "compute.e_max_j_per_slot");
  for (double a : c.comp_penalty_weights)
    if (!(a >= 0)) fail("compute.comp_penalty_weights", "must be nonnegative");

  for (double w : c.weights)
    if (!(w >= 0 && w <= 1)) fail("objective.weights", "entries must be in [0,1]");
  const double wsum = c.weights[0] + c.weights[1] + c.weights[2];
  if (std::abs(wsum - 1.0) > 1e-9) fail("objective.weights", "weights must sum to 1");
  c.weights[2] = 1.0 - (c.weights[0] + c.weights[1]);

  if (c.episodes < 1) fail("train.episodes", "must be >= 1");
  if (c.epochs_per_episode < 1) fail("train.epochs_per_episode", "must be >= 1");
  positive(c.actor_lr, "train.actor_lr");
  positive(c.critic_lr, "train.critic_lr");
  if (!(c.gamma >= 0 && c.gamma <= 1)) fail("train.gamma", "must be in [0,1]");
  if (!(c.gae_lambda >= 0 && c.gae_lambda <= 1)) fail("train.gae_lambda", "must be in [0,1]");
  positive(c.clip_eps, "train.clip_eps");
  nonneg(c.value_coef, "train.value_coef");
  nonneg(c.entropy_coef, "train.entropy_coef");
  positive(c.grad_clip_norm, "train.grad_clip_norm");
  if (c.update_epochs < 1) fail("train.update_epochs", "must be >= 1");
  if (c.actor_hidden.empty()) fail("train.actor_hidden", "must be nonempty");
  for (int h : c.actor_hidden)
    if (h < 1) fail("train.actor_hidden", "layer sizes must be >= 1");
  if (c.critic_hidden.empty()) fail("train.critic_hidden", "must be nonempty");
  for (int h : c.critic_hidden)
    if (h < 1) fail("train.critic_hidden", "layer sizes must be >= 1");
  if (c.share_actor_params < -1 || c.share_actor_params > 1) fail("train.share_actor_params", "must be -1, 0 or 1");
  if (c.greedy_candidates < 1) fail("train.greedy_candidates", "must be >= 1");
}

SimConfig parse_config_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("JSON parse failure: ") + e.what());
  }
  return from_json(doc);
}

SimConfig parse_config_toml(const std::string& text) {
  toml::table tbl;
  try {
    tbl = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream ss;
    ss << "TOML parse failure: " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(ss.str());
  }
  return from_json(toml_to_json(tbl));
}

SimConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  if (path.extension() == ".json") return parse_config_json(text);
  return parse_config_toml(text);
}

std::string config_to_json(const SimConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string config_to_toml(const SimConfig& cfg) {
  std::ostringstream out;
  out << "seed = " << cfg.seed << "\n";
  std::string current;
  for (const auto& f : registry()) {
    if (!*f.section) continue;
    if (current != f.section) {
      current = f.section;
      out << "\n[" << current << "]\n";
    }
    out << f.key << " = " << toml_value(value_of(cfg, f)) << "\n";
  }
  return out.str();
}

void save_config(const SimConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write config file: " + path.string());
  out << (path.extension() == ".json" ? config_to_json(cfg) : config_to_toml(cfg));
}

std::string config_hash(const SimConfig& cfg) {
  const std::string canon = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace iscc
