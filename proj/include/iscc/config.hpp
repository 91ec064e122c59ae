#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace iscc {

// Thrown for bad config files and invariant violations; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SimConfig {
  // radio
  double carrier_freq_hz = 5.9e9;
  double bandwidth_hz = 10e6;
  int numerology_mu = 0;
  double scs_hz = 15e3;             // derived from numerology_mu
  double slot_s = 1e-3;             // derived from numerology_mu
  double sym_s = 1.0 / 15e3;        // derived from scs_hz
  double guard_band_prb = 3.5;
  int n_prb_pool = 52;              // derived: floor(B/(12 scs) - guard)
  int n_sl_prb_per_vehicle = 12;
  int n_o_max_prb = 4;
  double tx_power_w = 0.1995;
  double rsrp_threshold_dbm = -128.0;
  double snr_decode_threshold_db = 8.0;
  double antenna_gain_db = 3.0;
  double noise_figure_db = 9.0;
  double noise_temp_k = 290.0;

  // channel
  double pathloss_exponent = 2.75;
  double shadowing_sigma_db = 3.0;
  bool fading_enabled = true;
  double rsu_position_m = 0.0;
  double rsu_offset_m = 20.0;

  // sensing
  double rho_si = 1e-7;
  double rcs_dbsm = 10.0;
  double gamma_det_s_db = -45.0;
  double r_sens_m = 150.0;
  std::array<double, 2> crlb_weights{0.5, 0.5};
  int min_sensing_prb = 2;
  int min_sensing_symbols = 2;

  // traffic / sidelink
  int packet_bytes = 190;
  double msg_rate_hz = 10.0;
  double awareness_range_m = 200.0;
  double d_c_min_bits = 1520.0;
  double epsilon0_bps = 1.0;
  double delay_cap_s = 1.0;
  double ema_coef = 0.1;
  double prr_target = 0.8;
  std::array<double, 2> comm_utility_weights{0.5, 0.5};

  // mobility
  double density_veh_per_km = 80.0;
  int n_vehicles = 0;               // 0: derived from density and road length
  double road_length_m = 1000.0;    // derived when n_vehicles > 0
  double max_speed_kmh = 70.0;
  int n_lanes = 4;
  double lane_width_m = 3.5;

  // mac
  double t_sen_ms = 1000.0;
  double t_sel_ms = 100.0;
  double rri_ms = 100.0;
  int cbr_window_slots = 100;
  double candidate_retain_fraction = 0.2;
  double threshold_step_db = 3.0;
  std::vector<double> keep_prob_set{0.0, 0.2, 0.4, 0.6, 0.8};
  std::vector<int> rc_set{5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15};

  // compute
  double f_local_hz = 2e9;
  double c_mec_cycles_per_slot = 2e7;
  double kappa_s_cycles_per_bit = 500.0;
  double kappa_c_cycles_per_bit = 100.0;
  int b_quant_bits = 8;
  double kappa_dvfs = 1e-28;
  double xi_c_bits_per_cycle = 0.01;
  double xi_s_bits_per_cycle = 0.002;
  double t_bh_s = 0.010;
  double t_cl_s = 0.002;
  double delta_c_s = 0.020;
  double delta_s_s = 0.050;
  double e_max_j_per_slot = 0.05;
  std::array<double, 3> comp_penalty_weights{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

  // objective: (sensing, comm, compute)
  std::array<double, 3> weights{0.30, 0.35, 0.35};

  // training
  int episodes = 500;
  int epochs_per_episode = 40;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double value_coef = 0.5;
  double entropy_coef = 0.01;
  double grad_clip_norm = 0.5;
  int update_epochs = 4;
  std::vector<int> actor_hidden{256, 128, 64};
  std::vector<int> critic_hidden{512, 256, 128};
  int share_actor_params = -1;      // -1 auto (share when N > 32), 0 off, 1 on
  int greedy_candidates = 64;

  std::uint64_t seed = 1;

  // helpers over derived quantities
  int vehicle_count() const;
  int slots_per_epoch() const;
  int n_subchannels() const;
  int pool_size() const;
  double wavelength_m() const;
  double noise_psd_w_per_hz() const;
  double tx_power_dbm() const;
  double sinr_threshold_linear() const;
  double gamma_det_linear() const;
  int sensing_window_slots() const;

  bool operator==(const SimConfig&) const = default;
};

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kBoltzmann = 1.380649e-23;

// Fills derived fields and checks every invariant. Throws ConfigError naming the field.
void finalize_config(SimConfig& cfg);

// TOML (by extension .toml) or JSON (.json). Unknown keys are rejected.
// ISCC_SEED in the environment overrides the seed.
SimConfig load_config(const std::filesystem::path& path);
SimConfig parse_config_toml(const std::string& text);
SimConfig parse_config_json(const std::string& text);

std::string config_to_toml(const SimConfig& cfg);
std::string config_to_json(const SimConfig& cfg);
void save_config(const SimConfig& cfg, const std::filesystem::path& path);

// FNV-1a over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const SimConfig& cfg);

double db_to_linear(double db);
double linear_to_db(double lin);

}  // namespace iscc
