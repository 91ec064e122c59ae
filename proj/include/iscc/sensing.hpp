#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/rng.hpp"

namespace iscc::sensing {

struct SensingAlloc {
  int n_s_prb = 0;
  int m_s_sym = 1;
  double p_tx_w = 0.0;

  int n_sc() const { return 12 * n_s_prb; }
  double bandwidth_hz(double scs_hz) const { return 12.0 * n_s_prb * scs_hz; }
};

// Throws std::invalid_argument when m_s_sym is outside 1..14 or n_s_prb < 0.
void validate(const SensingAlloc& a);

struct TargetEcho {
  int target_id = -1;
  double range_m = 0.0;
  double radial_velocity_mps = 0.0;
  double tau_s = 0.0;
  double doppler_hz = 0.0;
  double reflect_power = 0.0;
  double snr_linear = 0.0;
};

class CrlbUndefined : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

struct Crlb {
  double range_var_m2 = 0.0;
  double vel_var_m2s2 = 0.0;
};

constexpr double kInfiniteVariance = std::numeric_limits<double>::infinity();

double reflection_power(double range_m, const SimConfig& cfg);
double thermal_noise_w(double bandwidth_hz, const SimConfig& cfg);
double sensing_snr(double reflect_power, const SensingAlloc& alloc, const SimConfig& cfg);
double sensing_snr(const TargetEcho& echo, const SensingAlloc& alloc, const SimConfig& cfg);
TargetEcho make_echo(int id, double range_m, double radial_velocity_mps, const SensingAlloc& alloc,
                     const SimConfig& cfg);

// Raw bounds. snr = 0 gives +inf. The range bound needs n_sc >= 2, the velocity bound m >= 2.
double crlb_range_var(int n_sc, int m_sym, double snr, double scs_hz);
double crlb_velocity_var(int n_sc, int m_sym, double snr, double carrier_hz, double sym_s);
// Throws CrlbUndefined when n_sc < 2 or m_s_sym < 2.
Crlb crlb(const SensingAlloc& alloc, double snr_linear, const SimConfig& cfg);

struct TargetGeometry {
  int id = -1;
  double range_m = 0.0;
  double radial_velocity_mps = 0.0;
};

struct DetectedTarget {
  int id = -1;
  double range_m = 0.0;
  double radial_velocity_mps = 0.0;
  double snr_linear = 0.0;
  double crlb_range_m2 = 0.0;
  double crlb_vel_m2s2 = 0.0;
  double weight = 0.0;
};

struct SensingReport {
  std::vector<DetectedTarget> detected;
  double penalty = 0.0;             // may be +inf when the allocation cannot resolve detected targets
  double normalized_penalty = 0.0;  // clip(penalty / reference, 0, 1)
  std::int64_t data_bits = 0;
  double workload_cycles = 0.0;
  // weighted root-CRLBs over the detected set; 0 when empty, inf when unresolvable
  double root_crlb_range_m = 0.0;
  double root_crlb_vel_mps = 0.0;
};

std::int64_t sensing_data_bits(const SensingAlloc& alloc, const SimConfig& cfg);

// Candidates may include targets outside the sensing range; they are filtered here.
SensingReport build_report(std::span<const TargetGeometry> candidates, const SensingAlloc& alloc,
                           const SimConfig& cfg);

// Penalty of a single target at r_sens with the minimum allocation, at the detection threshold.
double penalty_reference(const SimConfig& cfg);
double normalize_penalty(double penalty, const SimConfig& cfg);

// Signal-level range-Doppler check (test-only, not on the simulation path).
struct RdMap {
  int range_bins = 0;    // n_sc * range_oversample
  int doppler_bins = 0;  // m_s_sym
  int range_oversample = 1;
  std::vector<double> power;  // [p * doppler_bins + q]
  int peak_range_index = 0;   // in oversampled bins
  int peak_doppler_index = 0;
  double peak_range_bin = 0.0;  // interpolated, in unpadded range bins
  int peak_doppler_bin = 0;     // signed
  double range_estimate_m = 0.0;
  double at(int p, int q) const { return power[static_cast<std::size_t>(p) * doppler_bins + q]; }
};

double range_bin_width_m(int n_sc, double scs_hz);

// Synthesizes normalized samples for one target with amplitude sqrt(echo.reflect_power)
// and a random phase, adds CN(0, noise_var) noise and returns the periodogram map.
RdMap rd_map_oracle(const SensingAlloc& alloc, const TargetEcho& echo, double noise_var, CounterRng& rng,
                    const SimConfig& cfg, int range_oversample = 1, bool random_phase = true);

// CSV rows: distance_m,n_s_prb,m_s_sym,root_crlb_range_m,root_crlb_vel_mps
void write_crlb_sweep(std::ostream& out, std::span<const double> distances, std::span<const int> n_s_values,
                      std::span<const int> m_s_values, const SimConfig& cfg);

}  // namespace iscc::sensing
