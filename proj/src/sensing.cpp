#include "iscc/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>

namespace iscc::sensing {

namespace {
constexpr double kPi = std::numbers::pi;
}

void validate(const SensingAlloc& a) {
  if (a.m_s_sym < 1 || a.m_s_sym > 14) throw std::invalid_argument("sensing symbols must be in 1..14");
  if (a.n_s_prb < 0) throw std::invalid_argument("sensing PRBs must be nonnegative");
  if (!(a.p_tx_w >= 0)) throw std::invalid_argument("sensing power must be nonnegative");
}

double reflection_power(double range_m, const SimConfig& cfg) {
  if (!(range_m > 0)) throw std::invalid_argument("reflection_power: range must be positive");
  const double g = db_to_linear(cfg.antenna_gain_db);
  const double lambda = cfg.wavelength_m();
  const double rcs = db_to_linear(cfg.rcs_dbsm);
  const double r2 = range_m * range_m;
  return g * g * lambda * lambda * rcs / (std::pow(4.0 * kPi, 3) * r2 * r2);
}

double thermal_noise_w(double bandwidth_hz, const SimConfig& cfg) { return cfg.noise_psd_w_per_hz() * bandwidth_hz; }

double sensing_snr(double reflect_power, const SensingAlloc& alloc, const SimConfig& cfg) {
  const double noise = thermal_noise_w(alloc.bandwidth_hz(cfg.scs_hz), cfg);
  const double rsi = cfg.rho_si * alloc.p_tx_w;
  const double denom = noise + rsi;
  if (denom <= 0) return reflect_power > 0 && alloc.p_tx_w > 0 ? kInfiniteVariance : 0.0;
  return alloc.p_tx_w * reflect_power / denom;
}

double sensing_snr(const TargetEcho& echo, const SensingAlloc& alloc, const SimConfig& cfg) {
  return sensing_snr(echo.reflect_power, alloc, cfg);
}

TargetEcho make_echo(int id, double range_m, double radial_velocity_mps, const SensingAlloc& alloc,
                     const SimConfig& cfg) {
  TargetEcho e;
  e.target_id = id;
  e.range_m = range_m;
  e.radial_velocity_mps = radial_velocity_mps;
  e.tau_s = 2.0 * range_m / kSpeedOfLight;
  e.doppler_hz = 2.0 * radial_velocity_mps / cfg.wavelength_m();
  e.reflect_power = reflection_power(range_m, cfg);
  e.snr_linear = sensing_snr(e.reflect_power, alloc, cfg);
  return e;
}

double crlb_range_var(int n_sc, int m_sym, double snr, double scs_hz) {
  if (n_sc < 2 || m_sym < 1) return kInfiniteVariance;
  if (!(snr > 0)) return kInfiniteVariance;
  const double n = n_sc;
  const double c2 = kSpeedOfLight * kSpeedOfLight;
  return 3.0 * c2 / (8.0 * kPi * kPi * m_sym * n * snr * (n * n - 1.0) * scs_hz * scs_hz);
}

double crlb_velocity_var(int n_sc, int m_sym, double snr, double carrier_hz, double sym_s) {
  if (m_sym < 2 || n_sc < 1) return kInfiniteVariance;
  if (!(snr > 0)) return kInfiniteVariance;
  const double m = m_sym;
  const double c2 = kSpeedOfLight * kSpeedOfLight;
  return 3.0 * c2 / (8.0 * kPi * kPi * carrier_hz * carrier_hz * m * n_sc * snr * (m * m - 1.0) * sym_s * sym_s);
}

Crlb crlb(const SensingAlloc& alloc, double snr_linear, const SimConfig& cfg) {
  if (alloc.n_sc() < 2 || alloc.m_s_sym < 2) throw CrlbUndefined("CRLB undefined");
  return {crlb_range_var(alloc.n_sc(), alloc.m_s_sym, snr_linear, cfg.scs_hz),
          crlb_velocity_var(alloc.n_sc(), alloc.m_s_sym, snr_linear, cfg.carrier_freq_hz, cfg.sym_s)};
}

std::int64_t sensing_data_bits(const SensingAlloc& alloc, const SimConfig& cfg) {
  return 2LL * alloc.n_sc() * alloc.m_s_sym * cfg.b_quant_bits;
}

SensingReport build_report(std::span<const TargetGeometry> candidates, const SensingAlloc& alloc,
                           const SimConfig& cfg) {
  SensingReport rep;
  // with n_s_prb = 0 detection still applies (RSI-limited); the bounds are then infinite
  rep.data_bits = sensing_data_bits(alloc, cfg);
  rep.workload_cycles = cfg.kappa_s_cycles_per_bit * static_cast<double>(rep.data_bits);

  const double gamma_det = cfg.gamma_det_linear();
  double inv_sum = 0.0;
  for (const auto& t : candidates) {
    const double r = std::max(t.range_m, 1.0);
    if (r > cfg.r_sens_m) continue;
    const double snr = sensing_snr(reflection_power(r, cfg), alloc, cfg);
    if (snr < gamma_det) continue;
    DetectedTarget d;
    d.id = t.id;
    d.range_m = r;
    d.radial_velocity_mps = t.radial_velocity_mps;
    d.snr_linear = snr;
    d.crlb_range_m2 = crlb_range_var(alloc.n_sc(), alloc.m_s_sym, snr, cfg.scs_hz);
    d.crlb_vel_m2s2 = crlb_velocity_var(alloc.n_sc(), alloc.m_s_sym, snr, cfg.carrier_freq_hz, cfg.sym_s);
    rep.detected.push_back(d);
    inv_sum += 1.0 / r;
  }
  if (rep.detected.empty()) return rep;
  double pen = 0.0, var_r = 0.0, var_v = 0.0;
  for (auto& d : rep.detected) {
    d.weight = (1.0 / d.range_m) / inv_sum;
    const double tr = cfg.crlb_weights[0] > 0 ? cfg.crlb_weights[0] * d.crlb_range_m2 : 0.0;
    const double tv = cfg.crlb_weights[1] > 0 ? cfg.crlb_weights[1] * d.crlb_vel_m2s2 : 0.0;
    pen += d.weight * (tr + tv);
    var_r += d.weight * d.crlb_range_m2;
    var_v += d.weight * d.crlb_vel_m2s2;
  }
  rep.penalty = pen;
  rep.normalized_penalty = normalize_penalty(pen, cfg);
  rep.root_crlb_range_m = std::sqrt(var_r);
  rep.root_crlb_vel_mps = std::sqrt(var_v);
  return rep;
}

double penalty_reference(const SimConfig& cfg) {
  SensingAlloc a{cfg.min_sensing_prb > 0 ? cfg.min_sensing_prb : 2, std::max(cfg.min_sensing_symbols, 2),
                 cfg.tx_power_w};
  const double snr = cfg.gamma_det_linear();
  const double ref = cfg.crlb_weights[0] * crlb_range_var(a.n_sc(), a.m_s_sym, snr, cfg.scs_hz) +
                    cfg.crlb_weights[1] * crlb_velocity_var(a.n_sc(), a.m_s_sym, snr, cfg.carrier_freq_hz, cfg.sym_s);
  if (!(ref > 0)) throw std::invalid_argument("sensing penalty reference must be positive (check crlb_weights)");
  return ref;
}

double normalize_penalty(double penalty, const SimConfig& cfg) {
  const double ref = penalty_reference(cfg);
  if (!(penalty > 0)) return 0.0;
  if (!std::isfinite(penalty)) return 1.0;
  return std::clamp(penalty / ref, 0.0, 1.0);
}

double range_bin_width_m(int n_sc, double scs_hz) { return kSpeedOfLight / (2.0 * n_sc * scs_hz); }

RdMap rd_map_oracle(const SensingAlloc& alloc, const TargetEcho& echo, double noise_var, CounterRng& rng,
                    const SimConfig& cfg, int range_oversample, bool random_phase) {
  using cd = std::complex<double>;
  const int N = alloc.n_sc();
  const int M = alloc.m_s_sym;
  if (N < 2 || M < 1) throw std::invalid_argument("rd_map_oracle: need at least 2 subcarriers");
  if (range_oversample < 1) throw std::invalid_argument("rd_map_oracle: oversample must be >= 1");
  const double amp = std::sqrt(echo.reflect_power);
  const double phase = random_phase ? 2.0 * kPi * rng.uniform() : 0.0;
  const cd zeta = std::polar(amp, phase);
  const double sigma = std::sqrt(noise_var / 2.0);

  std::vector<cd> y(static_cast<std::size_t>(N) * M);
  for (int n = 0; n < N; ++n) {
    const double rphase = -2.0 * kPi * n * cfg.scs_hz * echo.tau_s;
    for (int m = 0; m < M; ++m) {
      const double dphase = 2.0 * kPi * echo.doppler_hz * m * cfg.sym_s;
      cd s = zeta * std::polar(1.0, rphase + dphase);
      if (sigma > 0) s += cd(sigma * rng.normal(), sigma * rng.normal());
      y[static_cast<std::size_t>(n) * M + m] = s;
    }
  }

  // Doppler transform per subcarrier, then a zero-padded range transform per Doppler bin.
  std::vector<cd> dop(static_cast<std::size_t>(N) * M);
  for (int n = 0; n < N; ++n)
    for (int q = 0; q < M; ++q) {
      cd acc = 0;
      for (int m = 0; m < M; ++m) acc += y[static_cast<std::size_t>(n) * M + m] * std::polar(1.0, -2.0 * kPi * m * q / M);
      dop[static_cast<std::size_t>(n) * M + q] = acc;
    }
  const int P = N * range_oversample;
  std::vector<cd> tw(P);
  for (int k = 0; k < P; ++k) tw[k] = std::polar(1.0, 2.0 * kPi * k / P);

  RdMap map;
  map.range_bins = P;
  map.doppler_bins = M;
  map.range_oversample = range_oversample;
  map.power.assign(static_cast<std::size_t>(P) * M, 0.0);
  double best = -1.0;
  for (int p = 0; p < P; ++p)
    for (int q = 0; q < M; ++q) {
      cd acc = 0;
      for (int n = 0; n < N; ++n) acc += dop[static_cast<std::size_t>(n) * M + q] * tw[(static_cast<long>(n) * p) % P];
      const double pw = std::norm(acc);
      map.power[static_cast<std::size_t>(p) * M + q] = pw;
      if (pw > best) {
        best = pw;
        map.peak_range_index = p;
        map.peak_doppler_index = q;
      }
    }

  // three-point log-parabolic interpolation along range at the peak Doppler column
  const int p0 = map.peak_range_index, q0 = map.peak_doppler_index;
  const double a = map.at((p0 - 1 + P) % P, q0), b = map.at(p0, q0), c = map.at((p0 + 1) % P, q0);
  double delta = 0.0;
  if (a > 0 && b > 0 && c > 0) {
    const double la = std::log(a), lb = std::log(b), lc = std::log(c);
    const double den = la - 2.0 * lb + lc;
    if (den < 0) delta = std::clamp(0.5 * (la - lc) / den, -0.5, 0.5);
  }
  double frac = (p0 + delta) / range_oversample;
  if (frac > N / 2.0) frac -= N;  // aliased beyond the unambiguous range
  map.peak_range_bin = frac;
  map.peak_doppler_bin = q0 > M / 2 ? q0 - M : q0;
  map.range_estimate_m = frac * range_bin_width_m(N, cfg.scs_hz);
  return map;
}

void write_crlb_sweep(std::ostream& out, std::span<const double> distances, std::span<const int> n_s_values,
                      std::span<const int> m_s_values, const SimConfig& cfg) {
  char buf[256];
  for (double d : distances)
    for (int ns : n_s_values)
      for (int ms : m_s_values) {
        SensingAlloc a{ns, ms, cfg.tx_power_w};
        const double snr = sensing_snr(reflection_power(d, cfg), a, cfg);
        const double vr = crlb_range_var(a.n_sc(), ms, snr, cfg.scs_hz);
        const double vv = crlb_velocity_var(a.n_sc(), ms, snr, cfg.carrier_freq_hz, cfg.sym_s);
        std::snprintf(buf, sizeof buf, "%.17g,%d,%d,%.17g,%.17g\n", d, ns, ms, std::sqrt(vr), std::sqrt(vv));
        out << buf;
      }
}

}  // namespace iscc::sensing
