#include "iscc/channel.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace iscc::channel {

namespace {
constexpr std::uint64_t kV2iEntityBase = 1ULL << 40;

std::size_t pair_index(int i, int j, int n) { return static_cast<std::size_t>(i) * n + j; }
}  // namespace

World place_vehicles(const SimConfig& cfg, const RngStreams& rng) {
  World w;
  w.road_length_m = cfg.road_length_m;
  w.lane_width_m = cfg.lane_width_m;
  const int n = cfg.vehicle_count();
  const double spacing = w.road_length_m / n;
  const double vmax = cfg.max_speed_kmh / 3.6;
  for (int i = 0; i < n; ++i) {
    auto g = rng.stream(Stream::mobility, static_cast<std::uint64_t>(i));
    VehicleState v;
    v.id = i;
    double x = (i + 0.5) * spacing + (g.uniform() - 0.5) * 0.5 * spacing;
    x = std::fmod(x, w.road_length_m);
    if (x < 0) x += w.road_length_m;
    v.position_m = x;
    v.lane = i % cfg.n_lanes;
    v.heading = (v.lane < (cfg.n_lanes + 1) / 2) ? 1 : -1;
    v.speed_mps = vmax * (0.5 + 0.5 * g.uniform());
    w.vehicles.push_back(v);
  }
  return w;
}

const std::vector<VehicleState>& advance_mobility(World& world, double dt_s) {
  if (!(dt_s > 0)) throw std::invalid_argument("advance_mobility: dt must be positive");
  const double L = world.road_length_m;
  for (auto& v : world.vehicles) {
    double x = std::fmod(v.position_m + v.heading * v.speed_mps * dt_s, L);
    if (x < 0) x += L;
    if (x >= L) x -= L;
    v.position_m = x;
  }
  return world.vehicles;
}

double ring_offset(double a, double b, double length) {
  double d = std::fmod(b - a, length);
  if (d > length / 2) d -= length;
  if (d <= -length / 2) d += length;
  return d;
}

double separation_m(const World& w, int i, int j) {
  const auto& a = w.vehicles[i];
  const auto& b = w.vehicles[j];
  const double dx = ring_offset(a.position_m, b.position_m, w.road_length_m);
  const double dy = (b.lane - a.lane) * w.lane_width_m;
  return std::hypot(dx, dy);
}

double radial_velocity_mps(const World& w, int i, int j) {
  const auto& a = w.vehicles[i];
  const auto& b = w.vehicles[j];
  const double dx = ring_offset(a.position_m, b.position_m, w.road_length_m);
  const double dy = (b.lane - a.lane) * w.lane_width_m;
  const double d = std::hypot(dx, dy);
  if (d <= 0) return 0.0;
  const double du = b.heading * b.speed_mps - a.heading * a.speed_mps;
  return dx * du / d;
}

double pathloss_db(double distance_m, const SimConfig& cfg) {
  const double d = std::max(distance_m, 1.0);
  const double pl0 = 20.0 * std::log10(4.0 * std::numbers::pi * cfg.carrier_freq_hz / kSpeedOfLight);
  return pl0 + 10.0 * cfg.pathloss_exponent * std::log10(d);
}

ChannelModel::ChannelModel(const SimConfig& cfg, const RngStreams& rng) : cfg_(&cfg), rng_(rng) {}

void ChannelModel::draw_epoch(int n, int epoch) {
  n_ = n;
  epoch_ = epoch;
  shadow_db_.assign(static_cast<std::size_t>(n) * n, 0.0);
  fade_.assign(static_cast<std::size_t>(n) * n, 1.0);
  if (!cfg_->fading_enabled) return;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      auto g = rng_.stream(Stream::fading, pair_index(i, j, n));
      g.seek(static_cast<std::uint64_t>(epoch) * 4);
      const double x = cfg_->shadowing_sigma_db * g.normal();
      const double f = g.exponential();
      shadow_db_[pair_index(i, j, n)] = shadow_db_[pair_index(j, i, n)] = x;
      fade_[pair_index(i, j, n)] = fade_[pair_index(j, i, n)] = f;
    }
  }
}

ChannelSnapshot ChannelModel::sample(const World& world, std::int64_t slot, int epoch) {
  const int n = static_cast<int>(world.vehicles.size());
  if (epoch != epoch_ || n != n_) draw_epoch(n, epoch);
  ChannelSnapshot s;
  s.n = n;
  s.slot = slot;
  s.v2v.assign(static_cast<std::size_t>(n) * n, 0.0);
  s.distance_m.assign(static_cast<std::size_t>(n) * n, 0.0);
  s.shadowing_db = shadow_db_;
  s.v2i.assign(n, 0.0);
  const double ant = 2.0 * cfg_->antenna_gain_db;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double d = separation_m(world, i, j);
      const std::size_t ij = pair_index(i, j, n);
      const double g = std::pow(10.0, (ant - pathloss_db(d, *cfg_) - shadow_db_[ij]) / 10.0) * fade_[ij];
      s.v2v[ij] = s.v2v[pair_index(j, i, n)] = g;
      s.distance_m[ij] = s.distance_m[pair_index(j, i, n)] = d;
    }
  }
  for (int i = 0; i < n; ++i) {
    const double dx = ring_offset(world.vehicles[i].position_m, cfg_->rsu_position_m, world.road_length_m);
    const double d = std::hypot(dx, cfg_->rsu_offset_m);
    double f = 1.0;
    if (cfg_->fading_enabled) {
      auto g = rng_.stream(Stream::fading, kV2iEntityBase + static_cast<std::uint64_t>(i));
      g.seek(static_cast<std::uint64_t>(slot));
      f = g.exponential();
    }
    s.v2i[i] = std::pow(10.0, (ant - pathloss_db(d, *cfg_)) / 10.0) * f;
  }
  return s;
}

void write_channel_trace(std::ostream& out, const ChannelSnapshot& snap) {
  char buf[128];
  for (int i = 0; i < snap.n; ++i) {
    for (int j = 0; j < snap.n; ++j) {
      if (i == j) continue;
      std::snprintf(buf, sizeof buf, "%lld,%d,%d,%.17g\n", static_cast<long long>(snap.slot), i, j,
                    10.0 * std::log10(snap.v2v_gain(i, j)));
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%lld,%d,-1,%.17g\n", static_cast<long long>(snap.slot), i,
                  10.0 * std::log10(snap.v2i[i]));
    out << buf;
  }
}

}  // namespace iscc::channel
