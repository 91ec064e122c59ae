#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/rng.hpp"

namespace iscc::channel {

struct VehicleState {
  int id = 0;
  double position_m = 0.0;  // along the ring, [0, road_length)
  int lane = 0;
  double speed_mps = 0.0;
  int heading = 1;          // +1 or -1
};

struct World {
  double road_length_m = 1000.0;
  double lane_width_m = 3.5;
  std::vector<VehicleState> vehicles;
};

// Evenly spaced starts with jitter; lanes alternate, lower half of lanes heads +1.
World place_vehicles(const SimConfig& cfg, const RngStreams& rng);

// Throws std::invalid_argument for dt <= 0.
const std::vector<VehicleState>& advance_mobility(World& world, double dt_s);

// Shortest signed along-road offset from a to b on a ring of length L.
double ring_offset(double a, double b, double length);
double separation_m(const World& w, int i, int j);
// Rate of change of the i-j distance (positive when opening).
double radial_velocity_mps(const World& w, int i, int j);

double pathloss_db(double distance_m, const SimConfig& cfg);

struct ChannelSnapshot {
  int n = 0;
  std::int64_t slot = -1;
  std::vector<double> v2v;         // n*n linear power gains, symmetric, diagonal 0
  std::vector<double> v2i;         // n
  std::vector<double> distance_m;  // n*n
  std::vector<double> shadowing_db;  // n*n, per-epoch draw
  double v2v_gain(int i, int j) const { return v2v[static_cast<std::size_t>(i) * n + j]; }
  double distance(int i, int j) const { return distance_m[static_cast<std::size_t>(i) * n + j]; }
};

class ChannelModel {
 public:
  ChannelModel(const SimConfig& cfg, const RngStreams& rng);
  // Deterministic in (world geometry, slot, epoch): asking twice gives the same snapshot.
  ChannelSnapshot sample(const World& world, std::int64_t slot, int epoch);

 private:
  void draw_epoch(int n, int epoch);

  const SimConfig* cfg_;
  RngStreams rng_;
  int epoch_ = -1;
  int n_ = 0;
  std::vector<double> shadow_db_;  // per unordered pair, i<j
  std::vector<double> fade_;
};

// Debug trace rows: slot,i,j,gain_db ; the RSU link is written with j = -1.
void write_channel_trace(std::ostream& out, const ChannelSnapshot& snap);

}  // namespace iscc::channel
