#pragma once

#include <stdexcept>

#include "iscc/config.hpp"

namespace iscc {

// Sidelink pool geometry: one resource = (slot offset within the RRI, subchannel),
// index = offset * n_subchannels + subchannel.
struct ResourcePool {
  int rri_slots = 100;
  int n_subchannels = 4;
  int prb_per_subchannel = 12;
  int n_prb = 52;

  static ResourcePool from_config(const SimConfig& cfg) {
    return ResourcePool{cfg.slots_per_epoch(), cfg.n_subchannels(), cfg.n_sl_prb_per_vehicle, cfg.n_prb_pool};
  }
  int size() const { return rri_slots * n_subchannels; }
  int offset(int r) const { return r / n_subchannels; }
  int subchannel(int r) const { return r % n_subchannels; }
  int index(int offset, int subchannel) const {
    if (offset < 0 || offset >= rri_slots || subchannel < 0 || subchannel >= n_subchannels)
      throw std::out_of_range("resource coordinates outside the pool");
    return offset * n_subchannels + subchannel;
  }
  bool contains(int r) const { return r >= 0 && r < size(); }
};

}  // namespace iscc
