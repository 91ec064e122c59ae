#pragma once

#include <string>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/env.hpp"
#include "iscc/mac.hpp"
#include "iscc/policy.hpp"

namespace iscc::greedy {

enum class Objective { sensing, compute };  // SCG-SPS, CCG-SPS

struct Prediction {
  double sensing = 0.0;  // summed normalized sensing penalty over the epoch
  double compute = 0.0;  // summed compute penalty over the epoch
};

// One-epoch surrogate from what the vehicle knows: its targets held at their current
// geometry, expected traffic, last epoch's offloaders and the broadcast backlogs.
Prediction predict_epoch(const env::LocalView& view, const env::DecodedAction& a, const SimConfig& cfg);

// Mask restricted to allocations that keep sensing meaningful (N_s, M_s at their minimum valid
// values or above) and leave N_c at least min_n_c.
mac::ActionMask valid_mask(const mac::ActionMask& m, const SimConfig& cfg, int min_n_c);

// Smallest N_c the vehicle's link state supports for its traffic; fallback when unknown.
int comm_floor(const env::LocalView& view, const SimConfig& cfg);

// Objective corner: sensing-maximal (N_s all remaining PRBs, M_s = 14, offload to the MEC) or
// compute-minimal (N_s, M_s at their minimum, offload flags by lowest predicted penalty).
mac::ActionVector corner_action(Objective obj, const mac::ActionMask& valid, const env::LocalView& view,
                                const mac::ActionDomain& dom, const SimConfig& cfg, int min_n_c, CounterRng& rng);

struct Scored {
  mac::ActionVector action;
  double score = 0.0;
};
// Lowest score wins. Ties: larger N_s for the sensing objective, smaller M_s for the compute
// objective, then the earlier candidate.
std::size_t pick_best(Objective obj, const std::vector<Scored>& cands);

mac::ActionVector choose(Objective obj, const env::LocalView& view, const mac::ActionMask& mask,
                         const mac::ActionDomain& dom, const SimConfig& cfg, int n_candidates, CounterRng& rng);

class GreedyPolicy final : public JointPolicy {
 public:
  explicit GreedyPolicy(Objective obj, int n_candidates = 64) : obj_(obj), k_(n_candidates) {}
  std::string name() const override { return obj_ == Objective::sensing ? "scg" : "ccg"; }
  std::vector<mac::ActionVector> act(const env::IsccEnv& env, const std::vector<env::Observation>& obs,
                                     CounterRng& rng) override;

 private:
  Objective obj_;
  int k_;
};

}  // namespace iscc::greedy
