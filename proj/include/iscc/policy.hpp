#pragma once

#include <string>
#include <vector>

#include "iscc/env.hpp"
#include "iscc/mac.hpp"
#include "iscc/rng.hpp"

namespace iscc {

// A joint controller: one action per vehicle for the coming epoch, always inside the masks.
class JointPolicy {
 public:
  virtual ~JointPolicy() = default;
  virtual std::string name() const = 0;
  virtual std::vector<mac::ActionVector> act(const env::IsccEnv& env, const std::vector<env::Observation>& obs,
                                             CounterRng& rng) = 0;
};

class RandomPolicy final : public JointPolicy {
 public:
  std::string name() const override { return "random"; }
  std::vector<mac::ActionVector> act(const env::IsccEnv& env, const std::vector<env::Observation>& obs,
                                     CounterRng& rng) override;
};

}  // namespace iscc
