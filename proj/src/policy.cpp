#include "iscc/policy.hpp"

namespace iscc {

std::vector<mac::ActionVector> RandomPolicy::act(const env::IsccEnv& env, const std::vector<env::Observation>&,
                                                 CounterRng& rng) {
  std::vector<mac::ActionVector> out;
  for (int i = 0; i < env.n_agents(); ++i) out.push_back(mac::sample_uniform(env.masks()[i], rng));
  return out;
}

}  // namespace iscc
