#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/env.hpp"
#include "iscc/mac.hpp"
#include "iscc/nn.hpp"
#include "iscc/policy.hpp"
#include "iscc/rng.hpp"

namespace iscc::marl {

struct HeadLayout {
  std::array<int, mac::kNumHeads> sizes{};
  std::array<int, mac::kNumHeads> offsets{};
  int total = 0;
  static HeadLayout from_domain(const mac::ActionDomain& dom);
};

// Admissible values of head h given the heads chosen before it (n_c depends on n_s).
std::vector<std::uint8_t> head_allowed(const mac::ActionMask& m, int h, const mac::ActionVector& partial);

// Heads that enter the loss. Frozen reservation heads are excluded.
std::array<bool, mac::kNumHeads> trained_heads(const mac::ActionMask& m);

struct PolicyStats {
  double logp = 0.0;     // sum over trained heads
  double entropy = 0.0;  // sum over trained heads
  std::array<double, mac::kNumHeads> head_logp{};
};

// Masked values get probability exactly 0. Heads are drawn in index order.
mac::ActionVector sample_heads(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m,
                               CounterRng& rng, PolicyStats* stats = nullptr);
mac::ActionVector argmax_heads(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m);
PolicyStats evaluate_heads(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m,
                           const mac::ActionVector& a);
// Probabilities of head h (zeros outside the admissible set).
std::vector<double> head_probs(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m, int h,
                               const mac::ActionVector& partial);
// Adds d(c_logp * logp + c_ent * entropy)/dlogits to grad.
void heads_grad(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m,
                const mac::ActionVector& a, double c_logp, double c_ent, std::span<double> grad);

// Running standardization (Welford). Frozen stats stop updating.
class ObsNormalizer {
 public:
  explicit ObsNormalizer(int dim = env::kObsDim, double clip = 5.0);
  void update(std::span<const double> x);
  std::vector<double> normalize(std::span<const double> x) const;
  void set_frozen(bool f) { frozen_ = f; }
  bool frozen() const { return frozen_; }
  int dim() const { return static_cast<int>(mean_.size()); }
  std::int64_t count() const { return count_; }
  const std::vector<double>& mean() const { return mean_; }
  std::vector<double> variance() const;
  double clip() const { return clip_; }
  void restore(std::int64_t count, std::vector<double> mean, std::vector<double> m2);
  const std::vector<double>& m2() const { return m2_; }

 private:
  double clip_;
  bool frozen_ = false;
  std::int64_t count_ = 0;
  std::vector<double> mean_, m2_;
};

struct Advantage {
  std::vector<double> delta, adv, target;
};
// Values for k+1 past the end are taken as `bootstrap` (0 at an episode end).
Advantage gae(std::span<const double> rewards, std::span<const double> values, double gamma, double lambda,
              double bootstrap = 0.0);

double ppo_clip_objective(double ratio, double adv, double eps);
// d objective / d ratio: adv when the unclipped branch is the minimum, else 0.
double ppo_clip_grad(double ratio, double adv, double eps);

enum class Algo { mappo, a2c };
std::string_view algo_name(Algo a);
Algo algo_from_name(std::string_view s);  // throws std::invalid_argument

// Actors (one per agent, or one shared with an agent-index feature), the central critic and
// the observation statistics.
struct PolicyNets {
  HeadLayout layout;
  int n_agents = 0;
  bool shared = false;
  Algo algo = Algo::mappo;
  std::string config_hash;
  std::vector<nn::Mlp> actors;
  nn::Mlp critic;
  ObsNormalizer norm;

  static PolicyNets create(const SimConfig& cfg, int n_agents, Algo algo, std::uint64_t seed);
  const nn::Mlp& actor(int i) const { return actors[shared ? 0 : i]; }
  nn::Mlp& actor(int i) { return actors[shared ? 0 : i]; }
  int actor_index(int i) const { return shared ? 0 : i; }
  std::vector<double> actor_input(int agent, std::span<const double> normalized_obs) const;

  // manifest.json plus one little-endian f64 blob per network
  void save(const std::filesystem::path& dir) const;
  static PolicyNets load(const std::filesystem::path& dir);
};

bool share_actors(const SimConfig& cfg, int n_agents);

struct Transition {
  std::vector<std::vector<double>> actor_in;  // per agent
  std::vector<mac::ActionMask> masks;
  std::vector<mac::ActionVector> actions;
  std::vector<double> logp;  // at sampling time, per agent
  std::vector<double> state;
  double reward = 0.0;
  double value = 0.0;
};

struct CurvePoint {
  int episode = 0;
  double mean_reward = 0.0;
  double prr = 0.0;
  double crlb_range_m = 0.0;
  double mec_delay_ms = 0.0;
  double entropy = 0.0;
  double actor_loss = 0.0;
  double value_loss = 0.0;
};

struct Gradients {
  std::vector<std::vector<double>> actor;  // one per actor network
  std::vector<double> critic;
  double actor_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;  // mean per agent-sample
};

class Trainer {
 public:
  Trainer(SimConfig cfg, Algo algo, std::uint64_t seed, env::EnvOptions env_opts = {});

  CurvePoint train_episode();
  std::vector<CurvePoint> train(int episodes, const std::function<void(const CurvePoint&)>& on_episode = {});

  // One episode under the current policy; normalizer statistics are updated.
  std::vector<Transition> collect();
  // Loss gradients on a batch with standardized advantages `adv` and critic targets.
  Gradients gradients(const std::vector<Transition>& batch, std::span<const double> adv,
                      std::span<const double> targets, Algo algo, double clip_eps) const;

  const PolicyNets& nets() const { return nets_; }
  PolicyNets& nets() { return nets_; }
  const SimConfig& config() const { return cfg_; }
  int episodes_done() const { return episode_; }

 private:
  SimConfig cfg_;
  Algo algo_;
  std::uint64_t seed_;
  env::IsccEnv env_;
  PolicyNets nets_;
  std::vector<nn::Adam> actor_opt_;
  nn::Adam critic_opt_;
  CounterRng rng_;
  int episode_ = 0;
};

// Decentralized execution: each actor sees only its own observation and mask.
class LearnedPolicy final : public JointPolicy {
 public:
  explicit LearnedPolicy(PolicyNets nets, bool deterministic = false);
  std::string name() const override;
  std::vector<mac::ActionVector> act(const env::IsccEnv& env, const std::vector<env::Observation>& obs,
                                     CounterRng& rng) override;
  const PolicyNets& nets() const { return nets_; }

 private:
  PolicyNets nets_;
  bool deterministic_;
};

}  // namespace iscc::marl
