#include "iscc/marl.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace iscc::marl {

namespace {

struct HeadView {
  std::vector<std::uint8_t> allowed;
  std::vector<double> p;     // probabilities over the head (0 where masked)
  std::vector<double> logp;  // log-probabilities (unused where masked)
  double entropy = 0.0;
};

HeadView head_view(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m, int h,
                   const mac::ActionVector& partial) {
  HeadView v;
  v.allowed = head_allowed(m, h, partial);
  const int n = lay.sizes[h];
  const double* z = logits.data() + lay.offsets[h];
  double zmax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k)
    if (v.allowed[k]) zmax = std::max(zmax, z[k]);
  if (!std::isfinite(zmax)) throw std::logic_error("policy head has no admissible value: " + std::string(mac::head_name(h)));
  double s = 0.0;
  for (int k = 0; k < n; ++k)
    if (v.allowed[k]) s += std::exp(z[k] - zmax);
  const double lse = zmax + std::log(s);
  v.p.assign(n, 0.0);
  v.logp.assign(n, -std::numeric_limits<double>::infinity());
  for (int k = 0; k < n; ++k)
    if (v.allowed[k]) {
      v.logp[k] = z[k] - lse;
      v.p[k] = std::exp(v.logp[k]);
      v.entropy -= v.p[k] * v.logp[k];
    }
  return v;
}

void put_f64_le(std::ostream& out, double x) {
  auto u = std::bit_cast<std::uint64_t>(x);
  char b[8];
  for (int k = 0; k < 8; ++k) b[k] = static_cast<char>((u >> (8 * k)) & 0xFF);
  out.write(b, 8);
}

double get_f64_le(const unsigned char* b) {
  std::uint64_t u = 0;
  for (int k = 0; k < 8; ++k) u |= static_cast<std::uint64_t>(b[k]) << (8 * k);
  return std::bit_cast<double>(u);
}

void write_blob(const std::filesystem::path& p, const std::vector<double>& v) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  for (double x : v) put_f64_le(out, x);
  if (!out) throw std::runtime_error("write failed: " + p.string());
}

std::vector<double> read_blob(const std::filesystem::path& p, std::size_t n) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() != n * 8) throw std::runtime_error("parameter blob size mismatch: " + p.string());
  std::vector<double> v(n);
  for (std::size_t k = 0; k < n; ++k) v[k] = get_f64_le(bytes.data() + 8 * k);
  return v;
}

std::vector<int> net_dims(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> d{in};
  d.insert(d.end(), hidden.begin(), hidden.end());
  d.push_back(out);
  return d;
}

}  // namespace

HeadLayout HeadLayout::from_domain(const mac::ActionDomain& dom) {
  HeadLayout l;
  l.sizes = dom.head_sizes();
  l.offsets = dom.head_offsets();
  l.total = dom.total_logits();
  return l;
}

std::vector<std::uint8_t> head_allowed(const mac::ActionMask& m, int h, const mac::ActionVector& partial) {
  if (h == mac::kNc) return m.n_c_allowed(partial.idx[mac::kNs]);
  return m.allowed[h];
}

std::array<bool, mac::kNumHeads> trained_heads(const mac::ActionMask& m) {
  std::array<bool, mac::kNumHeads> t;
  t.fill(true);
  if (m.mac_frozen) t[mac::kResource] = t[mac::kRc] = t[mac::kKeep] = false;
  return t;
}

mac::ActionVector sample_heads(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m,
                               CounterRng& rng, PolicyStats* stats) {
  if (static_cast<int>(logits.size()) != lay.total) throw std::invalid_argument("sample_heads: logit count");
  mac::ActionVector a;
  const auto trained = trained_heads(m);
  PolicyStats st;
  for (int h = 0; h < mac::kNumHeads; ++h) {
    const auto v = head_view(logits, lay, m, h, a);
    const double u = rng.uniform();
    double c = 0.0;
    int pick = -1, last = -1;
    for (int k = 0; k < lay.sizes[h]; ++k) {
      if (!v.allowed[k]) continue;
      last = k;
      c += v.p[k];
      if (u < c) {
        pick = k;
        break;
      }
    }
    if (pick < 0) pick = last;  // rounding at the top of the cumulative sum
    a.idx[h] = pick;
    if (trained[h]) {
      st.head_logp[h] = v.logp[pick];
      st.logp += v.logp[pick];
      st.entropy += v.entropy;
    }
  }
  if (stats) *stats = st;
  return a;
}

mac::ActionVector argmax_heads(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m) {
  mac::ActionVector a;
  for (int h = 0; h < mac::kNumHeads; ++h) {
    const auto allowed = head_allowed(m, h, a);
    const double* z = logits.data() + lay.offsets[h];
    int best = -1;
    for (int k = 0; k < lay.sizes[h]; ++k)
      if (allowed[k] && (best < 0 || z[k] > z[best])) best = k;
    if (best < 0) throw std::logic_error("argmax_heads: head has no admissible value");
    a.idx[h] = best;
  }
  return a;
}

PolicyStats evaluate_heads(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m,
                           const mac::ActionVector& a) {
  const auto trained = trained_heads(m);
  PolicyStats st;
  for (int h = 0; h < mac::kNumHeads; ++h) {
    if (!trained[h]) continue;
    const auto v = head_view(logits, lay, m, h, a);
    const int k = a.idx[h];
    if (k < 0 || k >= lay.sizes[h] || !v.allowed[k]) throw std::logic_error("evaluate_heads: action outside the mask");
    st.head_logp[h] = v.logp[k];
    st.logp += v.logp[k];
    st.entropy += v.entropy;
  }
  return st;
}

std::vector<double> head_probs(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m, int h,
                               const mac::ActionVector& partial) {
  return head_view(logits, lay, m, h, partial).p;
}

void heads_grad(std::span<const double> logits, const HeadLayout& lay, const mac::ActionMask& m,
                const mac::ActionVector& a, double c_logp, double c_ent, std::span<double> grad) {
  const auto trained = trained_heads(m);
  for (int h = 0; h < mac::kNumHeads; ++h) {
    if (!trained[h]) continue;
    const auto v = head_view(logits, lay, m, h, a);
    double* g = grad.data() + lay.offsets[h];
    for (int k = 0; k < lay.sizes[h]; ++k) {
      if (!v.allowed[k]) continue;
      const double dlogp = (k == a.idx[h] ? 1.0 : 0.0) - v.p[k];
      const double dent = -v.p[k] * (v.logp[k] + v.entropy);
      g[k] += c_logp * dlogp + c_ent * dent;
    }
  }
}

ObsNormalizer::ObsNormalizer(int dim, double clip) : clip_(clip), mean_(dim, 0.0), m2_(dim, 0.0) {}

void ObsNormalizer::update(std::span<const double> x) {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("ObsNormalizer: dimension mismatch");
  if (frozen_) return;
  ++count_;
  for (int k = 0; k < dim(); ++k) {
    const double d = x[k] - mean_[k];
    mean_[k] += d / count_;
    m2_[k] += d * (x[k] - mean_[k]);
  }
}

std::vector<double> ObsNormalizer::variance() const {
  std::vector<double> v(dim(), 1.0);
  if (count_ > 1)
    for (int k = 0; k < dim(); ++k) v[k] = m2_[k] / count_;
  return v;
}

std::vector<double> ObsNormalizer::normalize(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw std::invalid_argument("ObsNormalizer: dimension mismatch");
  const auto var = variance();
  std::vector<double> y(dim());
  for (int k = 0; k < dim(); ++k) y[k] = std::clamp((x[k] - mean_[k]) / std::sqrt(var[k] + 1e-8), -clip_, clip_);
  return y;
}

void ObsNormalizer::restore(std::int64_t count, std::vector<double> mean, std::vector<double> m2) {
  if (mean.size() != mean_.size() || m2.size() != m2_.size() || count < 0)
    throw std::invalid_argument("ObsNormalizer::restore: bad statistics");
  count_ = count;
  mean_ = std::move(mean);
  m2_ = std::move(m2);
}

Advantage gae(std::span<const double> rewards, std::span<const double> values, double gamma, double lambda,
              double bootstrap) {
  if (rewards.size() != values.size()) throw std::invalid_argument("gae: rewards and values differ in length");
  const std::size_t n = rewards.size();
  Advantage a;
  a.delta.resize(n);
  a.adv.resize(n);
  a.target.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double next = k + 1 < n ? values[k + 1] : bootstrap;
    a.delta[k] = rewards[k] + gamma * next - values[k];
  }
  double run = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    run = a.delta[k] + gamma * lambda * run;
    a.adv[k] = run;
    a.target[k] = run + values[k];
  }
  return a;
}

double ppo_clip_objective(double ratio, double adv, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return std::min(ratio * adv, clipped * adv);
}

double ppo_clip_grad(double ratio, double adv, double eps) {
  const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
  return ratio * adv <= clipped * adv ? adv : 0.0;
}

std::string_view algo_name(Algo a) { return a == Algo::mappo ? "mappo" : "a2c"; }

Algo algo_from_name(std::string_view s) {
  if (s == "mappo" || s == "mappo-sps") return Algo::mappo;
  if (s == "a2c" || s == "ma-a2c") return Algo::a2c;
  throw std::invalid_argument("unknown algorithm: " + std::string(s));
}

bool share_actors(const SimConfig& cfg, int n_agents) {
  if (cfg.share_actor_params == 0) return false;
  if (cfg.share_actor_params == 1) return true;
  return n_agents > 32;
}

PolicyNets PolicyNets::create(const SimConfig& cfg, int n_agents, Algo algo, std::uint64_t seed) {
  if (n_agents < 1) throw std::invalid_argument("PolicyNets: need at least one agent");
  PolicyNets p;
  p.layout = HeadLayout::from_domain(mac::ActionDomain::from_config(cfg));
  p.n_agents = n_agents;
  p.shared = share_actors(cfg, n_agents);
  p.algo = algo;
  p.config_hash = iscc::config_hash(cfg);
  p.norm = ObsNormalizer(env::kObsDim);
  const RngStreams streams(seed);
  const int n_actors = p.shared ? 1 : n_agents;
  const int in = env::kObsDim + (p.shared ? 1 : 0);
  for (int a = 0; a < n_actors; ++a) {
    nn::Mlp net(net_dims(in, cfg.actor_hidden, p.layout.total));
    auto g = streams.stream(Stream::policy, (std::uint64_t{1} << 40) + a);
    net.init(g, 0.01);
    p.actors.push_back(std::move(net));
  }
  p.critic = nn::Mlp(net_dims(n_agents * env::kObsDim + 2, cfg.critic_hidden, 1));
  auto g = streams.stream(Stream::policy, (std::uint64_t{1} << 41));
  p.critic.init(g, 1.0);
  return p;
}

std::vector<double> PolicyNets::actor_input(int agent, std::span<const double> normalized_obs) const {
  std::vector<double> in(normalized_obs.begin(), normalized_obs.end());
  if (shared) in.push_back(n_agents > 1 ? 2.0 * agent / (n_agents - 1) - 1.0 : 0.0);
  return in;
}

void PolicyNets::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json m;
  m["format"] = "iscc-policy-1";
  m["algo"] = algo_name(algo);
  m["n_agents"] = n_agents;
  m["shared_actor"] = shared;
  m["obs_dim"] = env::kObsDim;
  m["config_hash"] = config_hash;
  m["head_sizes"] = layout.sizes;
  m["actor_dims"] = actors.front().dims();
  m["critic_dims"] = critic.dims();
  m["normalizer"] = {{"count", norm.count()}, {"clip", norm.clip()}, {"mean", norm.mean()}, {"m2", norm.m2()}};
  auto nets = nlohmann::ordered_json::array();
  for (std::size_t a = 0; a < actors.size(); ++a) {
    const std::string file = "actor_" + std::to_string(a) + ".f64";
    write_blob(dir / file, actors[a].params());
    nets.push_back({{"name", "actor_" + std::to_string(a)}, {"file", file}, {"n_params", actors[a].n_params()}});
  }
  write_blob(dir / "critic.f64", critic.params());
  nets.push_back({{"name", "critic"}, {"file", "critic.f64"}, {"n_params", critic.n_params()}});
  m["networks"] = nets;
  std::ofstream out(dir / "manifest.json");
  out << m.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write manifest in " + dir.string());
}

PolicyNets PolicyNets::load(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("no manifest.json in " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("bad manifest: ") + e.what());
  }
  if (m.value("format", "") != "iscc-policy-1") throw std::runtime_error("unsupported checkpoint format");
  if (m.at("obs_dim").get<int>() != env::kObsDim) throw std::runtime_error("checkpoint observation size mismatch");
  PolicyNets p;
  p.algo = algo_from_name(m.at("algo").get<std::string>());
  p.n_agents = m.at("n_agents").get<int>();
  p.shared = m.at("shared_actor").get<bool>();
  p.config_hash = m.at("config_hash").get<std::string>();
  p.layout.sizes = m.at("head_sizes").get<std::array<int, mac::kNumHeads>>();
  p.layout.total = 0;
  for (int h = 0; h < mac::kNumHeads; ++h) {
    p.layout.offsets[h] = p.layout.total;
    p.layout.total += p.layout.sizes[h];
  }
  const auto& nz = m.at("normalizer");
  p.norm = ObsNormalizer(env::kObsDim, nz.at("clip").get<double>());
  p.norm.restore(nz.at("count").get<std::int64_t>(), nz.at("mean").get<std::vector<double>>(),
                 nz.at("m2").get<std::vector<double>>());
  p.norm.set_frozen(true);
  const auto actor_dims = m.at("actor_dims").get<std::vector<int>>();
  const auto critic_dims = m.at("critic_dims").get<std::vector<int>>();
  if (actor_dims.back() != p.layout.total) throw std::runtime_error("actor output does not match the head sizes");
  for (const auto& n : m.at("networks")) {
    const auto name = n.at("name").get<std::string>();
    nn::Mlp net(name == "critic" ? critic_dims : actor_dims);
    const auto np = n.at("n_params").get<std::size_t>();
    if (np != net.n_params()) throw std::runtime_error("parameter count mismatch for " + name);
    net.params() = read_blob(dir / n.at("file").get<std::string>(), np);
    if (!nn::all_finite(net.params())) throw std::runtime_error("non-finite parameters in " + name);
    if (name == "critic")
      p.critic = std::move(net);
    else
      p.actors.push_back(std::move(net));
  }
  if (p.actors.size() != static_cast<std::size_t>(p.shared ? 1 : p.n_agents))
    throw std::runtime_error("checkpoint actor count mismatch");
  return p;
}

Trainer::Trainer(SimConfig cfg, Algo algo, std::uint64_t seed, env::EnvOptions env_opts)
    : cfg_(std::move(cfg)), algo_(algo), seed_(seed), env_(cfg_, std::move(env_opts)),
      rng_(RngStreams(seed).stream(Stream::policy, 0)) {
  nets_ = PolicyNets::create(cfg_, cfg_.vehicle_count(), algo, seed);
  for (const auto& a : nets_.actors) actor_opt_.emplace_back(a.n_params(), cfg_.actor_lr);
  critic_opt_ = nn::Adam(nets_.critic.n_params(), cfg_.critic_lr);
}

std::vector<Transition> Trainer::collect() {
  env_.reset(derive_seed(seed_, static_cast<std::uint64_t>(episode_)));
  if (env_.n_agents() != nets_.n_agents) throw std::logic_error("Trainer: agent count changed");
  const int n = env_.n_agents();
  std::vector<Transition> batch;
  nn::Mlp::Cache cache;
  std::vector<env::Observation> nobs_arr(n);
  while (!env_.done()) {
    const auto& raw = env_.observations();
    for (int i = 0; i < n; ++i) nets_.norm.update(raw[i]);
    Transition tr;
    for (int i = 0; i < n; ++i) {
      const auto z = nets_.norm.normalize(raw[i]);
      std::copy(z.begin(), z.end(), nobs_arr[i].begin());
    }
    tr.state = env_.global_state(nobs_arr);
    tr.value = nets_.critic.forward(tr.state, cache)[0];
    tr.masks = env_.masks();
    for (int i = 0; i < n; ++i) {
      tr.actor_in.push_back(nets_.actor_input(i, nobs_arr[i]));
      const auto& logits = nets_.actor(i).forward(tr.actor_in.back(), cache);
      PolicyStats st;
      tr.actions.push_back(sample_heads(logits, nets_.layout, tr.masks[i], rng_, &st));
      tr.logp.push_back(st.logp);
    }
    tr.reward = env_.step_epoch(tr.actions).reward;
    batch.push_back(std::move(tr));
  }
  return batch;
}

Gradients Trainer::gradients(const std::vector<Transition>& batch, std::span<const double> adv,
                             std::span<const double> targets, Algo algo, double clip_eps) const {
  const int k_len = static_cast<int>(batch.size());
  if (k_len == 0 || adv.size() != batch.size() || targets.size() != batch.size())
    throw std::invalid_argument("gradients: batch, advantages and targets must align");
  const int n = nets_.n_agents;
  Gradients g;
  for (const auto& a : nets_.actors) g.actor.emplace_back(a.n_params(), 0.0);
  g.critic.assign(nets_.critic.n_params(), 0.0);
  const double per_actor = nets_.shared ? static_cast<double>(n) * k_len : static_cast<double>(k_len);
  const double ce = cfg_.entropy_coef;
  nn::Mlp::Cache cache;
  std::vector<double> glog(nets_.layout.total);
  for (int k = 0; k < k_len; ++k) {
    const auto& tr = batch[k];
    for (int i = 0; i < n; ++i) {
      const auto& net = nets_.actor(i);
      const auto& logits = net.forward(tr.actor_in[i], cache);
      const auto st = evaluate_heads(logits, nets_.layout, tr.masks[i], tr.actions[i]);
      double obj, dlogp;
      if (algo == Algo::mappo) {
        const double ratio = std::exp(st.logp - tr.logp[i]);
        obj = ppo_clip_objective(ratio, adv[k], clip_eps);
        dlogp = ppo_clip_grad(ratio, adv[k], clip_eps) * ratio;
      } else {
        obj = st.logp * adv[k];
        dlogp = adv[k];
      }
      g.actor_loss -= obj / (static_cast<double>(n) * k_len);
      g.entropy += st.entropy / (static_cast<double>(n) * k_len);
      std::fill(glog.begin(), glog.end(), 0.0);
      heads_grad(logits, nets_.layout, tr.masks[i], tr.actions[i], -dlogp / per_actor, -ce / per_actor, glog);
      net.backward(cache, glog, g.actor[nets_.actor_index(i)]);
    }
    const double v = nets_.critic.forward(tr.state, cache)[0];
    const double diff = v - targets[k];
    g.value_loss += diff * diff / k_len;
    const double gout = cfg_.value_coef * 2.0 * diff / k_len;
    nets_.critic.backward(cache, std::span<const double>(&gout, 1), g.critic);
  }
  return g;
}

CurvePoint Trainer::train_episode() {
  const auto batch = collect();
  std::vector<double> rewards, values;
  for (const auto& t : batch) {
    rewards.push_back(t.reward);
    values.push_back(t.value);
  }
  const auto a = gae(rewards, values, cfg_.gamma, cfg_.gae_lambda, 0.0);
  std::vector<double> adv = a.adv;
  double mean = 0.0, var = 0.0;
  for (double x : adv) mean += x;
  mean /= adv.size();
  for (double x : adv) var += (x - mean) * (x - mean);
  var /= adv.size();
  for (double& x : adv) x = (x - mean) / (std::sqrt(var) + 1e-8);

  const int updates = algo_ == Algo::mappo ? cfg_.update_epochs : 1;
  CurvePoint cp;
  cp.episode = episode_;
  for (int u = 0; u < updates; ++u) {
    auto g = gradients(batch, adv, a.target, algo_, cfg_.clip_eps);
    if (u == 0) {
      cp.actor_loss = g.actor_loss;
      cp.value_loss = g.value_loss;
      cp.entropy = g.entropy;
    }
    bool finite = std::isfinite(g.actor_loss) && std::isfinite(g.value_loss) && nn::all_finite(g.critic);
    for (const auto& ga : g.actor) finite = finite && nn::all_finite(ga);
    if (!finite) {
      std::ostringstream msg;
      msg << "non-finite loss or gradient at episode " << episode_ << " update " << u << ": actor_loss="
          << g.actor_loss << " value_loss=" << g.value_loss << " entropy=" << g.entropy
          << " critic_grad_norm=" << nn::global_norm(g.critic);
      throw std::runtime_error(msg.str());
    }
    for (std::size_t k = 0; k < g.actor.size(); ++k) {
      nn::clip_global_norm(g.actor[k], cfg_.grad_clip_norm);
      actor_opt_[k].step(nets_.actors[k].params(), g.actor[k]);
    }
    nn::clip_global_norm(g.critic, cfg_.grad_clip_norm);
    critic_opt_.step(nets_.critic.params(), g.critic);
  }
  for (const auto& net : nets_.actors)
    if (!nn::all_finite(net.params())) throw std::runtime_error("non-finite actor parameters after update");
  if (!nn::all_finite(nets_.critic.params())) throw std::runtime_error("non-finite critic parameters after update");

  double r = 0.0;
  for (double x : rewards) r += x;
  cp.mean_reward = r / rewards.size();
  const auto& kpi = env_.kpi();
  cp.prr = kpi.tx_count ? kpi.prr_sum / kpi.tx_count : 0.0;
  cp.crlb_range_m = kpi.crlb_count ? kpi.crlb_range_sum / kpi.crlb_count : 0.0;
  cp.mec_delay_ms = kpi.slots ? kpi.mec_delay_sum_s / kpi.slots * 1e3 : 0.0;
  ++episode_;
  return cp;
}

std::vector<CurvePoint> Trainer::train(int episodes, const std::function<void(const CurvePoint&)>& on_episode) {
  if (episodes < 0) throw std::invalid_argument("episodes must be >= 0");
  std::vector<CurvePoint> out;
  for (int e = 0; e < episodes; ++e) {
    out.push_back(train_episode());
    if (on_episode) on_episode(out.back());
  }
  return out;
}

LearnedPolicy::LearnedPolicy(PolicyNets nets, bool deterministic) : nets_(std::move(nets)), deterministic_(deterministic) {
  nets_.norm.set_frozen(true);
}

std::string LearnedPolicy::name() const { return std::string(algo_name(nets_.algo)); }

std::vector<mac::ActionVector> LearnedPolicy::act(const env::IsccEnv& env, const std::vector<env::Observation>& obs,
                                                  CounterRng& rng) {
  if (static_cast<int>(obs.size()) != nets_.n_agents)
    throw std::invalid_argument("policy was trained for " + std::to_string(nets_.n_agents) + " agents, scenario has " +
                                std::to_string(obs.size()));
  std::vector<mac::ActionVector> out;
  nn::Mlp::Cache cache;
  for (int i = 0; i < nets_.n_agents; ++i) {
    const auto in = nets_.actor_input(i, nets_.norm.normalize(obs[i]));
    const auto& logits = nets_.actor(i).forward(in, cache);
    const auto& mask = env.masks()[i];
    out.push_back(deterministic_ ? argmax_heads(logits, nets_.layout, mask)
                                 : sample_heads(logits, nets_.layout, mask, rng));
  }
  return out;
}

}  // namespace iscc::marl
