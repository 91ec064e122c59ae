#include "iscc/eval.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <charconv>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "iscc/greedy.hpp"
#include "iscc/marl.hpp"

namespace iscc::eval {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(std::string_view s, std::string_view what) {
  const auto t = trim(s);
  if (t == "nan") return kNaN;
  double v = 0.0;
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || p != t.data() + t.size())
    throw UsageError(std::string(what) + ": not a number: '" + t + "'");
  return v;
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int episode) {
  return derive_seed(derive_seed(seed, 0xE7A1ULL << 32), static_cast<std::uint64_t>(episode));
}

}  // namespace

// ---- overrides and lists

void apply_override(SimConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw UsageError("--set expects key=value, got '" + std::string(assignment) + "'");
  const auto key = trim(assignment.substr(0, eq));
  const auto raw = trim(assignment.substr(eq + 1));
  json doc = json::parse(config_to_json(cfg));

  json* slot = nullptr;
  if (const auto dot = key.find('.'); dot != std::string::npos) {
    const auto sec = key.substr(0, dot), k = key.substr(dot + 1);
    if (doc.contains(sec) && doc[sec].is_object() && doc[sec].contains(k)) slot = &doc[sec][k];
  } else if (doc.contains(key) && !doc[key].is_object()) {
    slot = &doc[key];
  } else {
    for (auto& [sec, body] : doc.items()) {
      if (!body.is_object() || !body.contains(key)) continue;
      if (slot) throw UsageError("--set: key '" + key + "' is ambiguous, qualify it with its section");
      slot = &body[key];
    }
  }
  if (!slot) throw UsageError("--set: unknown config key '" + key + "'");

  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  *slot = value;
  // a fixed vehicle count re-derives the road length from the (new) density
  auto& mob = doc["mobility"];
  if ((slot == &mob["n_vehicles"] || slot == &mob["density_veh_per_km"]) && mob["n_vehicles"].is_number() &&
      mob["n_vehicles"].get<double>() > 0)
    mob.erase("road_length_m");
  try {
    cfg = parse_config_json(doc.dump());
  } catch (const ConfigError& e) {
    throw UsageError(std::string("--set ") + key + ": " + e.what());
  }
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in{std::string(s)};
  while (std::getline(in, cur, ',')) {
    auto t = trim(cur);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

std::vector<std::uint64_t> parse_seeds(std::string_view s) {
  std::vector<std::uint64_t> out;
  for (const auto& item : split_list(s)) {
    auto one = [&](std::string_view t) {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
      if (t.empty() || ec != std::errc() || p != t.data() + t.size())
        throw UsageError("--seeds: bad seed '" + std::string(t) + "'");
      return v;
    };
    if (const auto dash = item.find('-'); dash != std::string::npos && dash > 0) {
      const auto lo = one(std::string_view(item).substr(0, dash)), hi = one(std::string_view(item).substr(dash + 1));
      if (hi < lo || hi - lo > 10000) throw UsageError("--seeds: bad range '" + item + "'");
      for (auto v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(one(item));
    }
  }
  if (out.empty()) throw UsageError("--seeds: no seeds given");
  return out;
}

std::vector<double> parse_values(std::string_view s) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    const double v = parse_double(item, "--values");
    if (!std::isfinite(v)) throw UsageError("--values: non-finite value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

// ---- KPIs

namespace {
constexpr std::array<std::string_view, kNumKpis> kKpiNames = {
    "crlb_range_m", "crlb_vel_mps", "prr_pct",  "throughput_mbps", "cbr_pct",
    "max_distance_m", "latency_ms", "mec_delay_ms", "energy_mj", "reward"};
constexpr std::array<std::string_view, kNumKpis> kKpiLabels = {
    "range root-CRLB (m)", "velocity root-CRLB (m/s)", "PRR at 80 m (%)", "throughput (Mbps)", "CBR (%)",
    "max reliable distance (m)", "computation latency (ms)", "MEC queueing delay (ms)", "energy (mJ/slot)",
    "mean epoch reward"};
}  // namespace

std::string_view kpi_name(int k) { return kKpiNames.at(static_cast<std::size_t>(k)); }
std::string_view kpi_label(int k) { return kKpiLabels.at(static_cast<std::size_t>(k)); }
std::optional<int> kpi_from_name(std::string_view name) {
  for (int k = 0; k < kNumKpis; ++k)
    if (kKpiNames[k] == name) return k;
  return std::nullopt;
}

KpiValues kpis(const env::KpiAccumulator& acc, const SimConfig& cfg) {
  KpiValues v;
  v.fill(kNaN);
  if (acc.crlb_count > 0) {
    v[kCrlbRange] = acc.crlb_range_sum / static_cast<double>(acc.crlb_count);
    v[kCrlbVel] = acc.crlb_vel_sum / static_cast<double>(acc.crlb_count);
  }
  if (const auto p = acc.prr_by_distance.prr_at(kPrrReportDistanceM)) v[kPrr] = 100.0 * *p;
  if (acc.tx_count > 0) v[kThroughput] = acc.rate_eff_sum / static_cast<double>(acc.tx_count) / 1e6;
  if (const auto table = acc.prr_by_distance.table(); !table.empty())
    v[kMaxDistance] = comm::max_reliable_distance(table, cfg.prr_target);
  if (acc.vehicle_slots > 0) {
    const double n = static_cast<double>(acc.vehicle_slots);
    v[kCbr] = 100.0 * acc.cbr_sum / n;
    v[kLatency] = 1e3 * acc.e2e_sum_s / n;
    v[kEnergy] = 1e3 * acc.energy_sum_j / n;
    v[kReward] = -acc.cost_sum / n;
  }
  if (acc.slots > 0) v[kMecDelay] = 1e3 * acc.mec_delay_sum_s / static_cast<double>(acc.slots);
  return v;
}

Summary summarize(const std::vector<double>& samples) {
  Summary s;
  double sum = 0.0;
  for (double x : samples)
    if (!std::isnan(x)) {
      sum += x;
      ++s.n;
    }
  if (s.n == 0) return {kNaN, kNaN, 0};
  s.mean = sum / s.n;
  if (s.n < 2) {
    s.ci95 = kNaN;
    return s;
  }
  double ss = 0.0;
  for (double x : samples)
    if (!std::isnan(x)) ss += (x - s.mean) * (x - s.mean);
  const double sd = std::sqrt(ss / (s.n - 1));
  const boost::math::students_t dist(s.n - 1);
  s.ci95 = boost::math::quantile(dist, 0.975) * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

// ---- policies

bool is_learned(std::string_view name) {
  return name == "mappo" || name == "mappo-sps" || name == "ma-a2c" || name == "a2c";
}

std::string canonical_policy(std::string_view name) {
  if (name == "scg" || name == "scg-sps") return "scg";
  if (name == "ccg" || name == "ccg-sps") return "ccg";
  if (name == "random") return "random";
  if (name == "mappo" || name == "mappo-sps") return "mappo";
  if (name == "ma-a2c" || name == "a2c") return "ma-a2c";
  throw UsageError("unknown policy '" + std::string(name) + "' (expected mappo, ma-a2c, scg, ccg or random)");
}

namespace {
fs::path resolve_checkpoint(const fs::path& base, std::uint64_t seed) {
  if (fs::exists(base / "manifest.json")) return base;
  const auto per_seed = base / ("seed_" + std::to_string(seed)) / "checkpoint";
  if (fs::exists(per_seed / "manifest.json")) return per_seed;
  throw UsageError("missing checkpoint: no manifest.json under " + base.string() + " or " + per_seed.string());
}
}  // namespace

std::unique_ptr<JointPolicy> make_policy(std::string_view name, const SimConfig& cfg, std::uint64_t seed,
                                         const fs::path& checkpoint) {
  const auto canon = canonical_policy(name);
  if (canon == "scg") return std::make_unique<greedy::GreedyPolicy>(greedy::Objective::sensing, cfg.greedy_candidates);
  if (canon == "ccg") return std::make_unique<greedy::GreedyPolicy>(greedy::Objective::compute, cfg.greedy_candidates);
  if (canon == "random") return std::make_unique<RandomPolicy>();
  if (checkpoint.empty()) throw UsageError("policy " + canon + " needs --checkpoint");
  marl::PolicyNets nets;
  const auto dir = resolve_checkpoint(checkpoint, seed);
  try {
    nets = marl::PolicyNets::load(dir);
  } catch (const std::runtime_error& e) {
    throw UsageError(std::string("bad checkpoint: ") + e.what());
  }
  if (std::string(marl::algo_name(nets.algo)) != std::string(marl::algo_name(marl::algo_from_name(canon))))
    throw UsageError("checkpoint " + dir.string() + " holds a " + std::string(marl::algo_name(nets.algo)) +
                     " policy, not " + canon);
  if (nets.n_agents != cfg.vehicle_count())
    throw UsageError("checkpoint was trained for " + std::to_string(nets.n_agents) + " vehicles, config has " +
                     std::to_string(cfg.vehicle_count()));
  return std::make_unique<marl::LearnedPolicy>(std::move(nets));
}

// ---- runs

env::KpiAccumulator run_episodes(const SimConfig& cfg, JointPolicy& policy, std::uint64_t seed, int episodes,
                                 int forced_offloaders, const RunTraces& traces) {
  if (episodes <= 0) throw UsageError("episodes must be positive");
  if (forced_offloaders < 0 || forced_offloaders > cfg.vehicle_count())
    throw UsageError("forced offloaders must lie in [0, " + std::to_string(cfg.vehicle_count()) + "]");
  env::EnvOptions o;
  o.forced_offloaders = forced_offloaders;
  o.comm_csv = traces.comm_csv;
  o.compute_csv = traces.compute_csv;
  o.mac_trace = traces.mac_trace;
  o.epoch_log = traces.epoch_log;
  env::IsccEnv e(cfg, o);
  env::KpiAccumulator acc;
  const RngStreams streams(seed);
  for (int ep = 0; ep < episodes; ++ep) {
    e.options().episode = ep;
    e.reset(eval_episode_seed(seed, ep));
    auto rng = streams.stream(Stream::policy, (1ULL << 42) + static_cast<std::uint64_t>(ep));
    while (!e.done()) e.step_epoch(policy.act(e, e.observations(), rng));
    acc.merge(e.kpi());
  }
  return acc;
}

// ---- CSV

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void write_csv_preamble(std::ostream& out, const std::string& config_hash, std::string_view header) {
  out << "# config_hash=" << config_hash << '\n' << header << '\n';
}

CsvWriter::CsvWriter(const fs::path& path, const std::string& config_hash, const std::vector<std::string>& header)
    : out_(std::make_unique<std::ofstream>(path, std::ios::binary)), width_(header.size()) {
  if (!*out_) throw std::runtime_error("cannot write " + path.string());
  std::string h;
  for (std::size_t k = 0; k < header.size(); ++k) h += (k ? "," : "") + header[k];
  write_csv_preamble(*out_, config_hash, h);
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != width_) throw std::logic_error("CsvWriter: row width does not match the header");
  for (std::size_t k = 0; k < cells.size(); ++k) *out_ << (k ? "," : "") << cells[k];
  *out_ << '\n';
}

std::ostream& CsvWriter::stream() { return *out_; }

int CsvTable::column(std::string_view name) const {
  for (std::size_t k = 0; k < header.size(); ++k)
    if (header[k] == name) return static_cast<int>(k);
  throw UsageError("missing column '" + std::string(name) + "'");
}

std::vector<double> CsvTable::numbers(int col) const {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(parse_double(r.at(col), "column " + header.at(col)));
  return out;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read CSV " + path.string());
  CsvTable t;
  std::string line;
  int lineno = 0;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    for (;;) {
      const auto c = s.find(',', start);
      cells.push_back(trim(s.substr(start, c == std::string::npos ? std::string::npos : c - start)));
      if (c == std::string::npos) break;
      start = c + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      constexpr std::string_view tag = "# config_hash=";
      if (line.rfind(tag, 0) == 0) t.config_hash = line.substr(tag.size());
      continue;
    }
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size())
      throw UsageError("malformed CSV " + path.string() + ": line " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " cells, header has " + std::to_string(t.header.size()));
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw UsageError("malformed CSV " + path.string() + ": no header row");
  return t;
}

// ---- plotting

PlotKind plot_kind_from_name(std::string_view s) {
  if (s == "line") return PlotKind::line;
  if (s == "bar") return PlotKind::bar;
  throw UsageError("unknown plot kind '" + std::string(s) + "' (expected line or bar)");
}

namespace {

std::string axis_label(const std::string& col) {
  std::string base = col;
  for (std::string_view suf : {"_mean", "_smoothed"})
    if (base.size() > suf.size() && base.ends_with(suf)) base.resize(base.size() - suf.size());
  if (const auto k = kpi_from_name(base)) return std::string(kpi_label(*k));
  static const std::vector<std::pair<std::string_view, std::string_view>> units = {
      {"_veh_per_km", "veh/km"}, {"_mps", "m/s"}, {"_pct", "%"}, {"_mbps", "Mbps"}, {"_ms", "ms"},
      {"_mj", "mJ/slot"},        {"_m", "m"}};
  for (const auto& [suf, unit] : units)
    if (base.size() > suf.size() && base.ends_with(suf))
      return base.substr(0, base.size() - suf.size()) + " (" + std::string(unit) + ")";
  return base;
}

std::string num3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

constexpr std::array<std::string_view, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                     "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string render_svg(const CsvTable& t, const PlotSpec& spec) {
  const int xc = t.column(spec.x), yc = t.column(spec.y);
  const int sc = spec.series.empty() ? -1 : t.column(spec.series);
  const int ec = spec.err.empty() ? -1 : t.column(spec.err);
  const auto xs = t.numbers(xc), ys = t.numbers(yc);
  std::vector<double> es(ys.size(), 0.0);
  if (ec >= 0) es = t.numbers(ec);

  // series in first-appearance order
  std::vector<std::string> names;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const std::string s = sc >= 0 ? t.rows[r][sc] : spec.y;
    auto it = std::find(names.begin(), names.end(), s);
    if (it == names.end()) {
      names.push_back(s);
      members.emplace_back();
      it = names.end() - 1;
    }
    members[static_cast<std::size_t>(it - names.begin())].push_back(r);
  }

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (std::size_t r = 0; r < xs.size(); ++r) {
    if (!std::isfinite(xs[r]) || !std::isfinite(ys[r])) continue;
    const double e = std::isfinite(es[r]) ? std::abs(es[r]) : 0.0;
    x0 = std::min(x0, xs[r]);
    x1 = std::max(x1, xs[r]);
    y0 = std::min(y0, ys[r] - e);
    y1 = std::max(y1, ys[r] + e);
  }
  if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (spec.kind == PlotKind::bar) y0 = std::min(y0, 0.0), y1 = std::max(y1, 0.0);
  if (x1 == x0) x0 -= 1, x1 += 1;
  if (y1 == y0) y0 -= 1, y1 += 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;

  const double W = 720, H = 440, L = 80, R = 160, T = 40, B = 60;
  const double pw = W - L - R, ph = H - T - B;
  std::vector<double> cats;  // bar categories
  if (spec.kind == PlotKind::bar) {
    for (double x : xs)
      if (std::isfinite(x) && std::find(cats.begin(), cats.end(), x) == cats.end()) cats.push_back(x);
    std::sort(cats.begin(), cats.end());
  }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return T + (y1 - y) / (y1 - y0) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty())
    o << "<text x=\"" << L + pw / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(spec.title)
      << "</text>\n";
  o << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = y0 + (y1 - y0) * k / 4.0;
    o << "<line x1=\"" << L - 4 << "\" y1=\"" << py(yv) << "\" x2=\"" << L << "\" y2=\"" << py(yv)
      << "\" stroke=\"black\"/><text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num3(yv)
      << "</text>\n";
  }
  if (spec.kind == PlotKind::line) {
    for (int k = 0; k <= 4; ++k) {
      const double xv = x0 + (x1 - x0) * k / 4.0;
      o << "<line x1=\"" << px(xv) << "\" y1=\"" << T + ph << "\" x2=\"" << px(xv) << "\" y2=\"" << T + ph + 4
        << "\" stroke=\"black\"/><text x=\"" << px(xv) << "\" y=\"" << T + ph + 18 << "\" text-anchor=\"middle\">"
        << num3(xv) << "</text>\n";
    }
  } else {
    for (std::size_t c = 0; c < cats.size(); ++c)
      o << "<text x=\"" << L + (c + 0.5) * pw / cats.size() << "\" y=\"" << T + ph + 18
        << "\" text-anchor=\"middle\">" << num3(cats[c]) << "</text>\n";
  }
  o << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\">"
    << xml_escape(axis_label(spec.x)) << "</text>\n";
  o << "<text x=\"18\" y=\"" << T + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << T + ph / 2
    << ")\">" << xml_escape(axis_label(spec.y)) << "</text>\n";

  for (std::size_t s = 0; s < names.size(); ++s) {
    const auto color = kColors[s % kColors.size()];
    auto rows = members[s];
    rows.erase(std::remove_if(rows.begin(), rows.end(),
                              [&](std::size_t r) { return !std::isfinite(xs[r]) || !std::isfinite(ys[r]); }),
               rows.end());
    std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
    o << "<g class=\"series\" data-name=\"" << xml_escape(names[s]) << "\">\n";
    if (spec.kind == PlotKind::line) {
      if (rows.size() == 1) {
        o << "<circle cx=\"" << px(xs[rows[0]]) << "\" cy=\"" << py(ys[rows[0]]) << "\" r=\"4\" fill=\"" << color
          << "\"/>\n";
      } else if (rows.size() > 1) {
        o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < rows.size(); ++k)
          o << (k ? " " : "") << px(xs[rows[k]]) << ',' << py(ys[rows[k]]);
        o << "\"/>\n";
      }
      for (auto r : rows)
        if (ec >= 0 && std::isfinite(es[r]) && es[r] > 0)
          o << "<line x1=\"" << px(xs[r]) << "\" y1=\"" << py(ys[r] - es[r]) << "\" x2=\"" << px(xs[r]) << "\" y2=\""
            << py(ys[r] + es[r]) << "\" stroke=\"" << color << "\"/>\n";
    } else {
      const double group = pw / std::max<std::size_t>(cats.size(), 1);
      const double bw = 0.8 * group / static_cast<double>(names.size());
      for (auto r : rows) {
        const auto c = static_cast<std::size_t>(std::find(cats.begin(), cats.end(), xs[r]) - cats.begin());
        const double bx = L + c * group + 0.1 * group + s * bw;
        const double top = py(std::max(ys[r], 0.0)), bot = py(std::min(ys[r], 0.0));
        o << "<rect x=\"" << bx << "\" y=\"" << top << "\" width=\"" << bw << "\" height=\"" << bot - top
          << "\" fill=\"" << color << "\"/>\n";
      }
    }
    o << "</g>\n";
    o << "<rect x=\"" << W - R + 12 << "\" y=\"" << T + 18 * s << "\" width=\"12\" height=\"12\" fill=\"" << color
      << "\"/><text x=\"" << W - R + 30 << "\" y=\"" << T + 18 * s + 11 << "\">" << xml_escape(names[s])
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void plot_file(const fs::path& csv, const PlotSpec& spec, const fs::path& svg) {
  const auto t = read_csv(csv);
  const auto text = render_svg(t, spec);
  std::ofstream out(svg, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + svg.string());
  out << text;
}

// ---- experiments

namespace {

void prepare_out(const Common& c) {
  if (c.out.empty()) throw UsageError("--out is required");
  if (c.seeds.empty()) throw UsageError("no seeds given");
  fs::create_directories(c.out);
  save_config(c.cfg, c.out / "config.toml");
}

std::vector<std::string> kpi_cells(const KpiValues& v) {
  std::vector<std::string> out;
  for (double x : v) out.push_back(fmt(x));
  return out;
}

std::vector<std::string> kpi_header(const std::vector<std::string>& lead) {
  auto h = lead;
  for (int k = 0; k < kNumKpis; ++k) h.emplace_back(kpi_name(k));
  return h;
}

template <class... Vs>
std::vector<std::string> cat(std::vector<std::string> a, const Vs&... more) {
  (a.insert(a.end(), more.begin(), more.end()), ...);
  return a;
}

}  // namespace

void run_train(const Common& c, std::string_view policy) {
  const auto canon = canonical_policy(policy);
  if (!is_learned(canon)) throw UsageError("train needs a learned policy (mappo or ma-a2c), got " + canon);
  const auto algo = marl::algo_from_name(canon);
  const int episodes = c.episodes > 0 ? c.episodes : c.cfg.episodes;
  prepare_out(c);
  const auto hash = config_hash(c.cfg);
  const std::vector<std::string> cols = {"episode", "mean_reward", "prr", "crlb_range", "mec_delay_ms",
                                         "entropy", "actor_loss", "value_loss"};
  CsvWriter all(c.out / "curves.csv", hash, cat({"seed"}, cols, std::vector<std::string>{"smoothed_reward"}));
  const int window = std::max(1, episodes / 5);
  for (auto seed : c.seeds) {
    const auto dir = c.out / ("seed_" + std::to_string(seed));
    fs::create_directories(dir);
    CsvWriter per(dir / "curves.csv", hash, cols);
    marl::Trainer tr(c.cfg, algo, seed);
    std::vector<marl::CurvePoint> pts;
    tr.train(episodes, [&](const marl::CurvePoint& p) {
      per.row({std::to_string(p.episode), fmt(p.mean_reward), fmt(p.prr), fmt(p.crlb_range_m), fmt(p.mec_delay_ms),
               fmt(p.entropy), fmt(p.actor_loss), fmt(p.value_loss)});
      per.stream().flush();
      pts.push_back(p);
    });
    tr.nets().save(dir / "checkpoint");
    std::vector<double> r;
    for (const auto& p : pts) r.push_back(p.mean_reward);
    const auto sm = smooth(r, window);
    for (std::size_t k = 0; k < pts.size(); ++k) {
      const auto& p = pts[k];
      all.row({std::to_string(seed), std::to_string(p.episode), fmt(p.mean_reward), fmt(p.prr), fmt(p.crlb_range_m),
               fmt(p.mec_delay_ms), fmt(p.entropy), fmt(p.actor_loss), fmt(p.value_loss), fmt(sm[k])});
    }
  }
  all.stream().flush();
  plot_file(c.out / "curves.csv",
            {PlotKind::line, "episode", "smoothed_reward", "seed", "", canon + " training reward"},
            c.out / "curves.svg");
}

std::vector<double> smooth(const std::vector<double>& x, int window) {
  if (window < 1) throw std::invalid_argument("smooth: window must be positive");
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sum += x[k];
    if (k >= static_cast<std::size_t>(window)) sum -= x[k - window];
    out[k] = sum / static_cast<double>(std::min<std::size_t>(k + 1, window));
  }
  return out;
}

void run_eval(const Common& c, std::string_view policy, const fs::path& checkpoint, bool traces) {
  const auto canon = canonical_policy(policy);
  const int episodes = c.episodes > 0 ? c.episodes : 20;
  prepare_out(c);
  const auto hash = config_hash(c.cfg);
  CsvWriter per_seed(c.out / "kpi_seeds.csv", hash, kpi_header({"policy", "seed"}));
  CsvWriter prr(c.out / "prr_distance.csv", hash, {"policy", "seed", "distance_m", "prr_pct"});
  std::vector<KpiValues> all;
  for (auto seed : c.seeds) {
    auto pol = make_policy(canon, c.cfg, seed, checkpoint);
    RunTraces tr;
    std::ofstream comm_f, comp_f, mac_f, log_f;
    if (traces) {
      const auto dir = c.out / ("seed_" + std::to_string(seed));
      fs::create_directories(dir);
      comm_f.open(dir / "comm.csv", std::ios::binary);
      comp_f.open(dir / "compute.csv", std::ios::binary);
      mac_f.open(dir / "mac.csv", std::ios::binary);
      log_f.open(dir / "epochs.jsonl", std::ios::binary);
      write_csv_preamble(comm_f, hash, comm::kMetricsHeader);
      write_csv_preamble(comp_f, hash, compute::kComputeHeader);
      write_csv_preamble(mac_f, hash, mac::kMacTraceHeader);
      tr = {&comm_f, &comp_f, &mac_f, &log_f};
    }
    const auto acc = run_episodes(c.cfg, *pol, seed, episodes, 0, tr);
    const auto v = kpis(acc, c.cfg);
    all.push_back(v);
    per_seed.row(cat({canon, std::to_string(seed)}, kpi_cells(v)));
    for (const auto& b : acc.prr_by_distance.table())
      prr.row({canon, std::to_string(seed), fmt(b.midpoint_m), fmt(100.0 * b.prr)});
  }
  CsvWriter sum(c.out / "kpi.csv", hash, {"policy", "metric", "mean", "ci95", "n_seeds"});
  for (int k = 0; k < kNumKpis; ++k) {
    std::vector<double> xs;
    for (const auto& v : all) xs.push_back(v[k]);
    const auto s = summarize(xs);
    sum.row({canon, std::string(kpi_name(k)), fmt(s.mean), fmt(s.ci95), std::to_string(s.n)});
  }
  prr.stream().flush();
  plot_file(c.out / "prr_distance.csv", {PlotKind::line, "distance_m", "prr_pct", "seed", "", canon + " PRR vs distance"},
            c.out / "prr_distance.svg");
}

SweepVar sweep_var_from_name(std::string_view s) {
  if (s == "density") return SweepVar::density;
  if (s == "offloaders") return SweepVar::offloaders;
  if (s == "distance" || s == "distance-bins") return SweepVar::distance;
  if (s == "sensing-range" || s == "sensing_range") return SweepVar::sensing_range;
  throw UsageError("unknown sweep variable '" + std::string(s) +
                   "' (expected density, offloaders, distance or sensing-range)");
}

std::string_view sweep_var_name(SweepVar v) {
  switch (v) {
    case SweepVar::density: return "density";
    case SweepVar::offloaders: return "offloaders";
    case SweepVar::distance: return "distance";
    case SweepVar::sensing_range: return "sensing_range";
  }
  return "?";
}

namespace {
std::string_view sweep_axis_column(SweepVar v) {
  switch (v) {
    case SweepVar::density: return "density_veh_per_km";
    case SweepVar::offloaders: return "offloaders";
    case SweepVar::distance: return "distance_m";
    case SweepVar::sensing_range: return "sensing_range_m";
  }
  return "value";
}

const std::vector<double> kDensities = {20, 40, 60, 80, 100};
const std::vector<double> kOffloaders = {5, 10, 15, 20, 25};
}  // namespace

Recipe recipe(std::string_view name) {
  if (name == "fig4") return {"fig4", SweepVar::density, kDensities, kCrlbRange};
  if (name == "fig5") return {"fig5", SweepVar::density, kDensities, kCrlbVel};
  if (name == "fig6") return {"fig6", SweepVar::sensing_range, {50, 100, 150, 200, 250}, kCrlbRange};
  if (name == "fig7") return {"fig7", SweepVar::distance, {}, kPrr};
  if (name == "fig8") return {"fig8", SweepVar::density, kDensities, kThroughput};
  if (name == "fig9") return {"fig9", SweepVar::density, kDensities, kCbr};
  if (name == "fig10") return {"fig10", SweepVar::density, kDensities, kMaxDistance};
  if (name == "fig11") return {"fig11", SweepVar::offloaders, kOffloaders, kLatency};
  if (name == "fig12") return {"fig12", SweepVar::offloaders, kOffloaders, kMecDelay};
  if (name == "fig13") return {"fig13", SweepVar::offloaders, kOffloaders, kEnergy};
  if (name == "fig3") throw UsageError("fig3 is the training-curve recipe: use `iscc train`");
  if (name == "table4") throw UsageError("table4 is the KPI grid: use `iscc table`");
  throw UsageError("unknown recipe '" + std::string(name) + "'");
}

std::vector<std::string_view> recipe_names() {
  return {"fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10", "fig11", "fig12", "fig13", "table4"};
}

void run_sweep(const Common& c, std::string_view policy, const fs::path& checkpoint, SweepVar var,
               const std::vector<double>& values, const std::vector<int>& plot_kpis) {
  const auto canon = canonical_policy(policy);
  const int episodes = c.episodes > 0 ? c.episodes : 20;
  if (var != SweepVar::distance && values.empty()) throw UsageError("sweep needs --values");
  for (double v : values) {
    if (!std::isfinite(v) || v < 0) throw UsageError("invalid sweep value " + fmt(v));
    if (var == SweepVar::offloaders && v != std::floor(v)) throw UsageError("offloader counts must be integers");
    if (var == SweepVar::offloaders && v > c.cfg.vehicle_count())
      throw UsageError("invalid sweep value " + fmt(v) + ": more offloaders than vehicles (" +
                       std::to_string(c.cfg.vehicle_count()) + ")");
  }
  // configs per value up front so a bad value fails before any run
  std::vector<SimConfig> cfgs;
  for (double v : values) {
    SimConfig cfg = c.cfg;
    try {
      if (var == SweepVar::density) {
        cfg.density_veh_per_km = v;
        cfg.n_vehicles = 0;
        finalize_config(cfg);
      } else if (var == SweepVar::sensing_range) {
        cfg.r_sens_m = v;
        finalize_config(cfg);
      }
    } catch (const ConfigError& e) {
      throw UsageError("invalid sweep value " + fmt(v) + ": " + e.what());
    }
    cfgs.push_back(cfg);
  }
  prepare_out(c);
  const auto hash = config_hash(c.cfg);
  const std::string axis(sweep_axis_column(var));
  std::vector<int> metrics = plot_kpis;

  if (var == SweepVar::distance) {
    CsvWriter rows(c.out / "sweep.csv", hash, {"policy", "seed", axis, "prr_pct"});
    std::map<double, std::vector<double>> by_bin;
    for (auto seed : c.seeds) {
      auto pol = make_policy(canon, c.cfg, seed, checkpoint);
      const auto acc = run_episodes(c.cfg, *pol, seed, episodes);
      for (const auto& b : acc.prr_by_distance.table()) {
        if (!values.empty() && std::find(values.begin(), values.end(), b.midpoint_m) == values.end()) continue;
        rows.row({canon, std::to_string(seed), fmt(b.midpoint_m), fmt(100.0 * b.prr)});
        by_bin[b.midpoint_m].push_back(100.0 * b.prr);
      }
    }
    CsvWriter sum(c.out / "sweep_summary.csv", hash, {"policy", axis, "n_seeds", "prr_pct_mean", "prr_pct_ci95"});
    for (auto& [d, xs] : by_bin) {
      xs.resize(c.seeds.size(), kNaN);  // bins a seed never populated count as missing
      const auto s = summarize(xs);
      sum.row({canon, fmt(d), std::to_string(s.n), fmt(s.mean), fmt(s.ci95)});
    }
    sum.stream().flush();
    plot_file(c.out / "sweep_summary.csv",
              {PlotKind::line, axis, "prr_pct_mean", "policy", "prr_pct_ci95", canon + " PRR vs distance"},
              c.out / "sweep_prr_pct.svg");
    return;
  }

  CsvWriter rows(c.out / "sweep.csv", hash, kpi_header({"policy", "seed", axis}));
  std::vector<std::vector<KpiValues>> res(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    for (auto seed : c.seeds) {
      auto pol = make_policy(canon, cfgs[i], seed, checkpoint);
      const int forced = var == SweepVar::offloaders ? static_cast<int>(values[i]) : 0;
      const auto v = kpis(run_episodes(cfgs[i], *pol, seed, episodes, forced), cfgs[i]);
      res[i].push_back(v);
      rows.row(cat({canon, std::to_string(seed), fmt(values[i])}, kpi_cells(v)));
    }
  std::vector<std::string> h = {"policy", axis, "n_seeds"};
  for (int k = 0; k < kNumKpis; ++k) {
    h.push_back(std::string(kpi_name(k)) + "_mean");
    h.push_back(std::string(kpi_name(k)) + "_ci95");
  }
  CsvWriter sum(c.out / "sweep_summary.csv", hash, h);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::vector<std::string> cells = {canon, fmt(values[i]), std::to_string(c.seeds.size())};
    for (int k = 0; k < kNumKpis; ++k) {
      std::vector<double> xs;
      for (const auto& v : res[i]) xs.push_back(v[k]);
      const auto s = summarize(xs);
      cells.push_back(fmt(s.mean));
      cells.push_back(fmt(s.ci95));
    }
    sum.row(cells);
  }
  sum.stream().flush();
  for (int k : metrics) {
    const std::string m(kpi_name(k));
    plot_file(c.out / "sweep_summary.csv",
              {PlotKind::line, axis, m + "_mean", "policy", m + "_ci95", canon + ": " + std::string(kpi_label(k))},
              c.out / ("sweep_" + m + ".svg"));
  }
}

void run_table(const Common& c, const std::vector<std::string>& policies, const fs::path& checkpoint, int offloaders) {
  if (policies.empty()) throw UsageError("table needs at least one policy");
  std::vector<std::string> canon;
  for (const auto& p : policies) canon.push_back(canonical_policy(p));
  if (offloaders < 0 || offloaders > c.cfg.vehicle_count())
    throw UsageError("--offloaders must lie in [0, " + std::to_string(c.cfg.vehicle_count()) + "]");
  const int episodes = c.episodes > 0 ? c.episodes : 20;
  prepare_out(c);
  const auto hash = config_hash(c.cfg);

  std::vector<std::string> h = {"policy", "n_seeds"};
  for (int k = 0; k < kNumKpis; ++k) {
    h.push_back(std::string(kpi_name(k)) + "_mean");
    h.push_back(std::string(kpi_name(k)) + "_ci95");
  }
  CsvWriter seeds_csv(c.out / "table_seeds.csv", hash, kpi_header({"policy", "seed"}));
  CsvWriter csv(c.out / "table.csv", hash, h);
  std::vector<std::array<Summary, kNumKpis>> grid;
  for (const auto& p : canon) {
    std::vector<KpiValues> vals;
    for (auto seed : c.seeds) {
      auto pol = make_policy(p, c.cfg, seed, checkpoint);
      auto v = kpis(run_episodes(c.cfg, *pol, seed, episodes), c.cfg);
      if (offloaders > 0) {
        auto pol2 = make_policy(p, c.cfg, seed, checkpoint);
        v[kMecDelay] = kpis(run_episodes(c.cfg, *pol2, seed, episodes, offloaders), c.cfg)[kMecDelay];
      }
      vals.push_back(v);
      seeds_csv.row(cat({p, std::to_string(seed)}, kpi_cells(v)));
    }
    std::array<Summary, kNumKpis> row;
    std::vector<std::string> cells = {p, std::to_string(c.seeds.size())};
    for (int k = 0; k < kNumKpis; ++k) {
      std::vector<double> xs;
      for (const auto& v : vals) xs.push_back(v[k]);
      row[k] = summarize(xs);
      cells.push_back(fmt(row[k].mean));
      cells.push_back(fmt(row[k].ci95));
    }
    grid.push_back(row);
    csv.row(cells);
  }

  // aligned text: metrics down, policies across
  std::vector<std::vector<std::string>> cellsT;
  cellsT.push_back({"metric"});
  for (const auto& p : canon) cellsT[0].push_back(p);
  for (int k = 0; k < kNumKpis; ++k) {
    std::vector<std::string> r = {std::string(kpi_label(k))};
    for (const auto& g : grid) {
      char buf[64];
      if (std::isnan(g[k].ci95))
        std::snprintf(buf, sizeof buf, "%.4g", g[k].mean);
      else
        std::snprintf(buf, sizeof buf, "%.4g +/- %.2g", g[k].mean, g[k].ci95);
      r.push_back(buf);
    }
    cellsT.push_back(r);
  }
  std::vector<std::size_t> w(cellsT[0].size(), 0);
  for (const auto& r : cellsT)
    for (std::size_t j = 0; j < r.size(); ++j) w[j] = std::max(w[j], r[j].size());
  std::ofstream txt(c.out / "table.txt", std::ios::binary);
  txt << "# config_hash=" << hash << ", seeds=" << c.seeds.size() << ", episodes=" << episodes
      << ", mec delay with " << offloaders << " forced offloaders\n";
  for (const auto& r : cellsT) {
    for (std::size_t j = 0; j < r.size(); ++j) {
      txt << r[j];
      if (j + 1 < r.size()) txt << std::string(w[j] - r[j].size() + 2, ' ');
    }
    txt << '\n';
  }
}

}  // namespace iscc::eval
