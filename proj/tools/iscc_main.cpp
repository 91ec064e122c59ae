#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/eval.hpp"

namespace {

using namespace iscc;

struct Args {
  std::string config, policy, seeds = "1,2,3", out, checkpoint, var, values, recipe, metrics;
  std::vector<std::string> sets;
  int episodes = 0;
  bool traces = false;
  int offloaders = 25;
  // plot
  std::string in, kind = "line", x, y, series, err, title;
};

void add_common(CLI::App* sub, Args& a, bool with_policy) {
  sub->add_option("--config", a.config, "TOML or JSON config file (defaults built in)");
  sub->add_option("--set", a.sets, "config override section.key=value (repeatable)");
  if (with_policy) sub->add_option("--policy", a.policy, "mappo, ma-a2c, scg, ccg or random")->required();
  sub->add_option("--seeds", a.seeds, "seed list, e.g. 1,2,3 or 1-3");
  sub->add_option("--out", a.out, "output directory")->required();
  sub->add_option("--episodes", a.episodes, "episodes per seed (train: config value, others: 20)");
}

eval::Common common(const Args& a) {
  eval::Common c;
  if (!a.config.empty()) {
    c.cfg = load_config(a.config);
  } else {
    finalize_config(c.cfg);
  }
  for (const auto& s : a.sets) eval::apply_override(c.cfg, s);
  c.seeds = eval::parse_seeds(a.seeds);
  c.out = a.out;
  if (a.episodes < 0) throw eval::UsageError("--episodes must be positive");
  c.episodes = a.episodes;
  return c;
}

std::vector<int> metric_list(const std::string& s, int fallback) {
  if (s.empty()) return {fallback};
  std::vector<int> out;
  for (const auto& m : eval::split_list(s)) {
    const auto k = eval::kpi_from_name(m);
    if (!k) throw eval::UsageError("unknown metric '" + m + "'");
    out.push_back(*k);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"NR-V2X Mode-2 ISCC simulator: training, evaluation and figure sweeps"};
  app.require_subcommand(1);
  Args a;

  auto* train = app.add_subcommand("train", "train mappo or ma-a2c, one learner per seed");
  add_common(train, a, true);

  auto* ev = app.add_subcommand("eval", "evaluate a policy and write KPI tables");
  add_common(ev, a, true);
  ev->add_option("--checkpoint", a.checkpoint, "checkpoint dir (or a train --out dir) for learned policies");
  ev->add_flag("--traces", a.traces, "write per-slot comm/compute/MAC traces");

  auto* sweep = app.add_subcommand("sweep", "sweep density, offloaders, distance bins or sensing range");
  add_common(sweep, a, true);
  sweep->add_option("--checkpoint", a.checkpoint, "checkpoint dir for learned policies");
  sweep->add_option("--recipe", a.recipe, "named figure recipe: fig4 ... fig13");
  sweep->add_option("--var", a.var, "density | offloaders | distance | sensing-range");
  sweep->add_option("--values", a.values, "comma-separated sweep values");
  sweep->add_option("--metrics", a.metrics, "KPI columns to plot (comma-separated)");

  auto* table = app.add_subcommand("table", "KPI grid across policies at the configured operating point");
  add_common(table, a, false);
  table->add_option("--policy", a.policy, "comma-separated policies")->default_val("scg,ccg");
  table->add_option("--checkpoint", a.checkpoint, "checkpoint dir for learned policies");
  table->add_option("--offloaders", a.offloaders, "forced offloaders for the MEC-delay column");

  auto* plot = app.add_subcommand("plot", "render a CSV as an SVG chart");
  plot->add_option("--in", a.in, "input CSV")->required();
  plot->add_option("--out", a.out, "output SVG")->required();
  plot->add_option("--kind", a.kind, "line or bar");
  plot->add_option("-x,--x", a.x, "x column")->required();
  plot->add_option("-y,--y", a.y, "y column")->required();
  plot->add_option("--series", a.series, "column naming the series");
  plot->add_option("--err", a.err, "column with error-bar half widths");
  plot->add_option("--title", a.title, "chart title");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train) {
      eval::run_train(common(a), a.policy);
    } else if (*ev) {
      eval::run_eval(common(a), a.policy, a.checkpoint, a.traces);
    } else if (*sweep) {
      auto c = common(a);
      if (!a.recipe.empty() && (!a.var.empty() || !a.values.empty()))
        throw eval::UsageError("--recipe replaces --var and --values");
      eval::SweepVar var;
      std::vector<double> values;
      int metric = eval::kReward;
      if (!a.recipe.empty()) {
        const auto r = eval::recipe(a.recipe);
        var = r.var;
        values = r.values;
        metric = r.kpi;
      } else {
        if (a.var.empty()) throw eval::UsageError("sweep needs --var or --recipe");
        var = eval::sweep_var_from_name(a.var);
        values = eval::parse_values(a.values);
      }
      eval::run_sweep(c, a.policy, a.checkpoint, var, values, metric_list(a.metrics, metric));
    } else if (*table) {
      eval::run_table(common(a), eval::split_list(a.policy), a.checkpoint, a.offloaders);
    } else if (*plot) {
      eval::plot_file(a.in, {eval::plot_kind_from_name(a.kind), a.x, a.y, a.series, a.err, a.title}, a.out);
    }
  } catch (const eval::UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "failed: %s\n", e.what());
    return 1;
  }
  return 0;
}
