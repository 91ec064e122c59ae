#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "iscc/config.hpp"
#include "iscc/env.hpp"
#include "iscc/policy.hpp"

namespace iscc::eval {

// Bad arguments or inputs an experiment cannot run with. The CLI maps it to exit code 2.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// ---- config overrides and argument parsing

// "section.key=value" or "key=value" when the key is unique across sections. The value is read
// as a JSON literal, falling back to a plain string.
void apply_override(SimConfig& cfg, std::string_view assignment);

// "1,2,3", "1-3" or a mix. Throws UsageError when empty or malformed.
std::vector<std::uint64_t> parse_seeds(std::string_view s);
std::vector<double> parse_values(std::string_view s);
std::vector<std::string> split_list(std::string_view s);

// ---- KPIs

inline constexpr int kNumKpis = 10;
enum Kpi : int {
  kCrlbRange = 0,  // mean range root-CRLB over detected-target reports, m
  kCrlbVel,        // m/s
  kPrr,            // % at the PRR reporting distance
  kThroughput,     // mean effective rate per transmission, Mbps
  kCbr,            // %
  kMaxDistance,    // m, largest distance with PRR >= target
  kLatency,        // mean end-to-end latency of the communication task, ms
  kMecDelay,       // ms
  kEnergy,         // mJ per vehicle-slot
  kReward,         // mean epoch reward
};
std::string_view kpi_name(int k);   // column name, unit as suffix
std::string_view kpi_label(int k);  // axis label with unit
std::optional<int> kpi_from_name(std::string_view name);

inline constexpr double kPrrReportDistanceM = 80.0;

using KpiValues = std::array<double, kNumKpis>;
// NaN where a metric has no samples (no detections, no transmissions in the bin).
KpiValues kpis(const env::KpiAccumulator& acc, const SimConfig& cfg);

struct Summary {
  double mean = 0.0;
  double ci95 = 0.0;  // Student-t half width; NaN for fewer than two samples
  int n = 0;
};
// NaN samples are skipped.
Summary summarize(const std::vector<double>& samples);

// ---- policies

// scg, ccg, random, or a learned policy (mappo, ma-a2c, a2c) restored from a checkpoint. The
// checkpoint path may hold manifest.json directly or seed_<s>/checkpoint/manifest.json.
std::unique_ptr<JointPolicy> make_policy(std::string_view name, const SimConfig& cfg, std::uint64_t seed,
                                         const std::filesystem::path& checkpoint = {});
bool is_learned(std::string_view name);
// Canonical policy name; throws UsageError outside the closed set.
std::string canonical_policy(std::string_view name);

// Trailing mean over the last `window` points (fewer at the start).
std::vector<double> smooth(const std::vector<double>& x, int window);

// ---- runs

struct RunTraces {
  std::ostream* comm_csv = nullptr;
  std::ostream* compute_csv = nullptr;
  std::ostream* mac_trace = nullptr;
  std::ostream* epoch_log = nullptr;
};

// Evaluation episodes of one policy under one seed. Episode seeds never coincide with training's.
env::KpiAccumulator run_episodes(const SimConfig& cfg, JointPolicy& policy, std::uint64_t seed, int episodes,
                                 int forced_offloaders = 0, const RunTraces& traces = {});

// ---- CSV

std::string fmt(double v);  // shortest round-trip text, "nan" for NaN

// Opens a CSV and writes the config-hash comment line and the header row.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& config_hash, const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  std::ostream& stream();

 private:
  std::unique_ptr<std::ofstream> out_;
  std::size_t width_;
};
void write_csv_preamble(std::ostream& out, const std::string& config_hash, std::string_view header);

struct CsvTable {
  std::string config_hash;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  int column(std::string_view name) const;  // throws UsageError naming the column
  std::vector<double> numbers(int col) const;
};
// Comment lines start with '#'. Throws UsageError for ragged rows or a missing file.
CsvTable read_csv(const std::filesystem::path& path);

// ---- plotting

enum class PlotKind { line, bar };
PlotKind plot_kind_from_name(std::string_view s);

struct PlotSpec {
  PlotKind kind = PlotKind::line;
  std::string x, y, series, err;  // series and err are optional column names
  std::string title;
};
// One polyline (or bar group) per series; a single-point series becomes a marker.
std::string render_svg(const CsvTable& t, const PlotSpec& spec);
void plot_file(const std::filesystem::path& csv, const PlotSpec& spec, const std::filesystem::path& svg);

// ---- experiments

struct Common {
  SimConfig cfg;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path out;
  int episodes = 0;  // 0: subcommand default
};

// Trains one learner per seed: seed_<s>/curves.csv, seed_<s>/checkpoint/, curves.csv, curves.svg.
void run_train(const Common& c, std::string_view policy);

// KPI rows per seed, their summary and the PRR-by-distance table. Per-slot traces are written
// under seed_<s>/ when requested.
void run_eval(const Common& c, std::string_view policy, const std::filesystem::path& checkpoint, bool traces);

enum class SweepVar { density, offloaders, distance, sensing_range };
SweepVar sweep_var_from_name(std::string_view s);
std::string_view sweep_var_name(SweepVar v);

struct Recipe {
  std::string_view name;
  SweepVar var;
  std::vector<double> values;
  int kpi;
};
// Named figure recipes for the sweep subcommand. Throws UsageError for unknown names.
Recipe recipe(std::string_view name);
std::vector<std::string_view> recipe_names();

// sweep.csv (one row per value and seed), sweep_summary.csv and one SVG per plotted metric.
void run_sweep(const Common& c, std::string_view policy, const std::filesystem::path& checkpoint, SweepVar var,
               const std::vector<double>& values, const std::vector<int>& plot_kpis);

// KPI grid for each policy at the configured operating point. The MEC-delay column comes from a
// separate run with `offloaders` forced offloaders. Writes table.csv and table.txt.
void run_table(const Common& c, const std::vector<std::string>& policies, const std::filesystem::path& checkpoint,
               int offloaders);

}  // namespace iscc::eval
