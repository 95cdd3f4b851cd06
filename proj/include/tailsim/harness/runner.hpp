#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "tailsim/harness/config.hpp"

namespace tailsim {

struct RunnerOptions {
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;  // overrides the configured seed list
    unsigned jobs = 1;
    Scale scale = Scale::Desk;
    bool use_sweep_axes = false;  // false for `run`, true for `sweep`
    bool dump_schedule = false;
    std::ostream* log = nullptr;
};

struct RunRecord {
    std::string run_id;
    SimulationConfig config;
    RunMetrics metrics;
    RunSummary summary;
    bool invariants_clean = true;
};

class RunFailure : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Executes every point of the experiment and writes, under out_dir:
///   config.ini, manifest.json, summary.csv, summary_mean.csv, and
///   runs/<run_id>/{metrics,fct,queue_cdf,convergence[,schedule]}.csv.
/// Throws RunFailure naming each failed run after the others finish.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const RunnerOptions& options);

/// Formats a metric the way every CSV table does: "%.9g", "inf", or "NA".
std::string format_metric(std::optional<double> value);

/// Column names of summary.csv after the key columns.
const std::vector<std::string>& summary_metric_columns();

std::string code_version();

struct CompareOptions {
    std::vector<std::filesystem::path> dirs;
    std::optional<SchedulerMode> baseline;  // single-directory mode
};

class CompareError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Seed-averaged ratios and relative deltas between result directories (the
/// first is the base) or, for one directory, between each mode and the
/// baseline mode. Writes CSV with columns
/// dir,mode,load,incast_degree,ecn_threshold_frac,metric,baseline,value,ratio,delta.
void compare_results(const CompareOptions& options, std::ostream& out);

}  // namespace tailsim
