#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tailsim/harness/simulation.hpp"

namespace tailsim {

/// Parse or validation failure, tagged with the 1-based line it refers to.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::size_t line, const std::string& message)
        : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

struct SweepAxes {
    std::vector<double> load;
    std::vector<SchedulerMode> mode;
    std::vector<std::uint32_t> incast_degree;
    std::vector<double> ecn_threshold_frac;
};

/// A declarative experiment: a base run configuration plus optional sweep
/// axes and the seeds to run every point with.
struct ExperimentConfig {
    std::string name = "experiment";
    std::string description;
    SimulationConfig base;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    SweepAxes sweep;
    std::string source_text;
};

/// INI-style text: [section] headers, key = value lines, '#' or ';' comments.
/// Sections: experiment, topology, workload, switch, transport, telemetry,
/// sweep. Sizes in *_kb keys are decimal kilobytes (1 KB = 1000 bytes).
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

enum class Scale : std::uint8_t { Desk, Full };
Scale parse_scale(std::string_view text);
/// Full scale ("paper" on the command line): 20 leaves x 10 spines x 20 hosts per leaf (400 hosts).
void apply_scale(ExperimentConfig& config, Scale scale);

struct SweepPoint {
    SimulationConfig config;
    std::size_t index = 0;
};

/// Cartesian product of the sweep axes (when `use_axes`) times the seeds.
/// Axis order: mode, load, incast_degree, ecn_threshold_frac, then seed.
std::vector<SweepPoint> expand_points(const ExperimentConfig& config, bool use_axes);

}  // namespace tailsim
