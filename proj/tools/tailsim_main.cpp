#include <fstream>
#include <iostream>

#include "CLI11.hpp"

#include "tailsim/harness/runner.hpp"

namespace {

struct RunArgs {
    std::string config;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned jobs = 1;
    std::string scale = "desk";
    bool dump_schedule = false;
    bool quiet = false;
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
    cmd->add_option("--config", args.config, "experiment file")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", args.out_dir, "output directory")->required();
    cmd->add_option("--seed", args.seed, "run only this seed");
    cmd->add_option("--jobs", args.jobs, "concurrent runs")->check(CLI::PositiveNumber);
    cmd->add_option("--scale", args.scale, "desk (80 hosts) or paper (400 hosts)")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_flag("--dump-schedule", args.dump_schedule, "write each run's flow schedule");
    cmd->add_flag("-q,--quiet", args.quiet, "no per-run progress lines");
}

int execute(const RunArgs& args, bool sweep) {
    tailsim::RunnerOptions opt;
    opt.out_dir = args.out_dir;
    opt.seed = args.seed;
    opt.jobs = args.jobs;
    opt.scale = tailsim::parse_scale(args.scale);
    opt.use_sweep_axes = sweep;
    opt.dump_schedule = args.dump_schedule;
    opt.log = args.quiet ? nullptr : &std::cerr;
    const auto config = tailsim::load_config(args.config);
    const auto records = tailsim::run_experiment(config, opt);
    std::cerr << records.size() << " runs written to " << args.out_dir << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tailsim: packet-level leaf-spine fabric simulator"};
    app.require_subcommand(1);

    RunArgs run_args;
    auto* run = app.add_subcommand("run", "run the base configuration for each seed");
    add_run_options(run, run_args);

    RunArgs sweep_args;
    auto* sweep = app.add_subcommand("sweep", "run the cartesian product of the [sweep] axes for each seed");
    add_run_options(sweep, sweep_args);

    std::vector<std::string> dirs;
    std::string baseline;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "ratios and deltas between result directories");
    compare->add_option("dirs", dirs, "result directories; the first is the base")->required();
    compare->add_option("--baseline", baseline, "baseline mode when comparing within one directory");
    compare->add_option("--out", compare_out, "output CSV (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return execute(run_args, false);
        if (*sweep) return execute(sweep_args, true);
        tailsim::CompareOptions opt;
        for (const auto& d : dirs) opt.dirs.emplace_back(d);
        if (!baseline.empty()) {
            opt.baseline = tailsim::parse_scheduler_mode(baseline);
            if (!opt.baseline) {
                std::cerr << "error: unknown mode '" << baseline << "'\n";
                return 2;
            }
        }
        if (compare_out.empty()) {
            tailsim::compare_results(opt, std::cout);
        } else {
            std::ofstream out(compare_out);
            if (!out) {
                std::cerr << "error: cannot write " << compare_out << '\n';
                return 1;
            }
            tailsim::compare_results(opt, out);
        }
        return 0;
    } catch (const tailsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
