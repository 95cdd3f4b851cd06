#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "tailsim/harness/config.hpp"
#include "tailsim/harness/runner.hpp"

namespace tailsim {
namespace {

namespace fs = std::filesystem;

std::size_t error_line(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return 0;
}

std::string error_message(std::string_view text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

const char* kMinimal = R"([topology]
n_leaf = 2
n_spine = 1
hosts_per_leaf = 2

[workload]
load = 0.5

[switch]
mode = slytherin
)";

TEST(ParseConfig, MinimalConfigFillsDefaults) {
    const ExperimentConfig c = parse_config(kMinimal);
    EXPECT_EQ(c.base.topology.n_leaf, 2U);
    EXPECT_EQ(c.base.topology.host_rate_bps, 10'000'000'000ULL);
    EXPECT_EQ(c.base.topology.target_rtt, SimTime::us(80));
    EXPECT_DOUBLE_EQ(c.base.workload.load, 0.5);
    EXPECT_EQ(c.base.workload.basis, LoadBasis::Host);
    EXPECT_EQ(c.base.workload.short_min, 8'000U);
    EXPECT_EQ(c.base.workload.short_max, 32'000U);
    EXPECT_EQ(c.base.workload.long_size, 1'000'000U);
    EXPECT_DOUBLE_EQ(c.base.workload.long_flow_fraction, 0.30);
    EXPECT_FALSE(c.base.workload.incast.has_value());
    EXPECT_EQ(c.base.fabric.mode, SchedulerMode::Slytherin);
    EXPECT_EQ(c.base.fabric.buffer_bytes, 150'000U);
    EXPECT_DOUBLE_EQ(c.base.fabric.ecn_threshold_frac, 0.25);
    EXPECT_DOUBLE_EQ(c.base.transport.g, 1.0 / 16);
    EXPECT_EQ(c.base.transport.mss, 1460U);
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
}

TEST(ParseConfig, EcnThresholdIsFractionOfBuffer) {
    const ExperimentConfig c = parse_config(std::string(kMinimal) + "ecn_threshold_frac = 0.25\n");
    EXPECT_EQ(c.base.fabric.ecn_threshold_bytes(), 37'500U);
    const ExperimentConfig d = parse_config(std::string(kMinimal) + "ecn_threshold_frac = 0.125\nbuffer_kb = 200\n");
    EXPECT_EQ(d.base.fabric.ecn_threshold_bytes(), 25'000U);
}

TEST(ParseConfig, LoadOutOfRange) {
    std::string text = kMinimal;
    text.replace(text.find("load = 0.5"), 10, "load = 1.5");
    EXPECT_EQ(error_line(text), 7U);
    EXPECT_NE(error_message(text).find("load must be in (0,1)"), std::string::npos);
}

TEST(ParseConfig, UnknownKeyAndSection) {
    EXPECT_EQ(error_line(std::string(kMinimal) + "colour = blue\n"), 11U);
    EXPECT_NE(error_message(std::string(kMinimal) + "colour = blue\n").find("unknown key 'colour'"), std::string::npos);
    EXPECT_EQ(error_line(std::string(kMinimal) + "\n[plot]\n"), 12U);
}

TEST(ParseConfig, MissingSectionAndValues) {
    EXPECT_NE(error_message("[topology]\n[workload]\nload = 0.3\n").find("missing required section [switch]"),
              std::string::npos);
    std::string no_mode = kMinimal;
    no_mode.replace(no_mode.find("mode = slytherin"), 16, "");
    EXPECT_NE(error_message(no_mode).find("needs mode"), std::string::npos);
    EXPECT_EQ(error_line(std::string(kMinimal) + "buffer_kb =\n"), 11U);
    EXPECT_EQ(error_line(std::string(kMinimal) + "buffer_kb 100\n"), 11U);
    EXPECT_EQ(error_line(std::string(kMinimal) + "mode = fifo\n"), 11U);
}

TEST(ParseConfig, DuplicatesRejected) {
    EXPECT_EQ(error_line(std::string(kMinimal) + "mode = pias\n"), 11U);
    EXPECT_EQ(error_line(std::string(kMinimal) + "[switch]\n"), 11U);
}

TEST(ParseConfig, IncastDegreeLimitedByHosts) {
    std::string text = std::string(kMinimal);
    text.insert(text.find("[switch]"), "incast_degree = 4\n");
    EXPECT_NE(error_message(text).find("incast_degree exceeds hosts - 1"), std::string::npos);
    text.replace(text.find("incast_degree = 4"), 17, "incast_degree = 3");
    EXPECT_EQ(parse_config(text).base.workload.incast->degree, 3U);
}

TEST(ParseConfig, SweepAxesReplaceRequiredKeys) {
    const ExperimentConfig c = parse_config(
        "[topology]\n[workload]\n[switch]\n[sweep]\nseeds = 7,8\nload = 0.4,0.6\nmode = pias,dctcp_fifo\n");
    EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{7, 8}));
    EXPECT_EQ(c.sweep.mode, (std::vector<SchedulerMode>{SchedulerMode::Pias, SchedulerMode::DctcpFifo}));
    EXPECT_EQ(error_line("[topology]\n[workload]\nload = 0.2\n[switch]\nmode = pias\n[sweep]\nseeds =\n"), 7U);
}

TEST(Scale, FullScaleTopology) {
    ExperimentConfig c = parse_config(kMinimal);
    apply_scale(c, Scale::Full);
    EXPECT_EQ(c.base.topology.n_leaf, 20U);
    EXPECT_EQ(c.base.topology.n_spine, 10U);
    EXPECT_EQ(c.base.topology.hosts_per_leaf, 20U);
    EXPECT_EQ(parse_scale("desk"), Scale::Desk);
    EXPECT_THROW(parse_scale("huge"), std::invalid_argument);
}

TEST(ExpandPoints, CartesianProductTimesSeeds) {
    const ExperimentConfig c = parse_config(
        "[topology]\n[workload]\n[switch]\n[sweep]\nseeds = 1,2\nload = 0.4,0.5,0.6\nmode = dctcp_fifo,slytherin\n");
    const auto sweep = expand_points(c, true);
    ASSERT_EQ(sweep.size(), 12U);
    EXPECT_EQ(sweep[0].config.fabric.mode, SchedulerMode::DctcpFifo);
    EXPECT_EQ(sweep[11].config.fabric.mode, SchedulerMode::Slytherin);
    EXPECT_DOUBLE_EQ(sweep[11].config.workload.load, 0.6);
    EXPECT_EQ(sweep[11].config.seed, 2U);
    for (std::size_t i = 0; i < sweep.size(); ++i) EXPECT_EQ(sweep[i].index, i);
    // `run` uses the first value of each axis.
    EXPECT_EQ(expand_points(c, false).size(), 2U);
}

class RunnerTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("tailsim_harness_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    static ExperimentConfig tiny_sweep() {
        return parse_config(R"([experiment]
name = tiny
description = two modes by three loads

[topology]
n_leaf = 2
n_spine = 1
hosts_per_leaf = 2

[workload]
flows = 40
duration_ms = 100

[switch]

[sweep]
seeds = 1,2
load = 0.4,0.5,0.6
mode = dctcp_fifo,slytherin
)");
    }

    std::vector<RunRecord> run(const ExperimentConfig& c, const fs::path& out, unsigned jobs = 1) {
        RunnerOptions o;
        o.out_dir = out;
        o.use_sweep_axes = true;
        o.jobs = jobs;
        return run_experiment(c, o);
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    static std::vector<std::string> lines(const std::string& text) {
        std::vector<std::string> out;
        std::istringstream in(text);
        for (std::string l; std::getline(in, l);) out.push_back(l);
        return out;
    }

    fs::path root_;
};

TEST_F(RunnerTest, SweepWritesOneSummaryRowPerRun) {
    const auto records = run(tiny_sweep(), root_ / "a", 2);
    ASSERT_EQ(records.size(), 12U);
    const auto summary = lines(slurp(root_ / "a" / "summary.csv"));
    ASSERT_EQ(summary.size(), 13U);
    EXPECT_EQ(summary[0].rfind("run_id,mode,load,incast_degree,ecn_threshold_frac,seed,", 0), 0U);
    for (const auto& r : records) {
        EXPECT_TRUE(r.invariants_clean) << r.run_id;
        EXPECT_EQ(r.metrics.flows_completed, r.metrics.flows) << r.run_id;
        const fs::path dir = root_ / "a" / "runs" / r.run_id;
        EXPECT_TRUE(fs::exists(dir / "metrics.csv"));
        EXPECT_TRUE(fs::exists(dir / "fct.csv"));
        EXPECT_TRUE(fs::exists(dir / "queue_cdf.csv"));
    }
    EXPECT_EQ(lines(slurp(root_ / "a" / "summary_mean.csv")).size(), 7U);
    EXPECT_TRUE(fs::exists(root_ / "a" / "manifest.json"));
    EXPECT_TRUE(fs::exists(root_ / "a" / "config.ini"));
}

TEST_F(RunnerTest, RerunIsByteIdentical) {
    const ExperimentConfig c = tiny_sweep();
    run(c, root_ / "a", 1);
    run(c, root_ / "b", 3);
    for (const auto& entry : fs::recursive_directory_iterator(root_ / "a")) {
        if (!entry.is_regular_file()) continue;
        const fs::path rel = fs::relative(entry.path(), root_ / "a");
        EXPECT_EQ(slurp(entry.path()), slurp(root_ / "b" / rel)) << rel;
    }
    const std::string manifest = slurp(root_ / "a" / "manifest.json");
    EXPECT_NE(manifest.find("\"preset\": \"tiny\""), std::string::npos);
    EXPECT_NE(manifest.find("config_digest"), std::string::npos);
    EXPECT_NE(manifest.find("code_version"), std::string::npos);
}

TEST_F(RunnerTest, CompareIdenticalDirsGivesUnitRatios) {
    const ExperimentConfig c = tiny_sweep();
    run(c, root_ / "a");
    run(c, root_ / "b");
    std::ostringstream out;
    compare_results(CompareOptions{{root_ / "a", root_ / "b"}, std::nullopt}, out);
    const auto rows = lines(out.str());
    ASSERT_GT(rows.size(), 1U);
    EXPECT_EQ(rows[0], "dir,mode,load,incast_degree,ecn_threshold_frac,metric,baseline,value,ratio,delta");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto comma = rows[i].rfind(',');
        const auto prev = rows[i].rfind(',', comma - 1);
        EXPECT_EQ(rows[i].substr(prev + 1, comma - prev - 1), "1") << rows[i];
    }
}

TEST_F(RunnerTest, CompareRejectsAxisMismatch) {
    ExperimentConfig a = tiny_sweep();
    ExperimentConfig b = tiny_sweep();
    b.sweep.load = {0.4, 0.7};
    run(a, root_ / "a");
    run(b, root_ / "b");
    std::ostringstream out;
    EXPECT_THROW(compare_results(CompareOptions{{root_ / "a", root_ / "b"}, std::nullopt}, out), CompareError);
    EXPECT_THROW(compare_results(CompareOptions{{root_ / "a"}, std::nullopt}, out), CompareError);
}

TEST_F(RunnerTest, SingleDirectoryBaselineCompare) {
    run(tiny_sweep(), root_ / "a");
    std::ostringstream out;
    compare_results(CompareOptions{{root_ / "a"}, SchedulerMode::DctcpFifo}, out);
    const auto rows = lines(out.str());
    ASSERT_GT(rows.size(), 1U);
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_NE(rows[i].find(",slytherin,"), std::string::npos);
}

TEST(FormatMetric, Representations) {
    EXPECT_EQ(format_metric(std::nullopt), "NA");
    EXPECT_EQ(format_metric(std::numeric_limits<double>::infinity()), "inf");
    EXPECT_EQ(format_metric(0.1), "0.1");
    EXPECT_EQ(format_metric(123456789.25), "123456789");
}

}  // namespace
}  // namespace tailsim
