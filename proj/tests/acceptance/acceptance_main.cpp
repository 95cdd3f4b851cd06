// Acceptance suite: runs the desk-scale experiment grid once, then prints one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "tailsim/fabric/port_queue.hpp"
#include "tailsim/harness/config.hpp"
#include "tailsim/harness/runner.hpp"
#include "tailsim/harness/simulation.hpp"
#include "tailsim/sim/hash.hpp"
#include "tailsim/sim/rng.hpp"
#include "tailsim/telemetry/stats.hpp"
#include "tailsim/transport/dctcp.hpp"

namespace {

using namespace tailsim;
namespace fs = std::filesystem;

struct Options {
    unsigned jobs = 1;
    std::uint32_t seeds = 5;
    std::uint64_t flows = 10'000;
    bool verbose = false;
};

struct Outcome {
    RunSummary summary;
    RunMetrics metrics;
    PacketCounts packets;
    InvariantReport invariants;
    bool all_flows_complete = false;
};

struct Job {
    std::string group;
    SimulationConfig config;
    Outcome outcome;
    std::string error;
};

SimulationConfig desk_base(const Options& o) {
    SimulationConfig c;
    c.topology.n_leaf = 8;
    c.topology.n_spine = 4;
    c.topology.hosts_per_leaf = 10;
    c.workload.max_flows = o.flows;
    c.workload.duration = SimTime::ms(1000);
    return c;
}

class Grid {
public:
    explicit Grid(const Options& o) : opts_(o) {}

    void add(const std::string& group, const SimulationConfig& c) {
        for (std::uint32_t s = 1; s <= opts_.seeds; ++s) {
            Job j;
            j.group = group;
            j.config = c;
            j.config.seed = s;
            jobs_.push_back(std::move(j));
        }
    }

    void run() {
        std::atomic<std::size_t> next{0};
        std::atomic<std::size_t> done{0};
        std::mutex log_mutex;
        const auto start = std::chrono::steady_clock::now();
        auto worker = [&] {
            for (std::size_t i = next++; i < jobs_.size(); i = next++) {
                Job& j = jobs_[i];
                try {
                    RunResult r = run_simulation(j.config);
                    j.outcome.summary = r.summary;
                    j.outcome.metrics = r.metrics;
                    j.outcome.packets = r.packets;
                    j.outcome.invariants = r.invariants;
                    j.outcome.all_flows_complete = r.metrics.flows_completed == r.metrics.flows;
                } catch (const std::exception& e) {
                    j.error = e.what();
                }
                const std::size_t n = ++done;
                if (opts_.verbose) {
                    const double secs =
                        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                    std::lock_guard lock(log_mutex);
                    std::cerr << "[" << n << "/" << jobs_.size() << " " << static_cast<int>(secs) << "s] "
                              << j.group << " seed " << j.config.seed << (j.error.empty() ? "" : " ERROR ")
                              << j.error << '\n';
                }
            }
        };
        std::vector<std::thread> pool;
        for (unsigned t = 1; t < std::max(1U, opts_.jobs); ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
    }

    std::vector<const Job*> group(const std::string& name) const {
        std::vector<const Job*> out;
        for (const auto& j : jobs_)
            if (j.group == name) out.push_back(&j);
        return out;
    }

    const std::vector<Job>& jobs() const { return jobs_; }

private:
    Options opts_;
    std::vector<Job> jobs_;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Seed mean of one metric; NaN when any seed failed or lacks the metric.
double seed_mean(const Grid& g, const std::string& name, const std::function<std::optional<double>(const Outcome&)>& f) {
    const auto jobs = g.group(name);
    if (jobs.empty()) return kNaN;
    double sum = 0;
    for (const Job* j : jobs) {
        if (!j->error.empty()) return kNaN;
        const auto v = f(j->outcome);
        if (!v) return kNaN;
        sum += *v;
    }
    return sum / static_cast<double>(jobs.size());
}

std::string key(const std::string& tag, SchedulerMode m, double load) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s/%s/%.2f", tag.c_str(), std::string(to_string(m)).c_str(), load);
    return buf;
}

std::string fmt(double v) {
    if (std::isnan(v)) return "NA";
    if (std::isinf(v)) return "inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string fmt_list(const std::vector<double>& v) {
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + fmt(v[i]);
    return out + "]";
}

int failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
    if (!pass) ++failures;
    std::cout << (pass ? "PASS" : "FAIL") << " " << id << " " << name << ": " << detail << std::endl;
}

const std::vector<double> kLoads{0.4, 0.5, 0.6, 0.7, 0.8};

std::vector<double> per_load(const Grid& g, SchedulerMode m, const std::vector<double>& loads,
                             const std::function<std::optional<double>(const Outcome&)>& f) {
    std::vector<double> out;
    for (double l : loads) out.push_back(seed_mean(g, key("load", m, l), f));
    return out;
}

std::optional<double> short_p99(const Outcome& o) { return o.metrics.fct_short_p99_us; }
std::optional<double> short_mean(const Outcome& o) { return o.metrics.fct_short_mean_us; }
std::optional<double> long_tput(const Outcome& o) { return o.metrics.throughput_long_gbps; }
std::optional<double> queue_p99(const Outcome& o) { return o.metrics.queue_p99_bytes; }
std::optional<double> opportunity(const Outcome& o) { return o.metrics.opportunity; }
std::optional<double> reordering(const Outcome& o) { return o.metrics.reordering; }
std::optional<double> convergence(const Outcome& o) { return o.metrics.convergence_rtts; }

bool all_finite(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

// Criterion 10: hash every CSV the runner writes for one experiment.
std::uint64_t output_digest(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        h = fnv1a64(fs::relative(f, dir).generic_string(), h);
        h = fnv1a64(s.str(), h);
    }
    return h;
}

double sorted_rank_oracle(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    std::size_t rank = 1;
    while (static_cast<double>(rank) < p / 100.0 * static_cast<double>(v.size())) ++rank;
    return v[rank - 1];
}

// Criterion 11: the randomized port trace against a reference model.
std::uint64_t randomized_trace_mismatches(SchedulerMode mode, std::uint64_t seed, std::uint64_t& dequeues) {
    PortQueueConfig cfg;
    cfg.mode = mode;
    cfg.capacity_bytes = 150'000;
    cfg.ecn_threshold_bytes = 37'500;
    PortQueueSet q(cfg);
    std::vector<std::vector<PacketId>> ref(queue_count(mode, cfg.sjf_queues));
    std::vector<std::size_t> heads(ref.size(), 0);
    std::map<PacketId, std::uint32_t> sizes;
    std::uint64_t ref_bytes = 0;
    std::uint64_t mismatches = 0;
    Rng rng(seed);
    for (PacketId next = 0; next < 100'000;) {
        if (rng.next_unit() < 0.55) {
            Packet p;
            p.size = static_cast<std::uint32_t>(40 + rng.next_below(1461));
            p.is_ack = rng.next_unit() < 0.1;
            p.ce = rng.next_unit() < 0.2;
            p.pias_level = static_cast<std::uint8_t>(rng.next_below(4));
            p.flow_size = 1 + rng.next_below(2'000'000);
            const std::uint32_t want = classify(mode, p, cfg.sjf_queues);
            const bool fits = ref_bytes + p.size <= cfg.capacity_bytes;
            const auto r = q.enqueue(p, next);
            if (r.accepted != fits || (fits && r.queue != want)) ++mismatches;
            if (fits) {
                ref[want].push_back(next);
                sizes[next] = p.size;
                ref_bytes += p.size;
            }
            ++next;
        } else {
            std::optional<PacketId> want;
            for (std::size_t i = 0; i < ref.size(); ++i) {
                if (heads[i] == ref[i].size()) continue;
                want = ref[i][heads[i]++];
                ref_bytes -= sizes[*want];
                break;
            }
            if (q.dequeue() != want) ++mismatches;
            if (want) ++dequeues;
        }
        if (q.occupancy() != ref_bytes) ++mismatches;
    }
    return mismatches;
}

}  // namespace

int main(int argc, char** argv) {
    Options opts;
    CLI::App app{"tailsim acceptance suite"};
    app.add_option("--jobs", opts.jobs, "Concurrent runs")->check(CLI::PositiveNumber);
    app.add_option("--seeds", opts.seeds, "Seeds per experiment point")->check(CLI::PositiveNumber);
    app.add_option("--flows", opts.flows, "Background flows per run")->check(CLI::PositiveNumber);
    app.add_flag("-v,--verbose", opts.verbose, "Log each finished run to stderr");
    CLI11_PARSE(app, argc, argv);

    const SchedulerMode kFifo = SchedulerMode::DctcpFifo;
    const SchedulerMode kSly = SchedulerMode::Slytherin;
    const SchedulerMode kPias = SchedulerMode::Pias;

    Grid grid(opts);
    const SimulationConfig base = desk_base(opts);

    // Load sweep for criteria 1-5, 9 and 12-14.
    for (SchedulerMode m : {kFifo, kSly, kPias}) {
        for (double load : kLoads) {
            SimulationConfig c = base;
            c.fabric.mode = m;
            c.workload.load = load;
            grid.add(key("load", m, load), c);
        }
    }
    {
        SimulationConfig c = base;
        c.fabric.mode = kSly;
        c.workload.load = 0.9;
        grid.add(key("load", kSly, 0.9), c);
    }
    // Incast degrees at 60% load (criterion 7).
    const std::vector<std::uint32_t> degrees{24, 32, 40};
    for (SchedulerMode m : {kSly, kPias}) {
        for (std::uint32_t d : degrees) {
            SimulationConfig c = base;
            c.fabric.mode = m;
            c.workload.load = 0.6;
            c.workload.incast = IncastConfig{d, SimTime::ms(1), 0};
            grid.add(key("incast" + std::to_string(d), m, 0.6), c);
        }
    }
    // ECN threshold sensitivity at 80% load (criterion 8); 25% is the load sweep.
    for (double k : {0.125, 0.375}) {
        SimulationConfig c = base;
        c.fabric.mode = kSly;
        c.fabric.ecn_threshold_frac = k;
        c.workload.load = 0.8;
        grid.add(key("k" + fmt(k), kSly, 0.8), c);
    }
    // Convergence scenario (criterion 6).
    for (SchedulerMode m : {kFifo, kSly}) {
        SimulationConfig c;
        c.pattern = TrafficPattern::Convergence;
        c.topology.n_leaf = 2;
        c.topology.n_spine = 1;
        c.topology.hosts_per_leaf = 2;
        c.fabric.mode = m;
        grid.add(key("convergence", m, 0), c);
    }
    // Drop-free FIFO fabric (criterion 15): a buffer no burst can fill, K kept at 37.5 KB.
    {
        SimulationConfig c = base;
        c.fabric.mode = kFifo;
        c.fabric.buffer_bytes = 1'000'000'000;
        c.fabric.ecn_threshold_frac = 37'500.0 / 1e9;
        c.telemetry.sample_queues = false;
        c.workload.load = 0.6;
        c.workload.max_flows = std::min<std::uint64_t>(opts.flows, 3'000);
        grid.add("dropfree", c);
    }
    // Audited runs for criterion 11: every dequeue shadow-checked.
    for (SchedulerMode m : {kFifo, kSly, kPias, SchedulerMode::SjfIdeal}) {
        SimulationConfig c = base;
        c.fabric.mode = m;
        c.workload.load = 0.6;
        c.workload.max_flows = std::min<std::uint64_t>(opts.flows, 2'000);
        c.telemetry.audit = true;
        grid.add(key("audit", m, 0.6), c);
    }

    const auto t0 = std::chrono::steady_clock::now();
    grid.run();

    std::size_t errors = 0;
    for (const auto& j : grid.jobs()) {
        if (!j.error.empty()) {
            ++errors;
            std::cerr << "run " << j.group << " seed " << j.config.seed << " failed: " << j.error << '\n';
        }
    }

    // 1. Opportunity trend.
    {
        std::vector<double> loads = kLoads;
        loads.push_back(0.9);
        const auto opp = per_load(grid, kSly, loads, opportunity);
        bool monotone = all_finite(opp);
        for (std::size_t i = 1; monotone && i < opp.size(); ++i) monotone = opp[i] >= opp[i - 1];
        const bool pass = monotone && opp[0] < 0.10 && opp[4] > 0.25;
        report(1, "opportunity trend", pass,
               "slytherin multi-marked tail fraction at 40..90% = " + fmt_list(opp) + " (need nondecreasing, <0.10 at 40%, >0.25 at 80%)");
    }

    const auto p99_fifo = per_load(grid, kFifo, kLoads, short_p99);
    const auto p99_sly = per_load(grid, kSly, kLoads, short_p99);
    const auto p99_pias = per_load(grid, kPias, kLoads, short_p99);

    // 2. Tail FCT.
    {
        double gain = 0;
        int beats_pias = 0;
        for (std::size_t i = 0; i < kLoads.size(); ++i) {
            gain += 1.0 - p99_sly[i] / p99_fifo[i];
            if (p99_sly[i] <= p99_pias[i]) ++beats_pias;
        }
        gain /= static_cast<double>(kLoads.size());
        const bool pass = all_finite(p99_sly) && all_finite(p99_fifo) && all_finite(p99_pias) && gain >= 0.10 &&
                          beats_pias >= 4;
        report(2, "tail FCT", pass,
               "p99 us dctcp=" + fmt_list(p99_fifo) + " slytherin=" + fmt_list(p99_sly) + " pias=" + fmt_list(p99_pias) +
                   "; mean reduction vs dctcp " + fmt(gain) + " (need >=0.10), slytherin<=pias at " +
                   std::to_string(beats_pias) + "/5 (need >=4)");
    }

    // 3. Average FCT trade-off.
    {
        const auto mean_sly = per_load(grid, kSly, kLoads, short_mean);
        const auto mean_pias = per_load(grid, kPias, kLoads, short_mean);
        int pias_wins = 0;
        for (std::size_t i = 0; i < kLoads.size(); ++i)
            if (mean_pias[i] <= mean_sly[i]) ++pias_wins;
        report(3, "average FCT trade-off", all_finite(mean_sly) && all_finite(mean_pias) && pias_wins >= 3,
               "mean us slytherin=" + fmt_list(mean_sly) + " pias=" + fmt_list(mean_pias) + "; pias<=slytherin at " +
                   std::to_string(pias_wins) + "/5 (need >=3)");
    }

    // 4. Long-flow throughput.
    {
        const auto t_sly = per_load(grid, kSly, kLoads, long_tput);
        const auto t_pias = per_load(grid, kPias, kLoads, long_tput);
        bool every = all_finite(t_sly) && all_finite(t_pias);
        double gain = 0;
        for (std::size_t i = 0; i < kLoads.size(); ++i) {
            every = every && t_sly[i] >= t_pias[i];
            gain += t_sly[i] / t_pias[i] - 1.0;
        }
        gain /= static_cast<double>(kLoads.size());
        report(4, "long-flow throughput", every && gain >= 0.10,
               "Gb/s slytherin=" + fmt_list(t_sly) + " pias=" + fmt_list(t_pias) + "; mean gain " + fmt(gain) +
                   " (need slytherin>=pias everywhere and gain>=0.10)");
    }

    // 5. Queue length.
    {
        const auto q_fifo = per_load(grid, kFifo, {0.4, 0.6}, queue_p99);
        const auto q_sly = per_load(grid, kSly, {0.4, 0.6}, queue_p99);
        const double r40 = q_sly[0] / q_fifo[0];
        const double r60 = q_sly[1] / q_fifo[1];
        report(5, "queue length", r40 <= 0.7 && r60 <= 0.7,
               "p99 occupancy slytherin/dctcp at 40% = " + fmt(r40) + ", at 60% = " + fmt(r60) + " (need <=0.7)");
    }

    // 6. Convergence.
    {
        const double c_fifo = seed_mean(grid, key("convergence", kFifo, 0), convergence);
        const double c_sly = seed_mean(grid, key("convergence", kSly, 0), convergence);
        const bool pass = c_sly < c_fifo && c_fifo >= 4 && c_fifo <= 8;
        report(6, "convergence", pass,
               "RTTs to fair share dctcp=" + fmt(c_fifo) + " slytherin=" + fmt(c_sly) +
                   " (need slytherin<dctcp, dctcp in [4,8])");
    }

    // 7. Incast.
    {
        std::vector<double> sly, pias;
        bool every = true;
        double gain = 0;
        for (std::uint32_t d : degrees) {
            sly.push_back(seed_mean(grid, key("incast" + std::to_string(d), kSly, 0.6), short_p99));
            pias.push_back(seed_mean(grid, key("incast" + std::to_string(d), kPias, 0.6), short_p99));
            every = every && sly.back() <= pias.back();
            gain += 1.0 - sly.back() / pias.back();
        }
        gain /= static_cast<double>(degrees.size());
        report(7, "incast", all_finite(sly) && all_finite(pias) && every && gain >= 0.10,
               "p99 us at degree 24/32/40 slytherin=" + fmt_list(sly) + " pias=" + fmt_list(pias) +
                   "; mean reduction " + fmt(gain) + " (need slytherin<=pias everywhere, reduction>=0.10)");
    }

    // 8. Threshold sensitivity.
    {
        const double p99_k125 = seed_mean(grid, key("k" + fmt(0.125), kSly, 0.8), short_p99);
        const double p99_k25 = p99_sly[4];
        const double t_k375 = seed_mean(grid, key("k" + fmt(0.375), kSly, 0.8), long_tput);
        const double t_k25 = seed_mean(grid, key("load", kSly, 0.8), long_tput);
        report(8, "threshold sensitivity", p99_k125 > p99_k25 && t_k375 < t_k25,
               "at 80%: p99 us K=12.5% " + fmt(p99_k125) + " vs K=25% " + fmt(p99_k25) +
                   "; long Gb/s K=37.5% " + fmt(t_k375) + " vs K=25% " + fmt(t_k25));
    }

    // 9. Reordering.
    {
        const auto r_sly = per_load(grid, kSly, kLoads, reordering);
        const auto r_pias = per_load(grid, kPias, kLoads, reordering);
        const double mean_sly = std::accumulate(r_sly.begin(), r_sly.end(), 0.0) / static_cast<double>(r_sly.size());
        std::vector<double> ratio;
        bool high_load_worse = true;
        for (std::size_t i = 2; i < kLoads.size(); ++i) {
            ratio.push_back(r_pias[i] / r_sly[i]);
            high_load_worse = high_load_worse && ratio.back() > 1.0;
        }
        report(9, "reordering", all_finite(r_sly) && mean_sly <= 0.02 && high_load_worse,
               "slytherin fraction " + fmt_list(r_sly) + " mean " + fmt(mean_sly) + " (need <=0.02); pias " +
                   fmt_list(r_pias) + "; pias/slytherin at 60/70/80% = " + fmt_list(ratio) + " (need >1)");
    }

    // 10. Determinism of the emitted CSVs.
    {
        ExperimentConfig exp;
        exp.name = "determinism";
        exp.base = base;
        exp.base.fabric.mode = kSly;
        exp.base.workload.load = 0.6;
        exp.base.workload.max_flows = std::min<std::uint64_t>(opts.flows, 2'000);
        exp.base.workload.incast = IncastConfig{24, SimTime::ms(1), 0};
        exp.seeds = {7};
        const fs::path root = fs::temp_directory_path() / "tailsim_acceptance_determinism";
        std::vector<std::uint64_t> digests;
        std::string error;
        try {
            for (int rep = 0; rep < 3; ++rep) {
                const fs::path dir = root / std::to_string(rep);
                fs::remove_all(dir);
                RunnerOptions ro;
                ro.out_dir = dir;
                ro.dump_schedule = true;
                run_experiment(exp, ro);
                digests.push_back(output_digest(dir));
            }
        } catch (const std::exception& e) {
            error = e.what();
        }
        fs::remove_all(root);
        const bool pass = error.empty() && digests.size() == 3 && digests[0] == digests[1] && digests[1] == digests[2];
        std::string detail = "CSV digests";
        for (auto d : digests) {
            char buf[24];
            std::snprintf(buf, sizeof buf, " %016llx", static_cast<unsigned long long>(d));
            detail += buf;
        }
        report(10, "determinism", pass, detail + (error.empty() ? "" : " error: " + error));
    }

    // 11. Strict priority and per-queue FIFO.
    {
        std::uint64_t mismatches = 0, trace_dequeues = 0;
        std::uint64_t seed = 101;
        for (SchedulerMode m : {kFifo, kSly, kPias, SchedulerMode::SjfIdeal})
            mismatches += randomized_trace_mismatches(m, seed++, trace_dequeues);
        std::uint64_t audited = 0, sp = 0, fifo = 0, occ = 0, ce = 0;
        for (const auto& j : grid.jobs()) {
            const auto& inv = j.outcome.invariants;
            audited += inv.audited_dequeues;
            sp += inv.strict_priority_violations;
            fifo += inv.fifo_violations;
            occ += inv.occupancy_violations;
            ce += inv.ce_soundness_violations;
        }
        const bool pass = mismatches == 0 && sp == 0 && fifo == 0 && occ == 0 && ce == 0 && audited >= 100'000 &&
                          trace_dequeues >= 100'000;
        report(11, "strict priority and FIFO", pass,
               "randomized trace mismatches " + std::to_string(mismatches) + " over " + std::to_string(trace_dequeues) +
                   " dequeues; audited fabric dequeues " + std::to_string(audited) + ", priority violations " +
                   std::to_string(sp) + ", fifo violations " + std::to_string(fifo) + ", occupancy violations " +
                   std::to_string(occ) + ", ce soundness violations " + std::to_string(ce));
    }

    // 12. Conservation and drain.
    {
        std::size_t unbalanced = 0, flow_violations = 0, incomplete = 0, left_in_flight = 0, below_bound = 0;
        for (const auto& j : grid.jobs()) {
            if (!j.error.empty()) continue;
            const auto& o = j.outcome;
            if (!o.packets.balanced()) ++unbalanced;
            flow_violations += o.invariants.flow_conservation_violations;
            below_bound += o.invariants.fct_lower_bound_violations;
            // Convergence runs use unbounded flows and stop at a fixed horizon.
            if (j.config.pattern != TrafficPattern::Poisson) continue;
            if (o.packets.in_flight != 0) ++left_in_flight;
            if (!o.all_flows_complete) ++incomplete;
        }
        const bool pass = errors == 0 && unbalanced == 0 && flow_violations == 0 && incomplete == 0 &&
                          left_in_flight == 0 && below_bound == 0;
        report(12, "conservation and drain", pass,
               std::to_string(grid.jobs().size()) + " runs, " + std::to_string(errors) + " errors, " +
                   std::to_string(unbalanced) + " unbalanced, " + std::to_string(flow_violations) +
                   " per-flow violations, " + std::to_string(incomplete) + " with unfinished flows, " +
                   std::to_string(left_in_flight) + " with packets left in flight, " + std::to_string(below_bound) +
                   " FCTs below the unloaded bound");
    }

    // 13. Percentile oracle, alpha arithmetic, alpha range.
    {
        Rng rng(2024);
        int pct_mismatch = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> v(1 + rng.next_below(500));
            for (auto& x : v) x = static_cast<double>(rng.next_below(1000)) / 7.0;
            const double p = 0.5 + rng.next_unit() * 99.5;
            if (percentile(v, p) != sorted_rank_oracle(v, p)) ++pct_mismatch;
        }
        // (alpha, F, g) -> (1-g)*alpha + g*F, worked by hand.
        struct Case {
            double alpha, f, g, expected;
        };
        const Case cases[] = {
            {1.0, 0.0, 0.0625, 0.9375},   {0.0, 1.0, 0.0625, 0.0625}, {0.5, 0.5, 0.0625, 0.5},
            {0.5, 0.0, 0.0625, 0.46875},  {0.5, 1.0, 0.0625, 0.53125}, {0.25, 0.75, 0.0625, 0.28125},
            {0.8, 0.2, 0.0625, 0.7625},   {0.0, 0.0, 0.0625, 0.0},     {1.0, 1.0, 0.0625, 1.0},
            {0.1, 0.9, 0.0625, 0.15},     {0.5, 0.0, 0.5, 0.25},       {0.5, 1.0, 0.5, 0.75},
            {0.2, 0.6, 0.25, 0.3},        {1.0, 0.0, 1.0, 0.0},        {0.0, 1.0, 1.0, 1.0},
            {0.75, 0.25, 0.125, 0.6875},  {0.4, 0.4, 0.125, 0.4},      {0.6, 0.0, 0.125, 0.525},
            {0.3, 1.0, 0.03125, 0.321875}, {0.9, 0.1, 0.25, 0.7},
        };
        int alpha_mismatch = 0;
        for (const auto& c : cases)
            if (std::abs(dctcp_alpha_update(c.alpha, c.f, c.g) - c.expected) > 1e-12) ++alpha_mismatch;
        double lo = 1.0, hi = 0.0;
        for (const auto& j : grid.jobs()) {
            if (!j.error.empty()) continue;
            lo = std::min(lo, j.outcome.invariants.alpha_min);
            hi = std::max(hi, j.outcome.invariants.alpha_max);
        }
        const bool pass = pct_mismatch == 0 && alpha_mismatch == 0 && lo >= 0.0 && hi <= 1.0;
        report(13, "percentile and alpha", pass,
               "percentile mismatches " + std::to_string(pct_mismatch) + "/1000, alpha table mismatches " +
                   std::to_string(alpha_mismatch) + "/20, alpha range over all runs [" + fmt(lo) + ", " + fmt(hi) +
                   "]");
    }

    // 14. First-hop neutrality.
    {
        std::uint64_t violations = 0;
        std::size_t runs = 0;
        for (const auto& j : grid.jobs()) {
            if (j.config.fabric.mode != kSly || !j.error.empty()) continue;
            ++runs;
            violations += j.outcome.invariants.first_hop_priority_violations;
        }
        report(14, "first-hop neutrality", runs > 0 && violations == 0,
               std::to_string(violations) + " data packets in queue 0 at their first switch over " +
                   std::to_string(runs) + " slytherin runs");
    }

    // 15. Drop-free FIFO preserves order.
    {
        std::uint64_t drops = 0;
        double worst = 0;
        bool ok = true;
        for (const Job* j : grid.group("dropfree")) {
            ok = ok && j->error.empty();
            drops += j->outcome.metrics.drops;
            worst = std::max(worst, j->outcome.metrics.reordering);
        }
        report(15, "FIFO order preservation", ok && drops == 0 && worst == 0.0,
               "dctcp_fifo with a 1 GB buffer: drops " + std::to_string(drops) + ", worst reordering fraction " +
                   fmt(worst));
    }

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << grid.jobs().size() << " simulation runs in " << static_cast<int>(secs) << " s; " << failures
              << " of 15 criteria failed" << std::endl;
    return failures == 0 ? 0 : 1;
}
