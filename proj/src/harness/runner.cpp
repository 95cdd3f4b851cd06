#include "tailsim/harness/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "tailsim/sim/hash.hpp"

#ifndef TAILSIM_VERSION
#define TAILSIM_VERSION "unknown"
#endif

namespace tailsim {

namespace {

namespace fs = std::filesystem;

using Getter = std::function<std::optional<double>(const RunRecord&)>;

struct MetricColumn {
    std::string name;
    Getter get;
};

std::optional<double> count(std::uint64_t v) { return static_cast<double>(v); }

const std::vector<MetricColumn>& metric_table() {
    static const std::vector<MetricColumn> table = {
        {"fct_short_mean_us", [](const RunRecord& r) { return r.metrics.fct_short_mean_us; }},
        {"fct_short_p99_us", [](const RunRecord& r) { return r.metrics.fct_short_p99_us; }},
        {"fct_incast_mean_us", [](const RunRecord& r) { return r.metrics.fct_incast_mean_us; }},
        {"fct_incast_p99_us", [](const RunRecord& r) { return r.metrics.fct_incast_p99_us; }},
        {"throughput_long_gbps", [](const RunRecord& r) { return r.metrics.throughput_long_gbps; }},
        {"queue_p99_bytes", [](const RunRecord& r) { return r.metrics.queue_p99_bytes; }},
        {"queue_mean_bytes", [](const RunRecord& r) { return r.metrics.queue_mean_bytes; }},
        {"opportunity", [](const RunRecord& r) { return r.metrics.opportunity; }},
        {"opportunity_tail_packets", [](const RunRecord& r) { return count(r.metrics.opportunity_tail_packets); }},
        {"reordering", [](const RunRecord& r) -> std::optional<double> { return r.metrics.reordering; }},
        {"convergence_rtts", [](const RunRecord& r) { return r.metrics.convergence_rtts; }},
        {"drops", [](const RunRecord& r) { return count(r.metrics.drops); }},
        {"timeouts", [](const RunRecord& r) { return count(r.metrics.timeouts); }},
        {"fast_retransmits", [](const RunRecord& r) { return count(r.metrics.fast_retransmits); }},
        {"flows", [](const RunRecord& r) { return count(r.metrics.flows); }},
        {"flows_completed", [](const RunRecord& r) { return count(r.metrics.flows_completed); }},
        {"events", [](const RunRecord& r) { return count(r.summary.events); }},
    };
    return table;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RunFailure("cannot write " + path.string());
    return out;
}

std::string run_id_for(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "r%04zu", index);
    return buf;
}

std::uint32_t incast_degree(const SimulationConfig& c) {
    return c.workload.incast ? c.workload.incast->degree : 0U;
}

std::string key_columns(const SimulationConfig& c) {
    return std::string(to_string(c.fabric.mode)) + "," + fmt_double(c.workload.load) + "," +
           std::to_string(incast_degree(c)) + "," + fmt_double(c.fabric.ecn_threshold_frac);
}

void write_run_files(const fs::path& dir, const RunRecord& rec, const RunResult& result, bool dump_schedule) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "metrics.csv");
        out << "metric,value\n";
        for (const auto& col : metric_table()) out << col.name << ',' << format_metric(col.get(rec)) << '\n';
        out << "opportunity_low_confidence," << (rec.metrics.opportunity_low_confidence ? 1 : 0) << '\n';
        out << "trace_digest," << hex64(rec.summary.trace_digest) << '\n';
        out << "invariants_clean," << (rec.invariants_clean ? 1 : 0) << '\n';
    }
    {
        auto out = open_out(dir / "fct.csv");
        out << "flow_id,src,dst,class,size_bytes,arrive_ns,fct_us\n";
        for (const auto& f : result.flows) {
            out << f.key.flow_id << ',' << f.key.src.index << ',' << f.key.dst.index << ',' << to_string(f.cls) << ','
                << f.size << ',' << f.arrive_at.count() << ',';
            if (f.completed_at) out << fmt_double((*f.completed_at - f.arrive_at).to_us());
            else out << "NA";
            out << '\n';
        }
    }
    {
        auto out = open_out(dir / "queue_cdf.csv");
        out << "occupancy_bytes,cdf\n";
        for (const auto& p : result.queue_cdf) out << p.occupancy << ',' << fmt_double(p.fraction) << '\n';
    }
    if (rec.config.pattern == TrafficPattern::Convergence) {
        auto out = open_out(dir / "convergence.csv");
        out << "rtt_index,throughput_gbps\n";
        for (std::size_t i = 0; i < result.convergence_series_bps.size(); ++i)
            out << i << ',' << fmt_double(result.convergence_series_bps[i] / 1e9) << '\n';
    }
    if (dump_schedule) {
        auto out = open_out(dir / "schedule.csv");
        write_schedule_csv(out, result.flows);
    }
}

void write_summary(const fs::path& path, const std::vector<RunRecord>& records) {
    auto out = open_out(path);
    out << "run_id,mode,load,incast_degree,ecn_threshold_frac,seed";
    for (const auto& col : metric_table()) out << ',' << col.name;
    out << ",trace_digest\n";
    for (const auto& r : records) {
        out << r.run_id << ',' << key_columns(r.config) << ',' << r.config.seed;
        for (const auto& col : metric_table()) out << ',' << format_metric(col.get(r));
        out << ',' << hex64(r.summary.trace_digest) << '\n';
    }
}

void write_summary_mean(const fs::path& path, const std::vector<RunRecord>& records) {
    std::vector<std::string> keys;
    std::map<std::string, std::vector<const RunRecord*>> groups;
    for (const auto& r : records) {
        const std::string k = key_columns(r.config);
        if (!groups.contains(k)) keys.push_back(k);
        groups[k].push_back(&r);
    }
    auto out = open_out(path);
    out << "mode,load,incast_degree,ecn_threshold_frac,seeds";
    for (const auto& col : metric_table()) out << ',' << col.name << "_mean," << col.name << "_min," << col.name << "_max";
    out << '\n';
    for (const auto& k : keys) {
        const auto& group = groups[k];
        out << k << ',' << group.size();
        for (const auto& col : metric_table()) {
            std::vector<double> vals;
            for (const auto* r : group) {
                if (auto v = col.get(*r)) vals.push_back(*v);
            }
            if (vals.empty()) {
                out << ",NA,NA,NA";
                continue;
            }
            double sum = 0;
            for (double v : vals) sum += v;
            const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
            out << ',' << format_metric(sum / static_cast<double>(vals.size())) << ',' << format_metric(*lo) << ','
                << format_metric(*hi);
        }
        out << '\n';
    }
}

std::string scale_name(Scale s) { return s == Scale::Desk ? "desk" : "paper"; }

void write_manifest(const fs::path& path, const ExperimentConfig& config, const RunnerOptions& options,
                    const std::vector<RunRecord>& records, const std::vector<std::uint64_t>& seeds) {
    nlohmann::ordered_json j;
    j["preset"] = config.name;
    j["description"] = config.description;
    j["config_digest"] = hex64(fnv1a64(config.source_text));
    j["code_version"] = code_version();
    j["scale"] = scale_name(options.scale);
    j["mode"] = options.use_sweep_axes ? "sweep" : "run";
    j["seeds"] = seeds;
    auto runs = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json e;
        e["run_id"] = r.run_id;
        e["mode"] = std::string(to_string(r.config.fabric.mode));
        e["load"] = r.config.workload.load;
        e["incast_degree"] = incast_degree(r.config);
        e["ecn_threshold_frac"] = r.config.fabric.ecn_threshold_frac;
        e["seed"] = r.config.seed;
        e["trace_digest"] = hex64(r.summary.trace_digest);
        runs.push_back(std::move(e));
    }
    j["runs"] = std::move(runs);
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

}  // namespace

std::string format_metric(std::optional<double> value) {
    if (!value) return "NA";
    if (std::isinf(*value)) return *value > 0 ? "inf" : "-inf";
    if (std::isnan(*value)) return "NA";
    return fmt_double(*value);
}

const std::vector<std::string>& summary_metric_columns() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto& c : metric_table()) n.push_back(c.name);
        return n;
    }();
    return names;
}

std::string code_version() { return TAILSIM_VERSION; }

std::vector<RunRecord> run_experiment(const ExperimentConfig& input, const RunnerOptions& options) {
    ExperimentConfig config = input;
    apply_scale(config, options.scale);
    if (options.seed) config.seeds = {*options.seed};
    const auto points = expand_points(config, options.use_sweep_axes);

    fs::create_directories(options.out_dir / "runs");
    {
        auto out = open_out(options.out_dir / "config.ini");
        out << config.source_text;
    }

    std::vector<RunRecord> records(points.size());
    std::vector<std::string> errors(points.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            RunRecord& rec = records[i];
            rec.run_id = run_id_for(points[i].index);
            rec.config = points[i].config;
            try {
                const RunResult result = run_simulation(rec.config);
                rec.metrics = result.metrics;
                rec.summary = result.summary;
                rec.invariants_clean = result.invariants.clean() && result.packets.balanced();
                write_run_files(options.out_dir / "runs" / rec.run_id, rec, result, options.dump_schedule);
                if (options.log) {
                    std::lock_guard lock(log_mutex);
                    *options.log << rec.run_id << ' ' << key_columns(rec.config) << " seed " << rec.config.seed
                                 << " done\n";
                }
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const unsigned jobs = std::max(1U, std::min<unsigned>(options.jobs, static_cast<unsigned>(points.size())));
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();

    std::string failures;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i].empty()) failures += "run " + records[i].run_id + ": " + errors[i] + "\n";
    }
    if (!failures.empty()) throw RunFailure(failures);

    write_summary(options.out_dir / "summary.csv", records);
    write_summary_mean(options.out_dir / "summary_mean.csv", records);
    write_manifest(options.out_dir / "manifest.json", config, options, records, config.seeds);
    return records;
}

namespace {

struct SummaryTable {
    std::vector<std::string> metrics;
    // key (mode,load,incast,frac) -> metric -> values across seeds
    std::map<std::vector<std::string>, std::map<std::string, std::vector<double>>> rows;
    std::vector<std::vector<std::string>> order;
    std::set<std::string> modes;
};

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::optional<double> parse_metric(const std::string& s) {
    if (s == "NA" || s.empty()) return std::nullopt;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) return std::nullopt;
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

SummaryTable read_summary(const fs::path& dir) {
    const fs::path path = dir / "summary.csv";
    std::ifstream in(path);
    if (!in) throw CompareError("cannot read " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw CompareError(path.string() + ": empty file");
    const auto header = split_csv(line);
    const std::vector<std::string> keys{"mode", "load", "incast_degree", "ecn_threshold_frac"};
    if (header.size() < 6 || header[0] != "run_id" || header[5] != "seed" ||
        !std::equal(keys.begin(), keys.end(), header.begin() + 1))
        throw CompareError(path.string() + ": unexpected header");

    SummaryTable t;
    for (std::size_t c = 6; c < header.size(); ++c) {
        if (header[c] != "trace_digest") t.metrics.push_back(header[c]);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != header.size())
            throw CompareError(path.string() + ":" + std::to_string(line_no) + ": wrong column count");
        std::vector<std::string> key(cells.begin() + 1, cells.begin() + 5);
        if (!t.rows.contains(key)) t.order.push_back(key);
        t.modes.insert(cells[1]);
        auto& row = t.rows[key];
        for (std::size_t c = 6; c < header.size(); ++c) {
            if (header[c] == "trace_digest") continue;
            if (auto v = parse_metric(cells[c])) row[header[c]].push_back(*v);
            else row[header[c]];
        }
    }
    return t;
}

std::optional<double> mean_of(const std::map<std::string, std::vector<double>>& row, const std::string& metric) {
    const auto it = row.find(metric);
    if (it == row.end() || it->second.empty()) return std::nullopt;
    double sum = 0;
    for (double v : it->second) sum += v;
    return sum / static_cast<double>(it->second.size());
}

void emit(std::ostream& out, const std::string& dir, const std::vector<std::string>& key, const std::string& metric,
          std::optional<double> base, std::optional<double> value) {
    if (!base && !value) return;  // not applicable on either side
    std::optional<double> ratio, delta;
    if (base && value) {
        if (*base == *value) {
            ratio = 1.0;
            delta = 0.0;
        } else if (*base != 0.0) {
            ratio = *value / *base;
            delta = (*value - *base) / *base;
        }
    }
    out << dir << ',' << key[0] << ',' << key[1] << ',' << key[2] << ',' << key[3] << ',' << metric << ','
        << format_metric(base) << ',' << format_metric(value) << ',' << format_metric(ratio) << ','
        << format_metric(delta) << '\n';
}

}  // namespace

void compare_results(const CompareOptions& options, std::ostream& out) {
    if (options.dirs.empty()) throw CompareError("compare needs at least one result directory");
    out << "dir,mode,load,incast_degree,ecn_threshold_frac,metric,baseline,value,ratio,delta\n";

    if (options.dirs.size() == 1) {
        if (!options.baseline) throw CompareError("a single directory needs --baseline MODE");
        const SummaryTable t = read_summary(options.dirs[0]);
        const std::string base_mode(to_string(*options.baseline));
        if (!t.modes.contains(base_mode)) throw CompareError("baseline mode " + base_mode + " not present");
        for (const auto& key : t.order) {
            if (key[0] == base_mode) continue;
            std::vector<std::string> base_key = key;
            base_key[0] = base_mode;
            const auto it = t.rows.find(base_key);
            if (it == t.rows.end())
                throw CompareError("axis mismatch: no " + base_mode + " point for load=" + key[1] +
                                   " incast_degree=" + key[2] + " ecn_threshold_frac=" + key[3]);
            for (const auto& m : t.metrics)
                emit(out, options.dirs[0].string(), key, m, mean_of(it->second, m), mean_of(t.rows.at(key), m));
        }
        return;
    }

    const SummaryTable base = read_summary(options.dirs[0]);
    for (std::size_t d = 1; d < options.dirs.size(); ++d) {
        const SummaryTable other = read_summary(options.dirs[d]);
        bool ignore_mode = false;
        if (other.modes != base.modes) {
            if (other.modes.size() == 1 && base.modes.size() == 1) ignore_mode = true;
            else throw CompareError("axis mismatch: mode sets differ between " + options.dirs[0].string() + " and " +
                                    options.dirs[d].string());
        }
        for (const auto& key : other.order) {
            std::vector<std::string> base_key = key;
            if (ignore_mode) base_key[0] = *base.modes.begin();
            const auto it = base.rows.find(base_key);
            if (it == base.rows.end())
                throw CompareError("axis mismatch: " + options.dirs[d].string() + " has a point (load=" + key[1] +
                                   " incast_degree=" + key[2] + " ecn_threshold_frac=" + key[3] + ") missing from " +
                                   options.dirs[0].string());
            for (const auto& m : other.metrics)
                emit(out, options.dirs[d].string(), key, m, mean_of(it->second, m), mean_of(other.rows.at(key), m));
        }
    }
}

}  // namespace tailsim
