#include "tailsim/harness/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace tailsim {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_list(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
        const auto comma = s.find(',');
        out.push_back(trim(s.substr(0, comma)));
        if (comma == std::string_view::npos) break;
        s.remove_prefix(comma + 1);
    }
    return out;
}

double to_double(std::string_view v, std::size_t line, std::string_view key) {
    double out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size() || !std::isfinite(out))
        throw ConfigError(line, std::string(key) + ": expected a number, got '" + std::string(v) + "'");
    return out;
}

std::uint64_t to_uint(std::string_view v, std::size_t line, std::string_view key) {
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(line, std::string(key) + ": expected a non-negative integer, got '" + std::string(v) + "'");
    return out;
}

bool to_bool(std::string_view v, std::size_t line, std::string_view key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(line, std::string(key) + ": expected true or false");
}

std::uint64_t kb(double v) { return static_cast<std::uint64_t>(std::llround(v * 1000.0)); }
std::uint64_t gbps(double v) { return static_cast<std::uint64_t>(std::llround(v * 1e9)); }
SimTime us_time(double v) { return SimTime::ns(static_cast<std::uint64_t>(std::llround(v * 1e3))); }

SchedulerMode to_mode(std::string_view v, std::size_t line) {
    if (auto m = parse_scheduler_mode(v)) return *m;
    throw ConfigError(line, "mode must be one of dctcp_fifo, slytherin, pias, sjf_ideal; got '" + std::string(v) + "'");
}

void check_load(double load, std::size_t line) {
    if (!(load > 0.0 && load < 1.0)) throw ConfigError(line, "load must be in (0,1)");
}

void check_frac(double f, std::size_t line) {
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError(line, "ecn_threshold_frac must be in [0,1]");
}

void check_positive(double v, std::size_t line, std::string_view key) {
    if (!(v > 0.0)) throw ConfigError(line, std::string(key) + " must be positive");
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::size_t)>;

const std::map<std::string, std::map<std::string, Setter>>& key_table() {
    static const std::map<std::string, std::map<std::string, Setter>> table = [] {
        std::map<std::string, std::map<std::string, Setter>> t;
        auto& ex = t["experiment"];
        ex["name"] = [](ExperimentConfig& c, std::string_view v, std::size_t) { c.name = std::string(v); };
        ex["description"] = [](ExperimentConfig& c, std::string_view v, std::size_t) {
            c.description = std::string(v);
        };

        auto& to = t["topology"];
        to["n_leaf"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.topology.n_leaf = static_cast<std::uint32_t>(to_uint(v, l, "n_leaf"));
            if (c.base.topology.n_leaf == 0) throw ConfigError(l, "n_leaf must be >= 1");
        };
        to["n_spine"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.topology.n_spine = static_cast<std::uint32_t>(to_uint(v, l, "n_spine"));
            if (c.base.topology.n_spine == 0) throw ConfigError(l, "n_spine must be >= 1");
        };
        to["hosts_per_leaf"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.topology.hosts_per_leaf = static_cast<std::uint32_t>(to_uint(v, l, "hosts_per_leaf"));
            if (c.base.topology.hosts_per_leaf == 0) throw ConfigError(l, "hosts_per_leaf must be >= 1");
        };
        to["host_rate_gbps"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "host_rate_gbps");
            check_positive(x, l, "host_rate_gbps");
            c.base.topology.host_rate_bps = gbps(x);
        };
        to["uplink_rate_gbps"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "uplink_rate_gbps");
            check_positive(x, l, "uplink_rate_gbps");
            c.base.topology.uplink_rate_bps = gbps(x);
        };
        to["rtt_us"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "rtt_us");
            check_positive(x, l, "rtt_us");
            c.base.topology.target_rtt = us_time(x);
        };

        auto& wl = t["workload"];
        wl["pattern"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            if (v == "poisson") c.base.pattern = TrafficPattern::Poisson;
            else if (v == "convergence") c.base.pattern = TrafficPattern::Convergence;
            else throw ConfigError(l, "pattern must be poisson or convergence");
        };
        wl["load"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "load");
            check_load(x, l);
            c.base.workload.load = x;
        };
        wl["load_basis"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            if (v == "host") c.base.workload.basis = LoadBasis::Host;
            else if (v == "bottleneck") c.base.workload.basis = LoadBasis::Bottleneck;
            else throw ConfigError(l, "load_basis must be host or bottleneck");
        };
        wl["short_min_kb"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.workload.short_min = kb(to_double(v, l, "short_min_kb"));
        };
        wl["short_max_kb"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.workload.short_max = kb(to_double(v, l, "short_max_kb"));
        };
        wl["long_size_kb"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.workload.long_size = kb(to_double(v, l, "long_size_kb"));
        };
        wl["long_flow_fraction"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "long_flow_fraction");
            if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(l, "long_flow_fraction must be in [0,1]");
            c.base.workload.long_flow_fraction = x;
        };
        wl["duration_ms"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "duration_ms");
            check_positive(x, l, "duration_ms");
            c.base.workload.duration = us_time(x * 1000.0);
        };
        wl["flows"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.workload.max_flows = to_uint(v, l, "flows");
        };
        wl["drain_ms"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.drain = us_time(to_double(v, l, "drain_ms") * 1000.0);
        };
        wl["incast_degree"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const auto d = static_cast<std::uint32_t>(to_uint(v, l, "incast_degree"));
            if (d == 0) {
                c.base.workload.incast.reset();
                return;
            }
            if (d < 2) throw ConfigError(l, "incast_degree must be 0 (off) or >= 2");
            if (!c.base.workload.incast) c.base.workload.incast.emplace();
            c.base.workload.incast->degree = d;
        };
        wl["incast_period_us"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "incast_period_us");
            check_positive(x, l, "incast_period_us");
            if (!c.base.workload.incast) c.base.workload.incast.emplace();
            c.base.workload.incast->period = us_time(x);
        };
        wl["incast_response_kb"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            if (!c.base.workload.incast) c.base.workload.incast.emplace();
            c.base.workload.incast->response_size = kb(to_double(v, l, "incast_response_kb"));
        };
        wl["competitors"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.convergence.competitors = static_cast<std::uint32_t>(to_uint(v, l, "competitors"));
        };
        wl["competitor_start_rtts"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.convergence.start_after_rtts = static_cast<std::uint32_t>(to_uint(v, l, "competitor_start_rtts"));
        };
        wl["measure_rtts"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.convergence.measure_rtts = static_cast<std::uint32_t>(to_uint(v, l, "measure_rtts"));
        };

        auto& sw = t["switch"];
        sw["mode"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.fabric.mode = to_mode(v, l);
        };
        sw["buffer_kb"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "buffer_kb");
            check_positive(x, l, "buffer_kb");
            c.base.fabric.buffer_bytes = kb(x);
        };
        sw["ecn_threshold_frac"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "ecn_threshold_frac");
            check_frac(x, l);
            c.base.fabric.ecn_threshold_frac = x;
        };
        sw["pias_thresholds_kb"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            std::vector<std::uint64_t> th;
            for (auto item : split_list(v)) th.push_back(kb(to_double(item, l, "pias_thresholds_kb")));
            try {
                validate_pias_thresholds(th);
            } catch (const SchedulerConfigError& e) {
                throw ConfigError(l, e.what());
            }
            c.base.fabric.pias_thresholds = th;
        };
        sw["sjf_queues"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const auto n = static_cast<std::uint32_t>(to_uint(v, l, "sjf_queues"));
            if (n == 0) throw ConfigError(l, "sjf_queues must be >= 1");
            c.base.fabric.sjf_queues = n;
        };

        auto& tr = t["transport"];
        tr["mss"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const auto x = to_uint(v, l, "mss");
            if (x == 0) throw ConfigError(l, "mss must be positive");
            c.base.transport.mss = static_cast<std::uint32_t>(x);
        };
        tr["header_bytes"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.transport.header_bytes = static_cast<std::uint32_t>(to_uint(v, l, "header_bytes"));
        };
        tr["g"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "g");
            if (!(x > 0.0 && x <= 1.0)) throw ConfigError(l, "g must be in (0,1]");
            c.base.transport.g = x;
        };
        tr["initial_alpha"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "initial_alpha");
            if (!(x >= 0.0 && x <= 1.0)) throw ConfigError(l, "initial_alpha must be in [0,1]");
            c.base.transport.initial_alpha = x;
        };
        tr["init_cwnd_mss"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const auto x = to_uint(v, l, "init_cwnd_mss");
            if (x == 0) throw ConfigError(l, "init_cwnd_mss must be >= 1");
            c.base.transport.init_cwnd_segments = static_cast<std::uint32_t>(x);
        };
        tr["min_rto_ms"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "min_rto_ms");
            check_positive(x, l, "min_rto_ms");
            c.base.transport.min_rto = us_time(x * 1000.0);
        };
        tr["max_rto_ms"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "max_rto_ms");
            check_positive(x, l, "max_rto_ms");
            c.base.transport.max_rto = us_time(x * 1000.0);
        };
        tr["dupack_threshold"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const auto x = to_uint(v, l, "dupack_threshold");
            if (x == 0) throw ConfigError(l, "dupack_threshold must be >= 1");
            c.base.transport.dupack_threshold = static_cast<std::uint32_t>(x);
        };

        auto& te = t["telemetry"];
        te["opportunity_granularity"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            if (v == "packet") c.base.telemetry.opportunity_granularity = OpportunityGranularity::Packet;
            else if (v == "flow") c.base.telemetry.opportunity_granularity = OpportunityGranularity::Flow;
            else throw ConfigError(l, "opportunity_granularity must be packet or flow");
        };
        te["tail_percentile"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "tail_percentile");
            if (!(x > 0.0 && x <= 100.0)) throw ConfigError(l, "tail_percentile must be in (0,100]");
            c.base.telemetry.tail_percentile = x;
        };
        te["sample_queues"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.telemetry.sample_queues = to_bool(v, l, "sample_queues");
        };
        te["audit"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.telemetry.audit = to_bool(v, l, "audit");
        };
        te["convergence_tol"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            const double x = to_double(v, l, "convergence_tol");
            check_positive(x, l, "convergence_tol");
            c.base.telemetry.convergence_tol = x;
        };
        te["convergence_hold"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.base.telemetry.convergence_hold = static_cast<std::uint32_t>(to_uint(v, l, "convergence_hold"));
        };

        auto& sp = t["sweep"];
        sp["seeds"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.seeds.clear();
            for (auto item : split_list(v)) c.seeds.push_back(to_uint(item, l, "seeds"));
        };
        sp["load"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.sweep.load.clear();
            for (auto item : split_list(v)) {
                const double x = to_double(item, l, "load");
                check_load(x, l);
                c.sweep.load.push_back(x);
            }
        };
        sp["mode"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.sweep.mode.clear();
            for (auto item : split_list(v)) c.sweep.mode.push_back(to_mode(item, l));
        };
        sp["incast_degree"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.sweep.incast_degree.clear();
            for (auto item : split_list(v)) {
                const auto d = static_cast<std::uint32_t>(to_uint(item, l, "incast_degree"));
                if (d == 1) throw ConfigError(l, "incast_degree must be 0 (off) or >= 2");
                c.sweep.incast_degree.push_back(d);
            }
        };
        sp["ecn_threshold_frac"] = [](ExperimentConfig& c, std::string_view v, std::size_t l) {
            c.sweep.ecn_threshold_frac.clear();
            for (auto item : split_list(v)) {
                const double x = to_double(item, l, "ecn_threshold_frac");
                check_frac(x, l);
                c.sweep.ecn_threshold_frac.push_back(x);
            }
        };
        return t;
    }();
    return table;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig c;
    c.source_text = std::string(text);
    const auto& table = key_table();

    std::string section;
    std::map<std::string, std::size_t> sections_seen;
    std::set<std::pair<std::string, std::string>> keys_seen;
    std::size_t line_no = 0;
    std::size_t mode_line = 0;

    std::string_view rest = text;
    while (!rest.empty() || line_no == 0) {
        ++line_no;
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);

        if (const auto hash = line.find_first_of("#;"); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) {
            if (rest.empty()) break;
            continue;
        }
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(line_no, "malformed section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!table.contains(section)) throw ConfigError(line_no, "unknown section [" + section + "]");
            if (sections_seen.contains(section)) throw ConfigError(line_no, "duplicate section [" + section + "]");
            sections_seen[section] = line_no;
        } else {
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) throw ConfigError(line_no, "expected key = value");
            const std::string key(trim(line.substr(0, eq)));
            const std::string_view value = trim(line.substr(eq + 1));
            if (section.empty()) throw ConfigError(line_no, "key '" + key + "' outside of any section");
            const auto& keys = table.at(section);
            const auto it = keys.find(key);
            if (it == keys.end()) throw ConfigError(line_no, "unknown key '" + key + "' in [" + section + "]");
            if (!keys_seen.insert({section, key}).second)
                throw ConfigError(line_no, "duplicate key '" + key + "' in [" + section + "]");
            if (value.empty()) throw ConfigError(line_no, "key '" + key + "' has no value");
            it->second(c, value, line_no);
            if (section == "switch" && key == "mode") mode_line = line_no;
        }
        if (rest.empty()) break;
    }

    for (const char* required : {"topology", "workload", "switch"}) {
        if (!sections_seen.contains(required))
            throw ConfigError(line_no, std::string("missing required section [") + required + "]");
    }
    const bool has_load = keys_seen.contains({"workload", "load"}) || !c.sweep.load.empty();
    if (c.base.pattern == TrafficPattern::Poisson && !has_load)
        throw ConfigError(sections_seen["workload"], "[workload] needs load (or [sweep] load)");
    if (!keys_seen.contains({"switch", "mode"}) && c.sweep.mode.empty())
        throw ConfigError(sections_seen["switch"], "[switch] needs mode (or [sweep] mode)");
    if (c.seeds.empty()) throw ConfigError(sections_seen.contains("sweep") ? sections_seen["sweep"] : line_no,
                                           "at least one seed is required");

    const auto& w = c.base.workload;
    if (w.short_min == 0 || w.short_min > w.short_max)
        throw ConfigError(sections_seen["workload"], "short_min_kb must be positive and <= short_max_kb");
    if (c.base.pattern == TrafficPattern::Convergence) {
        const auto& t = c.base.topology;
        if (t.n_leaf < 2 || t.hosts_per_leaf < 2)
            throw ConfigError(sections_seen["topology"], "convergence pattern needs >= 2 leaves with >= 2 hosts each");
        if (c.base.convergence.competitors == 0)
            throw ConfigError(sections_seen["workload"], "competitors must be >= 1");
    }
    if (w.incast && w.incast->degree > c.base.topology.n_leaf * c.base.topology.hosts_per_leaf - 1)
        throw ConfigError(sections_seen["workload"], "incast_degree exceeds hosts - 1");
    (void)mode_line;
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Scale parse_scale(std::string_view text) {
    if (text == "desk") return Scale::Desk;
    if (text == "paper") return Scale::Full;
    throw std::invalid_argument("scale must be desk or paper");
}

void apply_scale(ExperimentConfig& config, Scale scale) {
    if (scale == Scale::Desk || config.base.pattern == TrafficPattern::Convergence) return;
    auto& t = config.base.topology;
    t.n_leaf = 20;
    t.n_spine = 10;
    t.hosts_per_leaf = 20;
}

std::vector<SweepPoint> expand_points(const ExperimentConfig& config, bool use_axes) {
    const auto& base = config.base;
    auto axis = [use_axes](const auto& values, auto fallback) {
        using T = decltype(fallback);
        if (use_axes && !values.empty()) return std::vector<T>(values.begin(), values.end());
        return std::vector<T>{fallback};
    };
    const auto modes = axis(config.sweep.mode, base.fabric.mode);
    const auto loads = axis(config.sweep.load, base.workload.load);
    const std::uint32_t base_degree = base.workload.incast ? base.workload.incast->degree : 0U;
    const auto degrees = axis(config.sweep.incast_degree, base_degree);
    const auto fracs = axis(config.sweep.ecn_threshold_frac, base.fabric.ecn_threshold_frac);

    std::vector<SweepPoint> points;
    for (auto mode : modes) {
        for (double load : loads) {
            for (auto degree : degrees) {
                for (double frac : fracs) {
                    for (auto seed : config.seeds) {
                        SweepPoint p;
                        p.config = base;
                        p.config.fabric.mode = mode;
                        p.config.workload.load = load;
                        if (degree == 0) {
                            p.config.workload.incast.reset();
                        } else {
                            if (!p.config.workload.incast) p.config.workload.incast.emplace();
                            p.config.workload.incast->degree = degree;
                        }
                        p.config.fabric.ecn_threshold_frac = frac;
                        p.config.seed = seed;
                        p.index = points.size();
                        points.push_back(std::move(p));
                    }
                }
            }
        }
    }
    return points;
}

}  // namespace tailsim
