#include "tailsim/workload/workload.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace tailsim {

std::string_view to_string(FlowClass c) {
    switch (c) {
        case FlowClass::Short: return "short";
        case FlowClass::Long: return "long";
        case FlowClass::Incast: return "incast";
    }
    return "unknown";
}

void validate(const WorkloadConfig& c) {
    if (!(c.load > 0.0 && c.load < 1.0)) throw std::invalid_argument("load must be in (0,1)");
    if (c.short_min == 0 || c.short_min > c.short_max)
        throw std::invalid_argument("short flow range must be positive and ascending");
    if (c.long_size == 0) throw std::invalid_argument("long flow size must be positive");
    if (!(c.long_flow_fraction >= 0.0 && c.long_flow_fraction <= 1.0))
        throw std::invalid_argument("long flow fraction must be in [0,1]");
    if (c.incast) {
        if (c.incast->degree < 2) throw std::invalid_argument("incast degree must be >= 2");
        if (c.incast->period == SimTime{}) throw std::invalid_argument("incast period must be positive");
    }
}

double mean_flow_size(const WorkloadConfig& c) {
    const double short_mean = (static_cast<double>(c.short_min) + static_cast<double>(c.short_max)) / 2.0;
    return (1.0 - c.long_flow_fraction) * short_mean + c.long_flow_fraction * static_cast<double>(c.long_size);
}

double mean_incast_response(const WorkloadConfig& c) {
    if (!c.incast) return 0.0;
    if (c.incast->response_size > 0) return static_cast<double>(c.incast->response_size);
    return (static_cast<double>(c.short_min) + static_cast<double>(c.short_max)) / 2.0;
}

double load_capacity_bps(const WorkloadConfig& c, const Topology& topo) {
    const double hosts = static_cast<double>(topo.n_hosts()) * static_cast<double>(topo.params().host_rate_bps);
    if (c.basis == LoadBasis::Host || topo.n_leaf() < 2) return hosts;
    // Fraction of uniformly chosen (src != dst) pairs that leave the source leaf.
    const double n = topo.n_hosts();
    const double cross = (n - topo.hosts_per_leaf()) / (n - 1.0);
    const double uplinks = static_cast<double>(topo.n_leaf()) * topo.n_spine() *
                           static_cast<double>(topo.params().uplink_rate_bps);
    return std::min(hosts, uplinks / cross);
}

double background_arrival_rate(const WorkloadConfig& c, const Topology& topo) {
    double bytes_per_s = c.load * load_capacity_bps(c, topo) / 8.0;
    if (c.incast) {
        bytes_per_s -= c.incast->degree * mean_incast_response(c) / c.incast->period.to_seconds();
        if (bytes_per_s <= 0) throw std::invalid_argument("incast traffic alone exceeds the configured load");
    }
    return bytes_per_s / mean_flow_size(c);
}

namespace {

std::uint64_t draw_short(const WorkloadConfig& c, Rng& rng) {
    return c.short_min + rng.next_below(c.short_max - c.short_min + 1);
}

}  // namespace

std::vector<Flow> generate(const WorkloadConfig& c, const Topology& topo, Rng& rng) {
    validate(c);
    if (topo.n_hosts() < 2) throw std::invalid_argument("workload needs at least two hosts");
    const double rate = background_arrival_rate(c, topo);
    const double mean_gap_ns = 1e9 / rate;
    const double horizon = static_cast<double>(c.duration.count());

    std::vector<Flow> flows;
    double t = 0.0;
    while (c.max_flows == 0 || flows.size() < c.max_flows) {
        t += draw_exponential(rng, mean_gap_ns);
        if (!(t < horizon)) break;
        Flow f;
        f.arrive_at = SimTime::ns(static_cast<std::uint64_t>(t));
        const auto src = static_cast<std::uint32_t>(rng.next_below(topo.n_hosts()));
        auto dst = static_cast<std::uint32_t>(rng.next_below(topo.n_hosts() - 1));
        if (dst >= src) ++dst;
        f.key = FlowKey{topo.host(src), topo.host(dst), flows.size()};
        const bool is_long = rng.next_unit() < c.long_flow_fraction;
        f.cls = is_long ? FlowClass::Long : FlowClass::Short;
        f.size = is_long ? c.long_size : draw_short(c, rng);
        flows.push_back(f);
    }
    return flows;
}

std::vector<Flow> generate_incast(const WorkloadConfig& c, const Topology& topo, Rng& rng, SimTime horizon) {
    validate(c);
    if (!c.incast) return {};
    const auto& ic = *c.incast;
    if (ic.degree > topo.n_hosts() - 1)
        throw std::invalid_argument("incast degree " + std::to_string(ic.degree) + " exceeds hosts - 1 = " +
                                    std::to_string(topo.n_hosts() - 1));

    std::vector<std::uint32_t> candidates(topo.n_hosts());
    std::vector<Flow> flows;
    SimTime t = SimTime::ns(rng.next_below(ic.period.count()));
    for (; t < horizon; t += ic.period) {
        const auto receiver = static_cast<std::uint32_t>(rng.next_below(topo.n_hosts()));
        std::iota(candidates.begin(), candidates.end(), 0U);
        std::swap(candidates[receiver], candidates.back());
        const std::size_t pool = candidates.size() - 1;
        // Partial Fisher-Yates over hosts other than the receiver.
        for (std::uint32_t k = 0; k < ic.degree; ++k) {
            const std::size_t pick = k + rng.next_below(pool - k);
            std::swap(candidates[k], candidates[pick]);
            Flow f;
            f.arrive_at = t;
            f.key = FlowKey{topo.host(candidates[k]), topo.host(receiver), flows.size()};
            f.cls = FlowClass::Incast;
            f.size = ic.response_size > 0 ? ic.response_size : draw_short(c, rng);
            flows.push_back(f);
        }
    }
    return flows;
}

std::vector<Flow> build_schedule(const WorkloadConfig& c, const Topology& topo, std::uint64_t master_seed) {
    Rng background_rng = Rng::derive(master_seed, "workload");
    std::vector<Flow> flows = generate(c, topo, background_rng);
    if (c.incast) {
        SimTime horizon = c.duration;
        if (c.max_flows > 0 && !flows.empty() && flows.size() >= c.max_flows) horizon = flows.back().arrive_at;
        Rng incast_rng = Rng::derive(master_seed, "incast");
        auto bursts = generate_incast(c, topo, incast_rng, horizon);
        flows.insert(flows.end(), bursts.begin(), bursts.end());
        std::stable_sort(flows.begin(), flows.end(),
                         [](const Flow& a, const Flow& b) { return a.arrive_at < b.arrive_at; });
    }
    for (std::size_t i = 0; i < flows.size(); ++i) flows[i].key.flow_id = i;
    return flows;
}

std::vector<Flow> convergence_schedule(const ConvergenceScenario& s, const Topology& topo) {
    if (topo.n_hosts() < 4 || topo.leaf_of(topo.host(0)) != topo.leaf_of(topo.host(1)) ||
        topo.leaf_of(topo.host(2)) == topo.leaf_of(topo.host(0)))
        throw std::invalid_argument("convergence scenario needs hosts 0,1 on one leaf and 2,3 on another");
    std::vector<Flow> flows;
    flows.push_back(Flow{FlowKey{topo.host(0), topo.host(2), 0}, s.flow_size, SimTime{}, std::nullopt, FlowClass::Long});
    for (std::uint32_t i = 0; i < s.competitors; ++i) {
        flows.push_back(Flow{FlowKey{topo.host(1), topo.host(3), flows.size()}, s.flow_size, s.competitor_start,
                             std::nullopt, FlowClass::Long});
    }
    return flows;
}

void write_schedule_csv(std::ostream& out, const std::vector<Flow>& flows) {
    out << "flow_id,src,dst,size,arrive_ns\n";
    for (const auto& f : flows) {
        out << f.key.flow_id << ',' << f.key.src.index << ',' << f.key.dst.index << ',' << f.size << ','
            << f.arrive_at.count() << '\n';
    }
}

}  // namespace tailsim
