#include "tailsim/telemetry/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace tailsim {

double percentile(std::span<const double> samples, double p) {
    if (samples.empty()) throw StatsError("percentile of an empty sample set");
    if (!(p > 0.0 && p <= 100.0)) throw StatsError("percentile must be in (0, 100]");
    std::vector<double> v(samples.begin(), samples.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(rank - 1), v.end());
    return v[rank - 1];
}

double mean(std::span<const double> samples) {
    if (samples.empty()) throw StatsError("mean of an empty sample set");
    return std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
}

std::uint64_t FlowMarkTally::packets() const {
    return std::accumulate(packets_by_marks.begin(), packets_by_marks.end(), std::uint64_t{0});
}

std::uint64_t FlowMarkTally::multi_marked() const {
    return std::accumulate(packets_by_marks.begin() + 2, packets_by_marks.end(), std::uint64_t{0});
}

OpportunityResult opportunity_fraction(std::span<const FlowMarkTally> tallies, std::span<const FctSample> fcts,
                                       OpportunityGranularity granularity, double tail_percentile) {
    OpportunityResult r;
    if (fcts.empty()) {
        r.low_confidence = true;
        return r;
    }
    std::vector<double> values;
    values.reserve(fcts.size());
    for (const auto& s : fcts) values.push_back(static_cast<double>(s.fct.count()));
    const double cutoff = percentile(values, tail_percentile);

    std::unordered_set<std::uint64_t> tail_flows;
    for (const auto& s : fcts) {
        if (static_cast<double>(s.fct.count()) > cutoff) tail_flows.insert(s.key.flow_id);
    }

    std::uint64_t tail_packets = 0;
    for (const auto& t : tallies) {
        if (!tail_flows.contains(t.flow_id)) continue;
        tail_packets += t.packets();
        if (granularity == OpportunityGranularity::Packet) {
            r.tail_units += t.packets();
            r.multi_marked += t.multi_marked();
        } else {
            r.tail_units += 1;
            r.multi_marked += t.multi_marked() > 0 ? 1 : 0;
        }
    }
    r.low_confidence = tail_packets < 100;
    r.fraction = r.tail_units == 0 ? 0.0 : static_cast<double>(r.multi_marked) / static_cast<double>(r.tail_units);
    return r;
}

OpportunityResult opportunity_fraction(std::span<const PacketTraceRecord> traces, std::span<const FctSample> fcts,
                                       OpportunityGranularity granularity, double tail_percentile) {
    std::map<std::uint64_t, FlowMarkTally> by_flow;
    for (const auto& p : traces) {
        auto& t = by_flow[p.key.flow_id];
        t.flow_id = p.key.flow_id;
        t.packets_by_marks[std::min<std::size_t>(p.hops_marked, kMaxSwitchHops)] += 1;
    }
    std::vector<FlowMarkTally> tallies;
    tallies.reserve(by_flow.size());
    for (auto& [id, t] : by_flow) tallies.push_back(t);
    return opportunity_fraction(tallies, fcts, granularity, tail_percentile);
}

double long_flow_throughput(std::span<const FctSample> fcts) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& s : fcts) {
        if (s.cls != FlowClass::Long) continue;
        if (s.fct.count() == 0) throw StatsError("long flow with zero completion time");
        sum += static_cast<double>(s.size) * 8.0 / s.fct.to_seconds();
        ++n;
    }
    if (n == 0) throw StatsError("no completed long flows");
    return sum / static_cast<double>(n);
}

std::optional<std::size_t> convergence_time(std::span<const double> series, double fair_share, double tol,
                                            std::size_t hold) {
    if (hold == 0) hold = 1;
    const double lo = fair_share * (1.0 - tol);
    const double hi = fair_share * (1.0 + tol);
    std::size_t run = 0;
    for (std::size_t i = 0; i < series.size(); ++i) {
        run = (series[i] >= lo && series[i] <= hi) ? run + 1 : 0;
        if (run == hold) return i + 1 - hold;
    }
    return std::nullopt;
}

double reordering_fraction(std::span<const ReceiverLog> logs) {
    std::uint64_t packets = 0;
    std::uint64_t reordered = 0;
    for (const auto& l : logs) {
        packets += l.data_packets;
        reordered += l.reordered;
    }
    return packets == 0 ? 0.0 : static_cast<double>(reordered) / static_cast<double>(packets);
}

std::vector<CdfPoint> queue_cdf(std::span<const QueueSample> samples, std::span<const std::uint64_t> grid,
                                SimTime end) {
    if (samples.empty()) throw StatsError("queue CDF of an empty sample set");
    std::map<std::uint32_t, std::vector<QueueSample>> by_port;
    for (const auto& s : samples) by_port[s.port].push_back(s);

    std::map<std::uint64_t, std::uint64_t> weight;  // occupancy -> held ns
    std::uint64_t total = 0;
    for (auto& [port, list] : by_port) {
        std::stable_sort(list.begin(), list.end(),
                         [](const QueueSample& a, const QueueSample& b) { return a.time < b.time; });
        for (std::size_t i = 0; i < list.size(); ++i) {
            const SimTime until = i + 1 < list.size() ? list[i + 1].time : end;
            const std::uint64_t held = (until - list[i].time).count();
            weight[list[i].occupancy] += held;
            total += held;
        }
    }

    std::vector<CdfPoint> out;
    out.reserve(grid.size());
    for (std::uint64_t g : grid) {
        std::uint64_t below = 0;
        for (const auto& [occ, w] : weight) {
            if (occ > g) break;
            below += w;
        }
        out.push_back(CdfPoint{g, total == 0 ? 1.0 : static_cast<double>(below) / static_cast<double>(total)});
    }
    return out;
}

OccupancyHistogram::OccupancyHistogram(std::size_t ports, std::uint64_t max_occupancy)
    : ports_(ports), weight_(max_occupancy + 1, 0) {}

void OccupancyHistogram::observe(std::uint32_t port, SimTime now, std::uint64_t occupancy) {
    auto& st = ports_.at(port);
    const std::uint64_t held = (now - st.since).count();
    weight_[std::min<std::uint64_t>(st.occupancy, weight_.size() - 1)] += held;
    total_ += held;
    st.since = now;
    st.occupancy = occupancy;
}

void OccupancyHistogram::finish(SimTime end) {
    for (std::uint32_t p = 0; p < ports_.size(); ++p) observe(p, end, ports_[p].occupancy);
}

double OccupancyHistogram::cdf_at(std::uint64_t occupancy) const {
    if (total_ == 0) return 1.0;
    const std::uint64_t last = std::min<std::uint64_t>(occupancy, weight_.size() - 1);
    const std::uint64_t below = std::accumulate(weight_.begin(), weight_.begin() + static_cast<std::ptrdiff_t>(last + 1),
                                                std::uint64_t{0});
    return static_cast<double>(below) / static_cast<double>(total_);
}

std::vector<CdfPoint> OccupancyHistogram::cdf(std::span<const std::uint64_t> grid) const {
    std::vector<CdfPoint> out;
    out.reserve(grid.size());
    for (std::uint64_t g : grid) out.push_back(CdfPoint{g, cdf_at(g)});
    return out;
}

std::uint64_t OccupancyHistogram::percentile(double p) const {
    if (total_ == 0) throw StatsError("occupancy percentile with no observed time");
    if (!(p > 0.0 && p <= 100.0)) throw StatsError("percentile must be in (0, 100]");
    const double need = p / 100.0 * static_cast<double>(total_);
    std::uint64_t cum = 0;
    for (std::uint64_t v = 0; v < weight_.size(); ++v) {
        cum += weight_[v];
        if (static_cast<double>(cum) >= need && weight_[v] > 0) return v;
    }
    return weight_.size() - 1;
}

double OccupancyHistogram::mean() const {
    if (total_ == 0) return 0.0;
    long double acc = 0;
    for (std::uint64_t v = 0; v < weight_.size(); ++v) acc += static_cast<long double>(v) * weight_[v];
    return static_cast<double>(acc / total_);
}

}  // namespace tailsim
