#include "p2p/trace.hpp"

#include <fstream>

#include <fmt/format.h>
#include <json.hpp>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("{}: cannot open for writing", path.string()));
    return out;
}

struct Point {
    double x;
    double y;
};

std::vector<Point> curve(const SimulationTrace& trace, bool by_contracts) {
    std::vector<Point> pts{{0.0, 0.0}};
    for (const auto& r : trace.rounds)
        pts.push_back({by_contracts ? r.contracts_pct : r.participation_pct, r.cumulative_gt_pct});
    return pts;
}

// First x at which the piecewise-linear curve reaches y.
std::optional<double> first_reach(const std::vector<Point>& pts, double y) {
    if (pts.front().y >= y) return pts.front().x;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (pts[i].y >= y) {
            const auto& p = pts[i - 1];
            const auto& q = pts[i];
            if (q.y == p.y) return q.x;
            return p.x + (q.x - p.x) * (y - p.y) / (q.y - p.y);
        }
    }
    return std::nullopt;
}

}  // namespace

double percent(double part, double whole) { return whole > 0.0 ? 100.0 * part / whole : 0.0; }

double gt_pct_at_participation(const SimulationTrace& trace, double participation_pct) {
    const auto pts = curve(trace, false);
    double best = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const auto& p = pts[i - 1];
        const auto& q = pts[i];
        if (q.x <= participation_pct) {
            best = std::max(best, q.y);
        } else if (p.x <= participation_pct && q.x > p.x) {
            best = std::max(best, p.y + (q.y - p.y) * (participation_pct - p.x) / (q.x - p.x));
        }
    }
    return best;
}

double participation_for_gt(const SimulationTrace& trace, double gt_pct) {
    return first_reach(curve(trace, false), gt_pct).value_or(100.0);
}

std::optional<double> contracts_for_gt(const SimulationTrace& trace, double gt_pct) {
    return first_reach(curve(trace, true), gt_pct);
}

void write_jsonl(const SimulationTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    for (const auto& r : trace.rounds) {
        nlohmann::ordered_json j;
        j["round"] = r.round;
        j["contract"] = {r.party_a, r.party_b};
        j["gt_pence"] = r.gt_pence;
        j["split"] = {r.payment_a, r.payment_b};
        j["traded_kwh"] = r.traded_kwh;
        j["cumulative_gt_pct"] = r.cumulative_gt_pct;
        j["contracts_pct"] = r.contracts_pct;
        j["participation_pct"] = r.participation_pct;
        j["coalition_sizes"] = r.coalition_sizes;
        j["partition_digest"] = fmt::format("{:016x}", r.partition_digest);
        if (r.negotiation) {
            j["rounds_used"] = r.negotiation->rounds_used;
            j["offers_sent"] = r.negotiation->offers_sent;
            j["acceptances"] = r.negotiation->acceptances;
        }
        out << j.dump() << '\n';
    }
}

void write_gt_vs_contracts(const SimulationTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "contracts,contracts_pct,gt_pct\n0,0,0\n";
    for (std::size_t i = 0; i < trace.rounds.size(); ++i) {
        const auto& r = trace.rounds[i];
        out << fmt::format("{},{:.6f},{:.6f}\n", i + 1, r.contracts_pct, r.cumulative_gt_pct);
    }
}

void write_gt_vs_participation(const SimulationTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "round,participation_pct,gt_pct\n0,0,0\n";
    for (const auto& r : trace.rounds)
        out << fmt::format("{},{:.6f},{:.6f}\n", r.round, r.participation_pct, r.cumulative_gt_pct);
}

void write_merges(const SimulationTrace& trace, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "round,party_a,party_b,size_a,size_b,merged_size,gt_pence,payment_a,payment_b,traded_kwh\n";
    for (const auto& r : trace.rounds)
        out << fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", r.round, r.party_a, r.party_b,
                           r.size_a, r.size_b, r.size_a + r.size_b, r.gt_pence, r.payment_a, r.payment_b,
                           r.traded_kwh);
}

}  // namespace p2p
