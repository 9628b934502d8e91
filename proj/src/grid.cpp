#include "p2p/grid.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>
#include <unordered_map>

#include <fmt/format.h>

#include "p2p/csv.hpp"
#include "p2p/errors.hpp"

namespace p2p {

FeederModel FeederModel::single_bus(std::size_t prosumers) {
    return FeederModel{{0}, {std::numeric_limits<double>::infinity()}, std::vector<std::size_t>(prosumers, 0)};
}

FeederModel FeederModel::from_csv(const std::filesystem::path& feeder, const std::filesystem::path& mapping,
                                  std::span<const std::string> prosumer_ids) {
    FeederModel out;
    const auto rows = csv::read(feeder);
    if (rows.empty()) throw ConfigError(fmt::format("{}: empty feeder file", feeder.string()));
    csv::expect_header(rows.front(), {"node", "parent", "limit_kw"});
    std::vector<std::tuple<std::size_t, std::size_t, double>> lines;
    std::size_t max_node = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != 3) throw ParseError("feeder row needs 3 fields", row.line);
        const double node = csv::to_double(row.fields[0], row.line, "node");
        const double parent = csv::to_double(row.fields[1], row.line, "parent");
        if (node < 0 || parent < 0 || node != std::floor(node) || parent != std::floor(parent))
            throw ParseError("node ids must be nonnegative integers", row.line);
        lines.emplace_back(static_cast<std::size_t>(node), static_cast<std::size_t>(parent),
                           csv::to_double(row.fields[2], row.line, "limit_kw"));
        max_node = std::max({max_node, static_cast<std::size_t>(node), static_cast<std::size_t>(parent)});
    }
    out.parent.assign(max_node + 1, 0);
    out.limit_kw.assign(max_node + 1, std::numeric_limits<double>::infinity());
    std::vector<bool> seen(max_node + 1, false);
    for (const auto& [node, parent, limit] : lines) {
        if (seen[node]) throw ConfigError(fmt::format("{}: node {} listed twice", feeder.string(), node));
        seen[node] = true;
        out.parent[node] = parent;
        out.limit_kw[node] = limit;
    }

    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < prosumer_ids.size(); ++i) index.emplace(prosumer_ids[i], i);
    constexpr std::size_t unmapped = std::numeric_limits<std::size_t>::max();
    out.node_of.assign(prosumer_ids.size(), unmapped);
    const auto map_rows = csv::read(mapping);
    if (map_rows.empty()) throw ConfigError(fmt::format("{}: empty mapping file", mapping.string()));
    csv::expect_header(map_rows.front(), {"prosumer_id", "node"});
    for (std::size_t r = 1; r < map_rows.size(); ++r) {
        const auto& row = map_rows[r];
        if (row.fields.size() != 2) throw ParseError("mapping row needs 2 fields", row.line);
        const auto it = index.find(row.fields[0]);
        if (it == index.end()) continue;  // prosumers outside this community
        out.node_of[it->second] = static_cast<std::size_t>(csv::to_double(row.fields[1], row.line, "node"));
    }
    out.validate(prosumer_ids.size());
    return out;
}

void FeederModel::validate(std::size_t prosumers) const {
    const std::size_t n = nodes();
    if (n == 0 || limit_kw.size() != n) throw ConfigError("feeder needs at least a root node");
    for (std::size_t v = 1; v < n; ++v) {
        if (parent[v] >= n) throw ConfigError(fmt::format("feeder node {} has unknown parent", v));
        if (!(limit_kw[v] > 0.0)) throw ConfigError(fmt::format("feeder line {} has a non-positive limit", v));
        std::size_t u = v;
        for (std::size_t hops = 0; u != 0; ++hops) {
            if (hops > n) throw ConfigError(fmt::format("feeder node {} is not connected to the root", v));
            u = parent[u];
        }
    }
    if (node_of.size() != prosumers) throw ConfigError("feeder mapping does not cover the community");
    for (std::size_t i = 0; i < prosumers; ++i)
        if (node_of[i] >= n) throw ConfigError(fmt::format("prosumer {} is not mapped to a feeder node", i));
}

FeederChecker::FeederChecker(FeederModel feeder, std::span<const TimeSeries> baseline)
    : feeder_(std::move(feeder)) {
    feeder_.validate(baseline.size());
    const std::size_t n = feeder_.nodes();
    const std::size_t horizon = baseline.empty() ? 0 : baseline.front().size();
    if (!baseline.empty()) step_hours_ = baseline.front().step_hours();
    for (std::size_t v = 1; v < n; ++v)
        if (std::isfinite(feeder_.limit_kw[v])) unconstrained_ = false;

    // Depth ordering so subtree sums can be accumulated leaves-first.
    std::vector<std::size_t> depth(n, 0);
    for (std::size_t v = 1; v < n; ++v)
        for (std::size_t u = v; u != 0; u = feeder_.parent[u]) ++depth[v];
    order_.resize(n);
    for (std::size_t v = 0; v < n; ++v) order_[v] = v;
    std::stable_sort(order_.begin(), order_.end(), [&](auto a, auto b) { return depth[a] > depth[b]; });

    flows_.assign(n, std::vector<double>(horizon, 0.0));
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        if (baseline[i].size() != horizon) throw DimensionError("feeder baseline horizons differ");
        auto& node = flows_[feeder_.node_of[i]];
        for (std::size_t t = 0; t < horizon; ++t) node[t] += baseline[i][t];
    }
    for (std::size_t v : order_)
        if (v != 0)
            for (std::size_t t = 0; t < horizon; ++t) flows_[feeder_.parent[v]][t] += flows_[v][t];
}

std::vector<double> FeederChecker::line_coefficients(const EnergyContract& contract) const {
    // Withdrawal weight per node for one kW moving from side a to side b.
    std::vector<double> w(feeder_.nodes(), 0.0);
    for (AgentId id : contract.side_a) w.at(feeder_.node_of.at(id)) -= 1.0 / contract.side_a.size();
    for (AgentId id : contract.side_b) w.at(feeder_.node_of.at(id)) += 1.0 / contract.side_b.size();
    for (std::size_t v : order_)
        if (v != 0) w[feeder_.parent[v]] += w[v];
    return w;
}

std::optional<GridViolation> FeederChecker::check(const EnergyContract& contract) const {
    if (unconstrained_) return std::nullopt;
    const auto c = line_coefficients(contract);
    const auto& ab = contract.a_to_b.energy_kwh();
    const auto& ba = contract.b_to_a.energy_kwh();
    for (std::size_t t = 0; t < ab.size(); ++t) {
        const double kw = (ab[t] - ba[t]) / step_hours_;
        if (kw == 0.0) continue;
        for (std::size_t v = 1; v < feeder_.nodes(); ++v) {
            if (c[v] == 0.0) continue;
            const double base = flows_[v][t];
            const double after = std::abs(base + c[v] * kw);
            const double allowed = std::max(feeder_.limit_kw[v], std::abs(base));
            if (after > allowed + kGridTolerance) return GridViolation{v, t, after - feeder_.limit_kw[v]};
        }
    }
    return std::nullopt;
}

void FeederChecker::commit(const EnergyContract& contract) {
    const auto c = line_coefficients(contract);
    const auto& ab = contract.a_to_b.energy_kwh();
    const auto& ba = contract.b_to_a.energy_kwh();
    for (std::size_t t = 0; t < ab.size(); ++t) {
        const double kw = (ab[t] - ba[t]) / step_hours_;
        if (kw == 0.0) continue;
        for (std::size_t v = 0; v < feeder_.nodes(); ++v) flows_[v][t] += c[v] * kw;
    }
}

}  // namespace p2p
