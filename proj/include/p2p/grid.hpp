#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "p2p/optimiser.hpp"

namespace p2p {

struct GridViolation {
    std::size_t line = 0;  // child node of the overloaded line
    std::size_t step = 0;
    double overload_kw = 0.0;
};

/// Validates candidate trades against the local network.
class GridChecker {
public:
    virtual ~GridChecker() = default;

    /// When true every check passes, so callers may skip building schedules.
    virtual bool unconstrained() const { return false; }

    /// Empty when the contract can be cleared.
    virtual std::optional<GridViolation> check(const EnergyContract& contract) const = 0;

    /// Records a cleared contract so later checks see its flows.
    virtual void commit(const EnergyContract& contract) = 0;
};

class UnconstrainedGrid final : public GridChecker {
public:
    bool unconstrained() const override { return true; }
    std::optional<GridViolation> check(const EnergyContract&) const override { return std::nullopt; }
    void commit(const EnergyContract&) override {}
};

/// Radial feeder: node 0 is the root, every other node has one parent and a
/// thermal limit on the line to it.
struct FeederModel {
    std::vector<std::size_t> parent;  // parent[0] is ignored
    std::vector<double> limit_kw;     // limit of the line node -> parent
    std::vector<std::size_t> node_of;  // prosumer index -> node

    /// One bus, no lines, every prosumer at the root.
    static FeederModel single_bus(std::size_t prosumers);

    /// `node,parent,limit_kw` and `prosumer_id,node`; ids are resolved against
    /// `prosumer_ids` (position = prosumer index).
    static FeederModel from_csv(const std::filesystem::path& feeder, const std::filesystem::path& mapping,
                                std::span<const std::string> prosumer_ids);

    std::size_t nodes() const noexcept { return parent.size(); }

    /// Throws ConfigError when the topology is not a tree rooted at 0, a
    /// limit is not positive or a prosumer is unmapped.
    void validate(std::size_t prosumers) const;
};

/// DC-style capacity check. Baseline line flows come from the given per-
/// prosumer net demands plus every committed contract; a trade's flow is
/// spread evenly over the nodes of each side. A line fails when the trade
/// pushes its flow beyond max(limit, |baseline|), so trades may relieve an
/// already overloaded line but never aggravate it.
class FeederChecker final : public GridChecker {
public:
    FeederChecker(FeederModel feeder, std::span<const TimeSeries> baseline_net_demand_kw);

    bool unconstrained() const override { return unconstrained_; }
    std::optional<GridViolation> check(const EnergyContract& contract) const override;
    void commit(const EnergyContract& contract) override;

    /// Flow on the line above `node` at `step`, positive towards the leaves.
    double flow(std::size_t node, std::size_t step) const { return flows_.at(node).at(step); }

private:
    std::vector<double> line_coefficients(const EnergyContract& contract) const;

    FeederModel feeder_;
    std::vector<std::vector<double>> flows_;  // per node, per step
    std::vector<std::size_t> order_;          // nodes, leaves before parents
    double step_hours_ = kDefaultStepHours;
    bool unconstrained_ = true;
};

inline constexpr double kGridTolerance = 1e-9;

}  // namespace p2p
