#pragma once

#include <optional>
#include <vector>

#include "p2p/grid.hpp"
#include "p2p/optimiser.hpp"
#include "p2p/partition.hpp"
#include "p2p/trace.hpp"

namespace p2p {

/// Default termination threshold on GT, in pence.
inline constexpr double kDefaultGtThreshold = 0.01;

struct AcceptedContract {
    std::size_t round = 0;
    AgentId party_a = 0;
    AgentId party_b = 0;
    std::vector<AgentId> side_a;
    std::vector<AgentId> side_b;
    double gt = 0.0;
    double payment_a = 0.0;
    double payment_b = 0.0;
};

/// Partition plus the log of cleared contracts; shared by both markets.
struct MarketState {
    explicit MarketState(const JointProfileOptimiser& optimiser) : optimiser(&optimiser), partition(optimiser) {}

    const JointProfileOptimiser* optimiser;
    CoalitionPartition partition;
    std::vector<AcceptedContract> accepted;
    double cumulative_gt = 0.0;
};

/// Merges blocks `block_a` and `block_b`, commits the contract to the grid and
/// returns the trace record. `contract` may carry an already derived schedule.
RoundRecord settle(MarketState& state, GridChecker& grid, std::size_t block_a, std::size_t block_b,
                   AgentId party_a, AgentId party_b, double gt, double payment_a, double payment_b,
                   std::optional<EnergyContract> contract = std::nullopt);

/// Empty trace carrying the community totals.
SimulationTrace start_trace(const JointProfileOptimiser& optimiser, std::string market);

struct CentralConfig {
    double threshold = kDefaultGtThreshold;
    /// Candidates are cross-coalition prosumer pairs instead of coalition pairs;
    /// accepting one merges the two prosumers' coalitions.
    bool prosumer_pairs = false;
    unsigned threads = 0;
};

struct Candidate {
    std::size_t block_a = 0;
    std::size_t block_b = 0;
    AgentId party_a = 0;
    AgentId party_b = 0;
    double gt = 0.0;
    double pair_gt = 0.0;  // prosumer-pair mode tie-break: GT of the two prosumers alone
};

/// Every candidate of the current partition, GT descending, ties by party ids.
std::vector<Candidate> build_contract_space(const MarketState& state, const CentralConfig& config);

/// Clears the best grid-feasible candidate with GT above the threshold, or
/// returns nullopt when none is left.
std::optional<RoundRecord> clearing_round(MarketState& state, GridChecker& grid, const CentralConfig& config);

/// Repeats clearing rounds to termination.
SimulationTrace run_central(const JointProfileOptimiser& optimiser, GridChecker& grid, const CentralConfig& config);

}  // namespace p2p
