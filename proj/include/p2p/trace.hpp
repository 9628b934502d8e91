#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "p2p/optimiser.hpp"

namespace p2p {

/// Extra bookkeeping for one offer/commit iteration of the negotiation market.
struct NegotiationMeta {
    std::size_t rounds_used = 0;
    std::size_t offers_sent = 0;
    std::size_t acceptances = 0;
};

/// One cleared contract.
struct RoundRecord {
    std::size_t round = 0;          // 1-based
    AgentId party_a = 0;            // contracting prosumer (or coalition representative)
    AgentId party_b = 0;
    std::size_t size_a = 0;         // members on each side before the merge
    std::size_t size_b = 0;
    double gt_pence = 0.0;
    double payment_a = 0.0;         // share of gt_pence credited to each side
    double payment_b = 0.0;
    double traded_kwh = 0.0;        // total energy exchanged over the horizon, both directions
    double cumulative_gt = 0.0;     // pence
    double cumulative_gt_pct = 0.0;
    double contracts_pct = 0.0;     // accepted contracts / N(N-1)/2
    double participation_pct = 0.0;
    std::vector<std::size_t> coalition_sizes;
    std::uint64_t partition_digest = 0;
    std::optional<NegotiationMeta> negotiation;
};

struct SimulationTrace {
    std::string market;
    std::size_t prosumers = 0;
    double standalone_total = 0.0;  // sum of individual bills
    double grand_gt = 0.0;          // GT of the whole community
    std::vector<RoundRecord> rounds;
    std::vector<NegotiationMeta> failed_iterations;  // negotiation iterations that cleared nothing

    double final_gt() const noexcept { return rounds.empty() ? 0.0 : rounds.back().cumulative_gt; }
    double final_gt_pct() const noexcept { return rounds.empty() ? 0.0 : rounds.back().cumulative_gt_pct; }
};

/// Percentage of `part` in `whole`; 0 when `whole` is not positive.
double percent(double part, double whole);

/// GT% reached at a participation level, linearly interpolated along the
/// run's (participation%, GT%) curve starting from the origin.
double gt_pct_at_participation(const SimulationTrace& trace, double participation_pct);

/// Smallest participation% at which the interpolated curve reaches `gt_pct`;
/// 100 when it never does.
double participation_for_gt(const SimulationTrace& trace, double gt_pct);

/// Smallest contracts% at which the interpolated curve reaches `gt_pct`;
/// nullopt when it never does.
std::optional<double> contracts_for_gt(const SimulationTrace& trace, double gt_pct);

void write_jsonl(const SimulationTrace& trace, const std::filesystem::path& path);
void write_gt_vs_contracts(const SimulationTrace& trace, const std::filesystem::path& path);
void write_gt_vs_participation(const SimulationTrace& trace, const std::filesystem::path& path);
void write_merges(const SimulationTrace& trace, const std::filesystem::path& path);

}  // namespace p2p
