#include "p2p/market_central.hpp"

#include <algorithm>

#include "p2p/errors.hpp"
#include "p2p/parallel.hpp"

namespace p2p {

SimulationTrace start_trace(const JointProfileOptimiser& optimiser, std::string market) {
    SimulationTrace trace;
    trace.market = std::move(market);
    trace.prosumers = optimiser.size();
    trace.standalone_total = optimiser.standalone_bill_sum();
    trace.grand_gt = optimiser.grand_coalition_gt();
    return trace;
}

RoundRecord settle(MarketState& state, GridChecker& grid, std::size_t block_a, std::size_t block_b,
                   AgentId party_a, AgentId party_b, double gt, double payment_a, double payment_b,
                   std::optional<EnergyContract> contract) {
    if (!(gt >= 0.0)) throw ProtocolError("refusing to clear a contract with negative gains");
    const auto& a = *state.partition.block(block_a);
    const auto& b = *state.partition.block(block_b);
    if (!contract) {
        auto derived = state.optimiser->contract(a, b);
        if (!derived.contract) throw ProtocolError("contract could not be derived");
        contract = std::move(derived.contract);
    }
    grid.commit(*contract);

    RoundRecord rec;
    rec.round = state.accepted.size() + 1;
    rec.party_a = party_a;
    rec.party_b = party_b;
    rec.size_a = a.members.size();
    rec.size_b = b.members.size();
    rec.gt_pence = gt;
    rec.payment_a = payment_a;
    rec.payment_b = payment_b;
    rec.traded_kwh = contract->a_to_b.total_kwh() + contract->b_to_a.total_kwh();

    state.accepted.push_back({rec.round, party_a, party_b, a.members, b.members, gt, payment_a, payment_b});
    state.cumulative_gt += gt;
    state.partition.merge(block_a, block_b);

    const double n = static_cast<double>(state.partition.prosumers());
    const JointProfileOptimiser& opt = *state.optimiser;
    rec.cumulative_gt = state.cumulative_gt;
    rec.cumulative_gt_pct = percent(state.cumulative_gt, opt.grand_coalition_gt());
    rec.contracts_pct = percent(static_cast<double>(state.accepted.size()), n * (n - 1.0) / 2.0);
    rec.participation_pct = 100.0 * state.partition.participation();
    rec.coalition_sizes = state.partition.coalition_sizes();
    rec.partition_digest = state.partition.digest();
    return rec;
}

std::vector<Candidate> build_contract_space(const MarketState& state, const CentralConfig& config) {
    const auto& part = state.partition;
    const auto& opt = *state.optimiser;
    const std::size_t m = part.size();

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(m * (m - 1) / 2);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    std::vector<double> gains(pairs.size());
    parallel_for(
        pairs.size(),
        [&](std::size_t p) { gains[p] = opt.gain(*part.block(pairs[p].first), *part.block(pairs[p].second)).gt; },
        config.threads);

    std::vector<Candidate> out;
    if (!config.prosumer_pairs) {
        out.reserve(pairs.size());
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto [i, j] = pairs[p];
            out.push_back({i, j, part.block(i)->representative(), part.block(j)->representative(), gains[p], gains[p]});
        }
    } else {
        std::vector<std::vector<double>> block_gain(m, std::vector<double>(m, 0.0));
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            block_gain[pairs[p].first][pairs[p].second] = gains[p];
            block_gain[pairs[p].second][pairs[p].first] = gains[p];
        }
        const auto n = static_cast<AgentId>(part.prosumers());
        std::vector<std::pair<AgentId, AgentId>> prosumer_pairs;
        for (AgentId x = 0; x < n; ++x)
            for (AgentId y = x + 1; y < n; ++y)
                if (part.block_of(x) != part.block_of(y)) prosumer_pairs.emplace_back(x, y);
        std::vector<double> pair_gains(prosumer_pairs.size());
        parallel_for(
            prosumer_pairs.size(),
            [&](std::size_t p) {
                pair_gains[p] = opt.gain(*opt.singleton(prosumer_pairs[p].first),
                                         *opt.singleton(prosumer_pairs[p].second)).gt;
            },
            config.threads);
        out.reserve(prosumer_pairs.size());
        for (std::size_t p = 0; p < prosumer_pairs.size(); ++p) {
            const auto [x, y] = prosumer_pairs[p];
            const std::size_t i = part.block_of(x), j = part.block_of(y);
            out.push_back({i, j, x, y, block_gain[i][j], pair_gains[p]});
        }
    }

    std::sort(out.begin(), out.end(), [](const Candidate& l, const Candidate& r) {
        if (l.gt != r.gt) return l.gt > r.gt;
        if (l.pair_gt != r.pair_gt) return l.pair_gt > r.pair_gt;
        if (l.party_a != r.party_a) return l.party_a < r.party_a;
        return l.party_b < r.party_b;
    });
    return out;
}

std::optional<RoundRecord> clearing_round(MarketState& state, GridChecker& grid, const CentralConfig& config) {
    if (state.partition.is_grand()) return std::nullopt;
    for (const auto& c : build_contract_space(state, config)) {
        if (!(c.gt > config.threshold)) return std::nullopt;
        std::optional<EnergyContract> contract;
        if (!grid.unconstrained()) {
            auto derived = state.optimiser->contract(*state.partition.block(c.block_a),
                                                     *state.partition.block(c.block_b));
            if (!derived.contract || grid.check(*derived.contract)) continue;
            contract = std::move(derived.contract);
        }
        return settle(state, grid, c.block_a, c.block_b, c.party_a, c.party_b, c.gt, c.gt / 2.0, c.gt / 2.0,
                      std::move(contract));
    }
    return std::nullopt;
}

SimulationTrace run_central(const JointProfileOptimiser& optimiser, GridChecker& grid, const CentralConfig& config) {
    SimulationTrace trace = start_trace(optimiser, "central");
    MarketState state(optimiser);
    while (auto rec = clearing_round(state, grid, config)) trace.rounds.push_back(std::move(*rec));
    return trace;
}

}  // namespace p2p
