#include "p2p/market_negotiation.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "p2p/errors.hpp"
#include "p2p/parallel.hpp"

namespace p2p {

double concession_offer(const AgentStrategy& s, std::size_t round) {
    if (s.deadline == 0) throw ProtocolError("negotiation deadline must be at least one round");
    if (round > s.deadline)
        throw ProtocolError(fmt::format("round {} is past the deadline {}", round, s.deadline));
    const double umax = std::max(s.max_utility, s.reservation_value);
    return s.reservation_value +
           (umax - s.reservation_value) * (1.0 - static_cast<double>(round) / static_cast<double>(s.deadline));
}

std::vector<PeerGain> select_peers(std::span<const PeerGain> candidates, std::size_t k) {
    if (k == 0) throw ValidationError("k must be at least 1");
    std::vector<PeerGain> out(candidates.begin(), candidates.end());
    std::sort(out.begin(), out.end(), [](const PeerGain& a, const PeerGain& b) {
        if (a.gt != b.gt) return a.gt > b.gt;
        return a.partner_id < b.partner_id;
    });
    if (out.size() > k) out.resize(k);
    return out;
}

std::vector<std::vector<PeerGain>> build_peer_space(const MarketState& state, double threshold, unsigned threads) {
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
        threads);

    std::vector<std::vector<PeerGain>> space(m);
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        if (!(gains[p] > threshold)) continue;
        const auto [i, j] = pairs[p];
        space[i].push_back({j, part.block(j)->representative(), gains[p]});
        space[j].push_back({i, part.block(i)->representative(), gains[p]});
    }
    return space;
}

std::vector<AgentStrategy> make_strategies(const std::vector<std::vector<PeerGain>>& space,
                                           const NegotiationConfig& config) {
    std::vector<AgentStrategy> out;
    out.reserve(space.size());
    for (const auto& candidates : space) {
        double umax = 0.0;
        if (config.max_utility_sum) {
            for (const auto& p : select_peers(candidates, config.k)) umax += p.gt;
        } else {
            for (const auto& p : candidates) umax = std::max(umax, p.gt);
        }
        out.push_back({config.reservation_value, umax, config.deadline});
    }
    return out;
}

OfferPhaseResult offer_phase(const std::vector<std::vector<PeerGain>>& space,
                             std::span<const AgentStrategy> strategies, std::size_t k) {
    if (strategies.size() != space.size()) throw DimensionError("one strategy per agent is required");
    OfferPhaseResult result;
    std::vector<std::vector<PeerGain>> peers(space.size());
    std::size_t deadline = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        peers[i] = select_peers(space[i], k);
        deadline = std::max(deadline, strategies[i].deadline);
    }

    for (std::size_t r = 0; r <= deadline; ++r) {
        std::vector<double> level(space.size());
        for (std::size_t i = 0; i < space.size(); ++i)
            level[i] = concession_offer(strategies[i], std::min(r, strategies[i].deadline));

        for (std::size_t i = 0; i < space.size(); ++i) {
            for (const auto& peer : peers[i]) {
                if (level[i] > peer.gt) continue;  // cannot claim more than the contract is worth
                ++result.meta.offers_sent;
                const double left = peer.gt - level[i];
                const double tol = 1e-9 * std::max(1.0, peer.gt);
                if (left >= level[peer.partner] - tol) {
                    result.accepted.push_back({i, peer.partner, 0, peer.partner_id, r, level[i], peer.gt});
                }
            }
        }
        result.meta.rounds_used = r + 1;
        if (!result.accepted.empty()) break;
    }
    result.meta.acceptances = result.accepted.size();
    return result;
}

std::optional<RoundRecord> commit_phase(MarketState& state, std::vector<Offer> accepted, GridChecker& grid,
                                        const NegotiationMeta& meta) {
    for (auto& o : accepted) {
        o.proposer_id = state.partition.block(o.proposer)->representative();
        o.recipient_id = state.partition.block(o.recipient)->representative();
    }
    std::sort(accepted.begin(), accepted.end(), [](const Offer& a, const Offer& b) {
        if (a.gt != b.gt) return a.gt > b.gt;
        if (a.proposer_id != b.proposer_id) return a.proposer_id < b.proposer_id;
        return a.recipient_id < b.recipient_id;
    });
    for (const auto& o : accepted) {
        std::optional<EnergyContract> contract;
        if (!grid.unconstrained()) {
            auto derived = state.optimiser->contract(*state.partition.block(o.proposer),
                                                     *state.partition.block(o.recipient));
            if (!derived.contract || grid.check(*derived.contract)) continue;
            contract = std::move(derived.contract);
        }
        RoundRecord rec = settle(state, grid, o.proposer, o.recipient, o.proposer_id, o.recipient_id, o.gt,
                                 o.claimed_value, o.gt - o.claimed_value, std::move(contract));
        rec.negotiation = meta;
        return rec;
    }
    return std::nullopt;
}

SimulationTrace run_negotiation(const JointProfileOptimiser& optimiser, GridChecker& grid,
                                const NegotiationConfig& config) {
    SimulationTrace trace = start_trace(optimiser, "negotiation");
    MarketState state(optimiser);
    while (!state.partition.is_grand()) {
        const auto space = build_peer_space(state, config.threshold, config.threads);
        const auto strategies = make_strategies(space, config);
        auto offers = offer_phase(space, strategies, config.k);
        auto rec = commit_phase(state, std::move(offers.accepted), grid, offers.meta);
        if (!rec) {
            trace.failed_iterations.push_back(offers.meta);
            break;
        }
        trace.rounds.push_back(std::move(*rec));
    }
    return trace;
}

}  // namespace p2p
