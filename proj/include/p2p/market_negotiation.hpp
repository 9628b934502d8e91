#pragma once

#include <optional>
#include <span>
#include <vector>

#include "p2p/market_central.hpp"

namespace p2p {

inline constexpr std::size_t kDefaultPeers = 5;
inline constexpr std::size_t kDefaultDeadline = 20;

struct NegotiationConfig {
    std::size_t k = kDefaultPeers;
    std::size_t deadline = kDefaultDeadline;
    double threshold = kDefaultGtThreshold;
    double reservation_value = 0.0;
    /// u^max as the sum over the top-k partners instead of the best single one.
    bool max_utility_sum = false;
    unsigned threads = 0;
};

/// Linear concession from max_utility at round 0 to reservation_value at the deadline.
struct AgentStrategy {
    double reservation_value = 0.0;
    double max_utility = 0.0;
    std::size_t deadline = kDefaultDeadline;
};

/// o(r) = rv + (umax - rv)(1 - r/dl). Throws ProtocolError when r > dl or dl == 0.
double concession_offer(const AgentStrategy& strategy, std::size_t round);

struct PeerGain {
    std::size_t partner = 0;   // block index in the partition
    AgentId partner_id = 0;    // the partner's representative
    double gt = 0.0;
};

/// First min(k, n) candidates by GT descending, ties by partner id.
std::vector<PeerGain> select_peers(std::span<const PeerGain> candidates, std::size_t k);

/// Candidate contracts per agent (block) with GT above `threshold`.
std::vector<std::vector<PeerGain>> build_peer_space(const MarketState& state, double threshold, unsigned threads = 0);

/// One strategy per agent for the current market iteration.
std::vector<AgentStrategy> make_strategies(const std::vector<std::vector<PeerGain>>& space,
                                           const NegotiationConfig& config);

struct Offer {
    std::size_t proposer = 0;   // block indices
    std::size_t recipient = 0;
    AgentId proposer_id = 0;
    AgentId recipient_id = 0;
    std::size_t round = 0;
    double claimed_value = 0.0;  // the proposer's share of the contract GT
    double gt = 0.0;
};

struct OfferPhaseResult {
    std::vector<Offer> accepted;  // all acceptances of the terminating round
    NegotiationMeta meta;
};

/// Rounds r = 0..dl: every agent offers its current concession level to its
/// top-k peers, then every recipient accepts an offer whose remainder is at
/// least its own current level. Stops at the first round with an acceptance.
OfferPhaseResult offer_phase(const std::vector<std::vector<PeerGain>>& space,
                             std::span<const AgentStrategy> strategies, std::size_t k);

/// Clears the highest-GT grid-feasible acceptance and rejects the rest.
std::optional<RoundRecord> commit_phase(MarketState& state, std::vector<Offer> accepted, GridChecker& grid,
                                        const NegotiationMeta& meta);

/// Alternates offer and commit phases until an iteration clears nothing.
SimulationTrace run_negotiation(const JointProfileOptimiser& optimiser, GridChecker& grid,
                                const NegotiationConfig& config);

}  // namespace p2p
