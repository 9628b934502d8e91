#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <unordered_map>
#include <vector>

#include "p2p/battery.hpp"
#include "p2p/billing.hpp"
#include "p2p/profiles.hpp"

namespace p2p {

/// Index of a prosumer within its community.
using AgentId = std::uint32_t;

/// Aggregated demand, generation and storage of a set of prosumers operated
/// as one. The combined battery sums capacity and power; efficiencies, SoC
/// bounds, prices and lifetimes are capacity-weighted means so that the kWh
/// bounds are exact sums of the members' bounds.
struct CoalitionProfile {
    std::vector<AgentId> members;  // ascending
    TimeSeries demand;
    TimeSeries generation;
    BatterySpec battery;
    double generator_depreciation = 0.0;  // pence over the horizon, summed over members
    double standalone_bill_sum = 0.0;     // sum of the members' individual bills
    std::uint64_t digest = 0;             // hash of the aggregated series

    AgentId representative() const { return members.front(); }
};

BatterySpec combine_batteries(const BatterySpec& a, const BatterySpec& b);

/// Aggregates prosumers into a coalition profile. `ids` defaults to 0..n-1;
/// `standalone_bills`, when given, seeds the cached individual bills.
CoalitionProfile aggregate(std::span<const ProsumerSpec> members, std::span<const AgentId> ids = {},
                           std::span<const double> standalone_bills = {});

/// Aggregate of the union of two disjoint coalitions.
CoalitionProfile merge(const CoalitionProfile& a, const CoalitionProfile& b);

struct Evaluation {
    BillBreakdown bill;
    BatteryTrace trace;
};

/// Runs the dispatch heuristic on the aggregate and bills the result.
Evaluation evaluate(const CoalitionProfile& coalition, const TariffSchedule& tariffs);

/// Per-step energy [kWh] moved from one side of a contract to the other.
class TradeSchedule {
public:
    explicit TradeSchedule(TimeSeries energy_kwh);

    const TimeSeries& energy_kwh() const noexcept { return energy_; }
    double total_kwh() const noexcept { return energy_.sum(); }

private:
    TimeSeries energy_;
};

/// Bilateral contract between two coalitions. Energy can flow either way
/// during the horizon, so the schedule is kept as two nonnegative legs; at
/// any step at most one of them is positive.
struct EnergyContract {
    std::vector<AgentId> side_a;
    std::vector<AgentId> side_b;
    TradeSchedule a_to_b;
    TradeSchedule b_to_a;
    double gt = 0.0;
};

/// One side's share of a joint schedule.
struct MemberAllocation {
    TimeSeries battery_power_kw;
    TimeSeries soc_kwh;
    TimeSeries net_demand_kw;  // own demand - generation + allocated battery power
    TimeSeries post_trade_kw;  // net demand after peer-to-peer exchange
};

struct TradeAllocation {
    MemberAllocation a;
    MemberAllocation b;
    TradeSchedule a_to_b;
    TradeSchedule b_to_a;
};

/// Splits the joint trace of a ∪ b back onto the two sides. The joint
/// battery power is shared pro-rata to headroom when charging and to stored
/// energy when discharging; each side's residual surplus then covers the
/// other's residual deficit. The side SoC series sum to the joint SoC and the
/// side post-trade net demands sum to the joint net demand at every step.
TradeAllocation derive_trades(const CoalitionProfile& a, const CoalitionProfile& b,
                              const BatteryTrace& joint_trace);

struct PostTradeBills {
    BillBreakdown a;
    BillBreakdown b;
};

/// Bills each side on its post-trade net demand. Joint battery depreciation is
/// allocated by capacity share. No contract payments are included.
PostTradeBills post_trade_bills(const CoalitionProfile& a, const CoalitionProfile& b,
                                const TradeAllocation& allocation, const Evaluation& joint,
                                const TariffSchedule& tariffs);

struct PairGain {
    double gt = 0.0;
    double bill_a = 0.0;
    double bill_b = 0.0;
    double joint_bill = 0.0;
};

struct PairwiseResult {
    PairGain gain;
    std::optional<EnergyContract> contract;  // empty when merging would lose money
};

/// GT = bill(a) + bill(b) - bill(a ∪ b), with the derived contract. A negative
/// GT is reported as 0 with no contract; the bills keep the raw values.
/// Throws std::logic_error when the member sets overlap.
PairwiseResult pairwise_gt(const CoalitionProfile& a, const CoalitionProfile& b, const TariffSchedule& tariffs);

/// Evenly spaced candidates lo, lo+step, ..., up to hi inclusive.
std::vector<double> candidate_grid(double lo, double hi, double step);

/// Battery capacity minimising the standalone bill; power scales with
/// capacity at `power_per_kwh`. Ties resolve to the smaller capacity.
double size_battery(const ProsumerSpec& prosumer, const TariffSchedule& tariffs,
                    std::span<const double> candidates_kwh, double power_per_kwh);

/// Installed generation minimising the standalone bill without storage.
/// Ties resolve to the smaller share.
double size_generation(const ProsumerSpec& prosumer, const TimeSeries& resource, const TariffSchedule& tariffs,
                       std::span<const double> candidates_kw);

/// Memo of pairwise gains, safe for concurrent lookups and inserts.
class GainCache {
public:
    struct Key {
        std::vector<AgentId> ids;  // members of a, a sentinel, members of b
        std::uint64_t digest_a = 0;
        std::uint64_t digest_b = 0;
        bool operator==(const Key&) const = default;
    };

    static Key key(const CoalitionProfile& a, const CoalitionProfile& b);

    std::optional<PairGain> find(const Key& key) const;
    void insert(Key key, PairGain gain);
    std::size_t size() const;
    void clear();

private:
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    mutable std::shared_mutex mutex_;
    std::unordered_map<Key, PairGain, KeyHash> map_;
};

/// Owns a community and its tariffs and answers bill / gain queries about
/// any coalition of its members, memoising the expensive evaluations.
class JointProfileOptimiser {
public:
    JointProfileOptimiser(std::vector<ProsumerSpec> community, TariffSchedule tariffs);

    std::size_t size() const noexcept { return community_.size(); }
    const ProsumerSpec& prosumer(AgentId id) const { return community_.at(id); }
    const std::vector<ProsumerSpec>& community() const noexcept { return community_; }
    const TariffSchedule& tariffs() const noexcept { return tariffs_; }

    double standalone_bill(AgentId id) const { return standalone_bills_.at(id); }
    double standalone_bill_sum() const;
    std::shared_ptr<const CoalitionProfile> singleton(AgentId id) const { return singletons_.at(id); }

    /// Bill of a coalition operated as one; memoised by profile digest.
    double coalition_bill(const CoalitionProfile& coalition) const;

    /// Gain of merging two disjoint coalitions; memoised.
    PairGain gain(const CoalitionProfile& a, const CoalitionProfile& b) const;

    /// Full pairwise evaluation including the trade schedule, guarded like pairwise_gt.
    PairwiseResult contract(const CoalitionProfile& a, const CoalitionProfile& b) const;

    /// Bill of the whole community operated as one, and its gains from trade.
    double grand_coalition_bill() const;
    double grand_coalition_gt() const { return standalone_bill_sum() - grand_coalition_bill(); }

    const GainCache& cache() const noexcept { return cache_; }

private:
    std::vector<ProsumerSpec> community_;
    TariffSchedule tariffs_;
    std::vector<double> standalone_bills_;
    std::vector<std::shared_ptr<const CoalitionProfile>> singletons_;
    mutable GainCache cache_;
    mutable std::shared_mutex bill_mutex_;
    mutable std::unordered_map<std::uint64_t, double> bills_;
    mutable std::optional<double> grand_bill_;
};

}  // namespace p2p
