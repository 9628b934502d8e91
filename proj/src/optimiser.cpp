#include "p2p/optimiser.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

constexpr AgentId kKeySentinel = std::numeric_limits<AgentId>::max();

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h * 0x100000001b3ULL;
}

std::uint64_t digest_of(const TimeSeries& demand, const TimeSeries& generation, double capacity) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (double x : demand) h = mix(h, std::bit_cast<std::uint64_t>(x));
    for (double x : generation) h = mix(h, std::bit_cast<std::uint64_t>(x));
    return mix(h, std::bit_cast<std::uint64_t>(capacity));
}

double weighted(double a, double wa, double b, double wb) {
    const double w = wa + wb;
    if (w <= 0.0) return 0.5 * (a + b);
    return (a * wa + b * wb) / w;
}

bool overlap(const std::vector<AgentId>& a, const std::vector<AgentId>& b) {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) return true;
        a[i] < b[j] ? ++i : ++j;
    }
    return false;
}

void require_disjoint(const CoalitionProfile& a, const CoalitionProfile& b) {
    if (a.members.empty() || b.members.empty()) throw ValidationError("coalition has no members");
    if (overlap(a.members, b.members)) throw ProtocolError("coalitions share members");
}

}  // namespace

BatterySpec combine_batteries(const BatterySpec& a, const BatterySpec& b) {
    const double wa = a.capacity_kwh;
    const double wb = b.capacity_kwh;
    BatterySpec out;
    out.capacity_kwh = wa + wb;
    out.max_power_kw = a.max_power_kw + b.max_power_kw;
    out.soc_min_pct = weighted(a.soc_min_pct, wa, b.soc_min_pct, wb);
    out.soc_max_pct = weighted(a.soc_max_pct, wa, b.soc_max_pct, wb);
    out.initial_soc_pct = std::clamp(weighted(a.initial_soc_pct, wa, b.initial_soc_pct, wb), out.soc_min_pct,
                                     out.soc_max_pct);
    out.charge_efficiency = weighted(a.charge_efficiency, wa, b.charge_efficiency, wb);
    out.discharge_efficiency = weighted(a.discharge_efficiency, wa, b.discharge_efficiency, wb);
    out.cost_per_kwh = weighted(a.cost_per_kwh, wa, b.cost_per_kwh, wb);
    out.lifetime_years = weighted(a.lifetime_years, wa, b.lifetime_years, wb);
    out.cycle_life = wb > wa ? b.cycle_life : a.cycle_life;
    return out;
}

CoalitionProfile aggregate(std::span<const ProsumerSpec> members, std::span<const AgentId> ids,
                           std::span<const double> standalone_bills) {
    if (members.empty()) throw ValidationError("aggregate needs at least one member");
    if (!ids.empty() && ids.size() != members.size()) throw DimensionError("aggregate: ids and members differ in length");
    if (!standalone_bills.empty() && standalone_bills.size() != members.size())
        throw DimensionError("aggregate: bills and members differ in length");

    const double years = horizon_years(members.front().demand.size(), members.front().demand.step_hours());
    std::vector<double> demand(members.front().demand.begin(), members.front().demand.end());
    const TimeSeries first_gen = members.front().generation();
    std::vector<double> generation(first_gen.begin(), first_gen.end());
    BatterySpec battery = members.front().battery;
    double gen_dep = generator_cost(members.front().generator, years);

    for (std::size_t m = 1; m < members.size(); ++m) {
        const auto& p = members[m];
        const TimeSeries g = p.generation();
        require_same_shape(members.front().demand, p.demand, "aggregate");
        require_same_shape(members.front().demand, g, "aggregate");
        for (std::size_t t = 0; t < demand.size(); ++t) {
            demand[t] += p.demand[t];
            generation[t] += g[t];
        }
        battery = combine_batteries(battery, p.battery);
        gen_dep += generator_cost(p.generator, years);
    }

    CoalitionProfile out{
        .members = {},
        .demand = TimeSeries(std::move(demand), members.front().demand.step_hours()),
        .generation = TimeSeries(std::move(generation), members.front().demand.step_hours()),
        .battery = std::move(battery),
        .generator_depreciation = gen_dep,
        .standalone_bill_sum = std::accumulate(standalone_bills.begin(), standalone_bills.end(), 0.0),
    };
    if (ids.empty()) {
        out.members.resize(members.size());
        std::iota(out.members.begin(), out.members.end(), AgentId{0});
    } else {
        out.members.assign(ids.begin(), ids.end());
        std::sort(out.members.begin(), out.members.end());
        if (std::adjacent_find(out.members.begin(), out.members.end()) != out.members.end())
            throw ValidationError("aggregate: duplicate member id");
    }
    out.digest = digest_of(out.demand, out.generation, out.battery.capacity_kwh);
    return out;
}

CoalitionProfile merge(const CoalitionProfile& a, const CoalitionProfile& b) {
    require_disjoint(a, b);
    CoalitionProfile out{
        .members = {},
        .demand = a.demand + b.demand,
        .generation = a.generation + b.generation,
        .battery = combine_batteries(a.battery, b.battery),
        .generator_depreciation = a.generator_depreciation + b.generator_depreciation,
        .standalone_bill_sum = a.standalone_bill_sum + b.standalone_bill_sum,
    };
    out.members.reserve(a.members.size() + b.members.size());
    std::merge(a.members.begin(), a.members.end(), b.members.begin(), b.members.end(),
               std::back_inserter(out.members));
    out.digest = digest_of(out.demand, out.generation, out.battery.capacity_kwh);
    return out;
}

Evaluation evaluate(const CoalitionProfile& coalition, const TariffSchedule& tariffs) {
    BatteryTrace trace = dispatch(coalition.demand, coalition.generation, coalition.battery);
    BillBreakdown b = bill(trace, tariffs, coalition.battery, coalition.generator_depreciation);
    return {b, std::move(trace)};
}

TradeSchedule::TradeSchedule(TimeSeries energy_kwh) : energy_(std::move(energy_kwh)) {
    require_nonnegative(energy_, "trade schedule");
}

TradeAllocation derive_trades(const CoalitionProfile& a, const CoalitionProfile& b, const BatteryTrace& joint) {
    require_disjoint(a, b);
    require_same_shape(a.demand, b.demand, "derive_trades");
    require_same_shape(a.demand, joint.power_kw, "derive_trades");

    const std::size_t horizon = a.demand.size();
    const double dt = a.demand.step_hours();
    const double cap_a = a.battery.capacity_kwh;
    const double cap_b = b.battery.capacity_kwh;
    const double lo_a = a.battery.min_kwh(), hi_a = a.battery.max_kwh();
    const double lo_b = b.battery.min_kwh(), hi_b = b.battery.max_kwh();

    std::vector<double> pa(horizon), pb(horizon), sa(horizon), sb(horizon);
    std::vector<double> ea(horizon), eb(horizon), qa(horizon), qb(horizon);
    std::vector<double> a_to_b(horizon, 0.0), b_to_a(horizon, 0.0);

    double prev_joint = a.battery.initial_kwh() + b.battery.initial_kwh();
    double prev_a = a.battery.initial_kwh();
    for (std::size_t t = 0; t < horizon; ++t) {
        const double prev_b = prev_joint - prev_a;
        const double power = joint.power_kw[t];
        double share_a = cap_a + cap_b > 0.0 ? cap_a / (cap_a + cap_b) : 0.5;
        if (power > 0.0) {
            const double ra = std::max(hi_a - prev_a, 0.0), rb = std::max(hi_b - prev_b, 0.0);
            if (ra + rb > 0.0) share_a = ra / (ra + rb);
        } else if (power < 0.0) {
            const double ra = std::max(prev_a - lo_a, 0.0), rb = std::max(prev_b - lo_b, 0.0);
            if (ra + rb > 0.0) share_a = ra / (ra + rb);
        }
        pa[t] = power * share_a;
        pb[t] = power - pa[t];

        const double joint_soc = joint.soc_kwh[t];
        sa[t] = prev_a + (joint_soc - prev_joint) * share_a;
        sb[t] = joint_soc - sa[t];

        ea[t] = a.demand[t] - a.generation[t] + pa[t];
        eb[t] = b.demand[t] - b.generation[t] + pb[t];
        qa[t] = ea[t];
        qb[t] = eb[t];
        if (ea[t] < 0.0 && eb[t] > 0.0) {
            const double x = std::min(-ea[t], eb[t]);
            a_to_b[t] = x * dt;
            qa[t] = ea[t] + x;
            qb[t] = eb[t] - x;
        } else if (eb[t] < 0.0 && ea[t] > 0.0) {
            const double x = std::min(-eb[t], ea[t]);
            b_to_a[t] = x * dt;
            qa[t] = ea[t] - x;
            qb[t] = eb[t] + x;
        }

        prev_joint = joint_soc;
        prev_a = sa[t];
    }

    auto ts = [dt](std::vector<double>& v) { return TimeSeries(std::move(v), dt); };
    return TradeAllocation{
        .a = {ts(pa), ts(sa), ts(ea), ts(qa)},
        .b = {ts(pb), ts(sb), ts(eb), ts(qb)},
        .a_to_b = TradeSchedule(ts(a_to_b)),
        .b_to_a = TradeSchedule(ts(b_to_a)),
    };
}

PostTradeBills post_trade_bills(const CoalitionProfile& a, const CoalitionProfile& b,
                                const TradeAllocation& allocation, const Evaluation& joint,
                                const TariffSchedule& tariffs) {
    const double cap = a.battery.capacity_kwh + b.battery.capacity_kwh;
    const double share_a = cap > 0.0 ? a.battery.capacity_kwh / cap : 0.5;
    PostTradeBills out{energy_bill(allocation.a.post_trade_kw, tariffs),
                       energy_bill(allocation.b.post_trade_kw, tariffs)};
    out.a.battery_depreciation = joint.bill.battery_depreciation * share_a;
    out.b.battery_depreciation = joint.bill.battery_depreciation - out.a.battery_depreciation;
    out.a.generator_depreciation = a.generator_depreciation;
    out.b.generator_depreciation = b.generator_depreciation;
    return out;
}

namespace {

// A merge that would lose money yields no contract and a reported gain of 0;
// the raw value stays recoverable from the three bills.
void guard_contract(const CoalitionProfile& a, const CoalitionProfile& b, const Evaluation& joint,
                    PairwiseResult& out) {
    if (out.gain.gt < 0.0) {
        out.gain.gt = 0.0;
        return;
    }
    TradeAllocation alloc = derive_trades(a, b, joint.trace);
    out.contract = EnergyContract{a.members, b.members, std::move(alloc.a_to_b), std::move(alloc.b_to_a), out.gain.gt};
}

}  // namespace

PairwiseResult pairwise_gt(const CoalitionProfile& a, const CoalitionProfile& b, const TariffSchedule& tariffs) {
    require_disjoint(a, b);
    const double bill_a = evaluate(a, tariffs).bill.total();
    const double bill_b = evaluate(b, tariffs).bill.total();
    const Evaluation joint = evaluate(merge(a, b), tariffs);
    PairwiseResult out;
    out.gain = {bill_a + bill_b - joint.bill.total(), bill_a, bill_b, joint.bill.total()};
    guard_contract(a, b, joint, out);
    return out;
}

std::vector<double> candidate_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || hi < lo) throw ValidationError("candidate grid needs step > 0 and hi >= lo");
    const auto n = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = lo + static_cast<double>(i) * step;
    return out;
}

namespace {

// Index of the smallest value; near-ties go to the smaller candidate.
std::size_t argmin_toward_smaller(std::span<const double> candidates, std::span<const double> values) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        const double tol = 1e-9 * std::max(1.0, std::abs(values[best]));
        if (values[i] < values[best] - tol ||
            (std::abs(values[i] - values[best]) <= tol && candidates[i] < candidates[best])) {
            best = i;
        }
    }
    return best;
}

}  // namespace

double size_battery(const ProsumerSpec& prosumer, const TariffSchedule& tariffs,
                    std::span<const double> candidates_kwh, double power_per_kwh) {
    if (candidates_kwh.empty()) throw ValidationError("size_battery needs candidates");
    const TimeSeries generation = prosumer.generation();
    const double gen_dep = generator_cost(prosumer.generator, horizon_years(prosumer.demand.size(),
                                                                            prosumer.demand.step_hours()));
    std::vector<double> totals;
    totals.reserve(candidates_kwh.size());
    for (double c : candidates_kwh) {
        if (c < 0.0) throw ValidationError("battery candidate must be nonnegative");
        BatterySpec spec = prosumer.battery;
        spec.capacity_kwh = c;
        spec.max_power_kw = c * power_per_kwh;
        totals.push_back(bill(dispatch(prosumer.demand, generation, spec), tariffs, spec, gen_dep).total());
    }
    return candidates_kwh[argmin_toward_smaller(candidates_kwh, totals)];
}

double size_generation(const ProsumerSpec& prosumer, const TimeSeries& resource, const TariffSchedule& tariffs,
                       std::span<const double> candidates_kw) {
    if (candidates_kw.empty()) throw ValidationError("size_generation needs candidates");
    BatterySpec none = prosumer.battery;
    none.capacity_kwh = 0.0;
    none.max_power_kw = 0.0;
    const double years = horizon_years(prosumer.demand.size(), prosumer.demand.step_hours());
    std::vector<double> totals;
    totals.reserve(candidates_kw.size());
    for (double c : candidates_kw) {
        if (c < 0.0) throw ValidationError("generation candidate must be nonnegative");
        GeneratorSpec gen = prosumer.generator;
        gen.installed_kw = c;
        gen.resource = resource;
        const auto trace = dispatch(prosumer.demand, gen.generation(), none);
        totals.push_back(bill(trace, tariffs, none, generator_cost(gen, years)).total());
    }
    return candidates_kw[argmin_toward_smaller(candidates_kw, totals)];
}

GainCache::Key GainCache::key(const CoalitionProfile& a, const CoalitionProfile& b) {
    Key k;
    k.ids.reserve(a.members.size() + b.members.size() + 1);
    k.ids.insert(k.ids.end(), a.members.begin(), a.members.end());
    k.ids.push_back(kKeySentinel);
    k.ids.insert(k.ids.end(), b.members.begin(), b.members.end());
    k.digest_a = a.digest;
    k.digest_b = b.digest;
    return k;
}

std::size_t GainCache::KeyHash::operator()(const Key& k) const noexcept {
    std::uint64_t h = mix(k.digest_a, k.digest_b);
    for (AgentId id : k.ids) h = mix(h, id);
    return static_cast<std::size_t>(h);
}

std::optional<PairGain> GainCache::find(const Key& key) const {
    std::shared_lock lock(mutex_);
    const auto it = map_.find(key);
    if (it == map_.end()) return std::nullopt;
    return it->second;
}

void GainCache::insert(Key key, PairGain gain) {
    std::unique_lock lock(mutex_);
    map_.insert_or_assign(std::move(key), gain);
}

std::size_t GainCache::size() const {
    std::shared_lock lock(mutex_);
    return map_.size();
}

void GainCache::clear() {
    std::unique_lock lock(mutex_);
    map_.clear();
}

JointProfileOptimiser::JointProfileOptimiser(std::vector<ProsumerSpec> community, TariffSchedule tariffs)
    : community_(std::move(community)), tariffs_(std::move(tariffs)) {
    if (community_.empty()) throw ValidationError("community is empty");
    standalone_bills_.reserve(community_.size());
    singletons_.reserve(community_.size());
    for (std::size_t i = 0; i < community_.size(); ++i) {
        const auto& p = community_[i];
        p.validate();
        require_same_shape(p.demand, tariffs_.import_pence(), "community horizon");
        const AgentId id = static_cast<AgentId>(i);
        auto single = aggregate(std::span(&p, 1), std::span(&id, 1));
        const double b = evaluate(single, tariffs_).bill.total();
        single.standalone_bill_sum = b;
        standalone_bills_.push_back(b);
        singletons_.push_back(std::make_shared<const CoalitionProfile>(std::move(single)));
    }
}

double JointProfileOptimiser::standalone_bill_sum() const {
    return std::accumulate(standalone_bills_.begin(), standalone_bills_.end(), 0.0);
}

double JointProfileOptimiser::coalition_bill(const CoalitionProfile& c) const {
    if (c.members.size() == 1) return standalone_bills_.at(c.members.front());
    {
        std::shared_lock lock(bill_mutex_);
        const auto it = bills_.find(c.digest);
        if (it != bills_.end()) return it->second;
    }
    const double b = evaluate(c, tariffs_).bill.total();
    std::unique_lock lock(bill_mutex_);
    bills_.emplace(c.digest, b);
    return b;
}

PairGain JointProfileOptimiser::gain(const CoalitionProfile& a, const CoalitionProfile& b) const {
    require_disjoint(a, b);
    const bool swapped = b.representative() < a.representative();
    const CoalitionProfile& lo = swapped ? b : a;
    const CoalitionProfile& hi = swapped ? a : b;
    auto key = GainCache::key(lo, hi);

    PairGain g;
    if (auto hit = cache_.find(key)) {
        g = *hit;
    } else {
        const CoalitionProfile joint = merge(lo, hi);
        g.bill_a = coalition_bill(lo);
        g.bill_b = coalition_bill(hi);
        g.joint_bill = coalition_bill(joint);
        g.gt = g.bill_a + g.bill_b - g.joint_bill;
        cache_.insert(std::move(key), g);
    }
    if (swapped) std::swap(g.bill_a, g.bill_b);
    return g;
}

PairwiseResult JointProfileOptimiser::contract(const CoalitionProfile& a, const CoalitionProfile& b) const {
    require_disjoint(a, b);
    const Evaluation joint = evaluate(merge(a, b), tariffs_);
    PairwiseResult out;
    out.gain.bill_a = coalition_bill(a);
    out.gain.bill_b = coalition_bill(b);
    out.gain.joint_bill = joint.bill.total();
    out.gain.gt = out.gain.bill_a + out.gain.bill_b - out.gain.joint_bill;
    guard_contract(a, b, joint, out);
    return out;
}

double JointProfileOptimiser::grand_coalition_bill() const {
    if (!grand_bill_) {
        std::vector<double> bills(standalone_bills_);
        const auto all = aggregate(community_, {}, bills);
        grand_bill_ = coalition_bill(all);
    }
    return *grand_bill_;
}

}  // namespace p2p
