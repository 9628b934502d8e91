// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>

#include <fmt/format.h>

#include "../support/oracles.hpp"
#include "p2p/battery.hpp"
#include "p2p/billing.hpp"
#include "p2p/experiments.hpp"

using namespace p2p;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and thresholds.
constexpr std::size_t kCommunities = 5;
constexpr std::size_t kCommunitySize = 100;
constexpr double kConvergenceGtPct = 90.0;
constexpr double kConvergenceContractsPct = 10.0;
constexpr double kRuntimeLimitSeconds = 600.0;
constexpr double kGtAt30Lo = 50.0, kGtAt30Hi = 75.0;
constexpr double kGtAt50Lo = 70.0, kGtAt50Hi = 90.0;
constexpr double kEquivalenceRel = 0.005;
constexpr double kDfExampleRel = 1e-12;
constexpr double kDfPropertyRel = 1e-12;
constexpr double kSumConstraintTol = 1e-9;
constexpr double kRebillTol = 1e-6;
constexpr double kBillOracleTol = 1e-9;

struct Verdict {
    int criterion;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(int criterion, bool pass, std::string detail) {
    std::cout << fmt::format("criterion {}: {} ({})", criterion, pass ? "PASS" : "FAIL", detail) << std::endl;
    verdicts.push_back({criterion, pass, std::move(detail)});
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct CommunityRun {
    std::uint64_t seed = 0;
    std::vector<ProsumerSpec> prosumers;
    std::optional<TariffSchedule> tariffs;  // set once the community is built
    SimulationTrace central;
    SimulationTrace negotiation;
    double seconds = 0.0;
};

std::vector<CommunityRun> run_communities() {
    ScenarioConfig cfg;
    cfg.community.size = kCommunitySize;
    std::vector<CommunityRun> out;
    for (std::size_t c = 0; c < kCommunities; ++c) {
        const auto start = std::chrono::steady_clock::now();
        CommunityRun run;
        run.seed = c + 1;
        Community community = build_community(cfg, run.seed);
        const JointProfileOptimiser optimiser(community.prosumers, community.tariffs);
        MarketSettings central = cfg.market;
        central.kind = MarketKind::central;
        MarketSettings negotiation = cfg.market;
        negotiation.kind = MarketKind::negotiation;
        UnconstrainedGrid grid_a, grid_b;
        run.central = run_market(optimiser, grid_a, central);
        run.negotiation = run_market(optimiser, grid_b, negotiation);
        run.seconds = seconds_since(start);
        run.prosumers = std::move(community.prosumers);
        run.tariffs = std::move(community.tariffs);
        std::cout << fmt::format("  community seed {}: DF {:.3f}, GT_N {:.1f} p, central {} contracts "
                                 "(final {:.2f}%), negotiation {} contracts (final {:.2f}%), {:.1f} s",
                                 run.seed, community.diversity, run.central.grand_gt, run.central.rounds.size(),
                                 run.central.final_gt_pct(), run.negotiation.rounds.size(),
                                 run.negotiation.final_gt_pct(), run.seconds)
                  << std::endl;
        out.push_back(std::move(run));
    }
    return out;
}

void criterion_1(const std::vector<CommunityRun>& runs) {
    bool pass = true;
    std::string detail;
    for (const auto& r : runs) {
        for (const auto* t : {&r.central, &r.negotiation}) {
            const auto needed = contracts_for_gt(*t, kConvergenceGtPct);
            pass = pass && needed && *needed <= kConvergenceContractsPct;
            detail += fmt::format("{}{}/{}={}", detail.empty() ? "" : " ", r.seed, t->market.substr(0, 3),
                                  needed ? fmt::format("{:.2f}%", *needed) : "never");
        }
        pass = pass && r.seconds <= kRuntimeLimitSeconds;
    }
    double slowest = 0.0;
    for (const auto& r : runs) slowest = std::max(slowest, r.seconds);
    report(1, pass,
           fmt::format("contracts% to reach {}% of GT_N: {}; slowest community {:.0f} s", kConvergenceGtPct, detail,
                       slowest));
}

void criterion_2(const std::vector<CommunityRun>& runs) {
    bool pass = true;
    std::string detail;
    for (const auto& r : runs) {
        for (const auto* t : {&r.central, &r.negotiation}) {
            const double at30 = gt_pct_at_participation(*t, 30.0);
            const double at50 = gt_pct_at_participation(*t, 50.0);
            pass = pass && at30 >= kGtAt30Lo && at30 <= kGtAt30Hi && at50 >= kGtAt50Lo && at50 <= kGtAt50Hi;
            detail += fmt::format("{}{}/{}={:.1f}|{:.1f}", detail.empty() ? "" : " ", r.seed, t->market.substr(0, 3),
                                  at30, at50);
        }
    }
    report(2, pass, fmt::format("GT% at 30|50% participation: {}", detail));
}

void criterion_3(const std::vector<CommunityRun>& runs) {
    bool pass = true;
    double worst = 0.0;
    for (const auto& r : runs) {
        const double a = r.central.final_gt(), b = r.negotiation.final_gt();
        const double rel = std::abs(a - b) / std::max(std::abs(a), 1e-12);
        worst = std::max(worst, rel);
        pass = pass && rel <= kEquivalenceRel;
    }
    report(3, pass, fmt::format("largest relative gap in terminal GT {:.4f}% (limit {:.1f}%)", 100 * worst,
                                100 * kEquivalenceRel));
}

void criterion_4() {
    ScenarioConfig cfg;
    cfg.community.size = kCommunitySize;
    cfg.sweep.values = {1.0, 1.1, 1.2, 1.3, 1.4, 1.5};
    cfg.sweep.communities = kCommunities;
    const auto out = fs::temp_directory_path() / "p2p_acceptance_sweep";
    fs::remove_all(out);
    const auto cells = df_sweep(cfg, out);

    std::map<double, std::vector<double>> gt_pct, part80;
    std::size_t exhausted = 0;
    for (const auto& c : cells) {
        if (c.status != "ok") {
            ++exhausted;
            continue;
        }
        gt_pct[c.target_df].push_back(c.gt_pct_of_bill);
        part80[c.target_df].push_back(c.participation_80);
    }
    bool pass = exhausted == 0 && gt_pct.size() == cfg.sweep.values.size();
    std::string medians;
    double prev = -1.0;
    for (const auto& [df, values] : gt_pct) {
        const double m = median(values);
        pass = pass && m >= prev;
        prev = m;
        medians += fmt::format("{}{:.1f}:{:.2f}", medians.empty() ? "" : " ", df, m);
    }
    const double p_lo = part80.count(1.0) ? median(part80[1.0]) : 100.0;
    const double p_hi = part80.count(1.5) ? median(part80[1.5]) : 0.0;
    pass = pass && p_lo < p_hi;
    report(4, pass,
           fmt::format("median GT% of bill by DF {}; participation for 80% GT {:.1f} at DF 1.0 vs {:.1f} at DF 1.5; "
                       "{} cells exhausted",
                       medians, p_lo, p_hi, exhausted));
}

void criterion_5() {
    std::mt19937_64 rng(2024);
    std::size_t mismatches = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        oracle::GridInstance in;
        in.capacity = static_cast<int>(rng() % 31);  // up to 3 kWh in tenths
        in.max_step = 1 + static_cast<int>(rng() % 8);
        const std::size_t n = 1 + rng() % 6;
        std::vector<double> d(n), g(n);
        for (std::size_t t = 0; t < n; ++t) {
            const int dt = static_cast<int>(rng() % 16), gt = static_cast<int>(rng() % 16);
            in.net.push_back(dt - gt);
            d[t] = dt * 0.2;  // tenths of a kWh over half an hour, as kW
            g[t] = gt * 0.2;
        }
        BatterySpec b;
        b.capacity_kwh = in.capacity / 10.0;
        b.max_power_kw = in.max_step * 0.2;
        b.cost_per_kwh = 0.0;
        const auto tr = dispatch(TimeSeries(d), TimeSeries(g), b);
        const double heuristic = bill(tr, flat_tariffs(16, 0, n), b, 0.0).total();
        const double enumerated = oracle::enumerate_optimum(in);
        const double dp = oracle::dp_optimum(in);
        const double gap = std::max(std::abs(heuristic - enumerated), std::abs(dp - enumerated));
        worst = std::max(worst, gap);
        if (gap > kBillOracleTol) ++mismatches;
    }
    report(5, mismatches == 0,
           fmt::format("{} of 200 instances differ from enumeration; largest gap {:.2e} p", mismatches, worst));
}

std::vector<double> soc_walk(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> step(-30.0, 30.0);
    std::vector<double> s{std::uniform_real_distribution<double>(0.0, 100.0)(rng)};
    for (std::size_t i = 1; i < n; ++i) s.push_back(std::clamp(s.back() + step(rng), 0.0, 100.0));
    return s;
}

double rel_err(double got, double want) { return std::abs(got - want) / std::max(std::abs(want), 1e-300); }

void criterion_6() {
    const CycleLifeCurve suite({{20, 10000}, {60, 4000}, {100, 3000}}, CycleLifeCurve::Interpolation::linear);
    const std::vector<CycleRecord> regular{{100, 0, 1.0, CycleKind::regular}};
    const std::vector<CycleRecord> irregular{{80, 40, 0.5, CycleKind::irregular}};
    BatterySpec b;
    b.capacity_kwh = 2.0;
    b.max_power_kw = 1.0;
    b.cost_per_kwh = 15000.0;
    b.lifetime_years = 20.0;
    const double e1 = rel_err(depreciation_factor(regular, suite), 1.0 / 3000);
    const double e2 = rel_err(depreciation_factor(irregular, suite), 7.5e-5);
    const double e3 = rel_err(battery_depreciation_cost(b, 1.0, 0.01), 300.0);
    bool pass = e1 <= kDfExampleRel && e2 <= kDfExampleRel && e3 <= kDfExampleRel;

    const auto curve = CycleLifeCurve::default_curve();
    std::mt19937_64 rng(77);
    std::size_t additivity = 0, reversal = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        auto walk = soc_walk(rng, 2 + rng() % 80);
        if (trial % 3 == 0) walk[rng() % walk.size()] = 100.0;
        const auto cycles = rainflow_count(walk);
        const double df = depreciation_factor(cycles, curve);
        std::vector<CycleRecord> halves;
        for (const auto& c : cycles) {
            if (c.weight == 1.0) {
                halves.push_back({c.start_soc_pct, c.end_soc_pct, 0.5, c.kind});
                halves.push_back({c.end_soc_pct, c.start_soc_pct, 0.5, c.kind});
            } else {
                halves.push_back(c);
            }
        }
        if (std::abs(depreciation_factor(halves, curve) - df) > 1e-18 + kDfPropertyRel * df) ++additivity;
        std::reverse(walk.begin(), walk.end());
        const double backward = depreciation_factor(rainflow_count(walk), curve);
        if (std::abs(backward - df) > 1e-18 + kDfPropertyRel * df) ++reversal;
    }
    pass = pass && additivity == 0 && reversal == 0;
    report(6, pass,
           fmt::format("example errors {:.1e}, {:.1e}, {:.1e}; 1000 walks: {} additivity and {} reversal failures",
                       e1, e2, e3, additivity, reversal));
}

void criterion_7(const CommunityRun& run) {
    std::mt19937_64 rng(7);
    const std::size_t n = run.prosumers.size();
    std::size_t constraint_failures = 0, rebill_failures = 0, negative = 0, guard_failures = 0;
    double worst_sum = 0.0, worst_bill = 0.0, most_negative = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const AgentId i = rng() % n;
        AgentId j = rng() % (n - 1);
        if (j >= i) ++j;
        const std::vector<ProsumerSpec> members{run.prosumers[i], run.prosumers[j]};
        const std::vector<AgentId> ia{i}, ib{j};
        const auto a = aggregate(std::span(members).subspan(0, 1), ia);
        const auto b = aggregate(std::span(members).subspan(1, 1), ib);
        const auto ab = merge(a, b);
        const auto joint = evaluate(ab, *run.tariffs);
        const auto alloc = derive_trades(a, b, joint.trace);
        for (std::size_t t = 0; t < ab.demand.size(); ++t) {
            const double e_joint = ab.demand[t] - ab.generation[t] + joint.trace.power_kw[t];
            const double soc_gap = std::abs(alloc.a.soc_kwh[t] + alloc.b.soc_kwh[t] - joint.trace.soc_kwh[t]);
            const double net_gap = std::abs(alloc.a.post_trade_kw[t] + alloc.b.post_trade_kw[t] - e_joint);
            worst_sum = std::max({worst_sum, soc_gap, net_gap});
        }
        if (worst_sum > kSumConstraintTol) ++constraint_failures;
        const auto post = post_trade_bills(a, b, alloc, joint, *run.tariffs);
        const double bill_gap = std::abs(post.a.total() + post.b.total() - joint.bill.total());
        worst_bill = std::max(worst_bill, bill_gap);
        if (bill_gap > kRebillTol) ++rebill_failures;
        const auto pair = pairwise_gt(a, b, *run.tariffs);
        const double raw = pair.gain.bill_a + pair.gain.bill_b - pair.gain.joint_bill;
        if (raw < 0.0) {
            ++negative;
            most_negative = std::min(most_negative, raw);
        }
        if (pair.gain.gt < 0.0 || pair.gain.gt != std::max(raw, 0.0) || pair.contract.has_value() != (raw >= 0.0))
            ++guard_failures;
    }
    report(7, constraint_failures == 0 && rebill_failures == 0 && guard_failures == 0,
           fmt::format("largest sum-constraint gap {:.1e}; largest re-billing gap {:.1e} p; reported GT >= 0 on all "
                       "pairs with {} guard failures; {} pairs would lose money merged (raw GT down to {:.4f} p) and "
                       "got no contract",
                       worst_sum, worst_bill, guard_failures, negative, most_negative));
}

void criterion_8(const std::vector<CommunityRun>& runs) {
    bool pass = true;
    const AgentStrategy s{1.5, 9.0, 20};
    pass = pass && concession_offer(s, 0) == 9.0 && concession_offer(s, 20) == 1.5;

    const std::vector<std::vector<PeerGain>> space{{{1, 1, 10.0}}, {{0, 0, 10.0}}};
    const std::vector<AgentStrategy> sym{{0.0, 10.0, 10}, {0.0, 10.0, 10}};
    const auto res = offer_phase(space, sym, kDefaultPeers);
    bool split = !res.accepted.empty();
    for (const auto& o : res.accepted) split = split && o.round == 5 && o.claimed_value == 5.0 && o.gt == 10.0;
    pass = pass && split;

    std::size_t iterations = 0, violations = 0;
    for (const auto& r : runs) {
        const auto& t = r.negotiation;
        for (std::size_t i = 0; i < t.rounds.size(); ++i) {
            ++iterations;
            const auto& rec = t.rounds[i];
            // one clearing per iteration removes exactly one coalition
            if (rec.round != i + 1 || rec.coalition_sizes.size() != t.prosumers - (i + 1)) ++violations;
        }
    }
    pass = pass && violations == 0;
    report(8, pass,
           fmt::format("offer boundaries exact; symmetric split {}; {} iterations checked, {} with more than one "
                       "clearing",
                       split ? "5/5 at r=5" : "wrong", iterations, violations));
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void criterion_9() {
    bool pass = true;
    std::size_t files = 0;
    for (const auto kind : {MarketKind::central, MarketKind::negotiation}) {
        ScenarioConfig cfg;
        cfg.seed = 11;
        cfg.community.size = 30;
        cfg.market.kind = kind;
        const auto root = fs::temp_directory_path() / "p2p_acceptance_determinism" / to_string(kind);
        fs::remove_all(root);
        simulate(cfg, root / "a");
        simulate(cfg, root / "b");
        for (const auto& entry : fs::directory_iterator(root / "a")) {
            ++files;
            const auto other = root / "b" / entry.path().filename();
            pass = pass && fs::exists(other) && slurp(entry.path()) == slurp(other);
        }
    }
    report(9, pass, fmt::format("{} output files compared byte for byte across reruns", files));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    try {
        criterion_5();
        criterion_6();
        const auto runs = run_communities();
        criterion_1(runs);
        criterion_2(runs);
        criterion_3(runs);
        criterion_7(runs.front());
        criterion_8(runs);
        criterion_9();
        criterion_4();
    } catch (const std::exception& e) {
        std::cout << "acceptance aborted: " << e.what() << std::endl;
        return 2;
    }
    const auto passed = std::count_if(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.pass; });
    std::cout << fmt::format("{} of {} criteria passed in {:.0f} s", passed, verdicts.size(), seconds_since(start))
              << std::endl;
    const bool all = passed == static_cast<std::ptrdiff_t>(verdicts.size());
    return all ? 0 : 1;
}
