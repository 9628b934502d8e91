#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "../support/oracles.hpp"
#include "fixtures.hpp"
#include "p2p/battery.hpp"
#include "p2p/errors.hpp"

using namespace p2p;

namespace {

BatterySpec two_kwh() { return fixture::battery(2.0, 2.0); }

CycleLifeCurve suite_curve() {
    return CycleLifeCurve({{20, 10000}, {60, 4000}, {100, 3000}}, CycleLifeCurve::Interpolation::linear);
}

void expect_series(const TimeSeries& s, std::vector<double> expected) {
    ASSERT_EQ(s.size(), expected.size());
    for (std::size_t t = 0; t < expected.size(); ++t) EXPECT_NEAR(s[t], expected[t], 1e-12) << "step " << t;
}

std::vector<double> random_walk(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> step(-30.0, 30.0);
    std::vector<double> s{std::uniform_real_distribution<double>(0.0, 100.0)(rng)};
    for (std::size_t i = 1; i < n; ++i) s.push_back(std::clamp(s.back() + step(rng), 0.0, 100.0));
    return s;
}

double df_of(const std::vector<double>& soc) {
    const auto cycles = rainflow_count(soc);
    return depreciation_factor(cycles, CycleLifeCurve::default_curve());
}

}  // namespace

TEST(Dispatch, HandTrace) {
    const auto tr = dispatch(TimeSeries({0, 0, 0, 2}), TimeSeries({2, 2, 2, 0}), two_kwh());
    expect_series(tr.soc_kwh, {1, 2, 2, 1});
    expect_series(tr.exports_kwh, {0, 0, 1, 0});
    expect_series(tr.imports_kwh, {0, 0, 0, 0});
    expect_series(tr.power_kw, {2, 2, 0, -2});
    expect_series(tr.soc_pct, {50, 100, 100, 50});
}

TEST(Dispatch, IdleBattery) {
    const auto tr = dispatch(TimeSeries({0, 0}), TimeSeries({0, 0}), two_kwh());
    expect_series(tr.power_kw, {0, 0});
    expect_series(tr.soc_kwh, {0, 0});
    expect_series(tr.imports_kwh, {0, 0});
    expect_series(tr.exports_kwh, {0, 0});
}

TEST(Dispatch, EmptyBatteryForcesImport) {
    const auto tr = dispatch(TimeSeries({4}), TimeSeries({0}), two_kwh());
    expect_series(tr.power_kw, {0});
    expect_series(tr.imports_kwh, {2});
}

TEST(Dispatch, EfficiencyAppliedInsideSoc) {
    auto b = two_kwh();
    b.charge_efficiency = 0.9;
    b.discharge_efficiency = 0.8;
    // 1 kW surplus for half an hour stores 0.45 kWh; then a 2 kW deficit can
    // draw at most 0.8 * 0.45 / 0.5 = 0.72 kW.
    const auto tr = dispatch(TimeSeries({0, 2}), TimeSeries({1, 0}), b);
    EXPECT_NEAR(tr.soc_kwh[0], 0.45, 1e-12);
    EXPECT_NEAR(tr.power_kw[1], -0.72, 1e-12);
    EXPECT_NEAR(tr.soc_kwh[1], 0.0, 1e-12);
    EXPECT_NEAR(tr.imports_kwh[1], (2 - 0.72) * 0.5, 1e-12);
}

TEST(Dispatch, InvariantsOnRandomInstances) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 4.0);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + rng() % 40;
        std::vector<double> d(n), g(n);
        for (std::size_t t = 0; t < n; ++t) d[t] = u(rng), g[t] = u(rng);
        BatterySpec b = fixture::battery(u(rng) * 2, u(rng));
        b.soc_min_pct = 10;
        b.soc_max_pct = 90;
        b.initial_soc_pct = 10 + 80 * (u(rng) / 4);
        b.charge_efficiency = 0.7 + 0.3 * u(rng) / 4;
        b.discharge_efficiency = 0.7 + 0.3 * u(rng) / 4;
        const TimeSeries D(d), G(g);
        const auto tr = dispatch(D, G, b);
        for (std::size_t t = 0; t < n; ++t) {
            if (b.capacity_kwh > 0) {
                EXPECT_GE(tr.soc_pct[t], b.soc_min_pct - 1e-9);
                EXPECT_LE(tr.soc_pct[t], b.soc_max_pct + 1e-9);
            }
            EXPECT_LE(std::abs(tr.power_kw[t]), b.max_power_kw + 1e-12);
            EXPECT_GE(tr.imports_kwh[t], 0.0);
            EXPECT_GE(tr.exports_kwh[t], 0.0);
            EXPECT_FALSE(tr.imports_kwh[t] > 0 && tr.exports_kwh[t] > 0);
            // energy balance at the meter: (d - g + p) dt = imports - exports
            const double e = (d[t] - g[t] + tr.power_kw[t]) * 0.5;
            EXPECT_NEAR(e, tr.imports_kwh[t] - tr.exports_kwh[t], 1e-12);
            // never charges from, or discharges into, the grid
            if (tr.power_kw[t] > 0) EXPECT_LE(tr.power_kw[t], g[t] - d[t] + 1e-12);
            if (tr.power_kw[t] < 0) EXPECT_LE(-tr.power_kw[t], d[t] - g[t] + 1e-12);
        }
    }
}

TEST(Dispatch, MatchesEnumerationOnSmallGrid) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        oracle::GridInstance in;
        in.capacity = static_cast<int>(rng() % 11);
        in.max_step = 1 + static_cast<int>(rng() % 6);
        const std::size_t n = 1 + rng() % 5;
        std::vector<double> d(n), g(n);
        for (std::size_t t = 0; t < n; ++t) {
            const int dt = static_cast<int>(rng() % 8), gt = static_cast<int>(rng() % 8);
            in.net.push_back(dt - gt);
            d[t] = dt * 0.2;  // tenths of kWh over half an hour, in kW
            g[t] = gt * 0.2;
        }
        const auto tr = dispatch(TimeSeries(d), TimeSeries(g), fixture::battery(in.capacity / 10.0, in.max_step * 0.2));
        const double heuristic = 16.0 * tr.imports_kwh.sum();
        EXPECT_NEAR(heuristic, oracle::enumerate_optimum(in), 1e-9);
        EXPECT_NEAR(oracle::dp_optimum(in), oracle::enumerate_optimum(in), 1e-9);
    }
}

TEST(TurningPoints, CollapsesPlateausAndMonotoneRuns) {
    const std::vector<double> s{100, 100, 80, 40, 40, 80, 90, 90};
    EXPECT_EQ(turning_points(s), (std::vector<double>{100, 40, 90}));
    EXPECT_EQ(turning_points(std::vector<double>{50, 50, 50}), (std::vector<double>{50}));
}

TEST(Rainflow, SingleRegularCycle) {
    const auto c = rainflow_count(std::vector<double>{100, 60, 100});
    // a lone excursion stays in the residue as two halves of the same range
    ASSERT_EQ(c.size(), 2u);
    for (const auto& r : c) {
        EXPECT_EQ(r.kind, CycleKind::regular);
        EXPECT_DOUBLE_EQ(r.depth_pct(), 40);
        EXPECT_DOUBLE_EQ(r.weight, 0.5);
    }
    // and costs exactly one full regular cycle of that depth
    const auto curve = suite_curve();
    EXPECT_NEAR(depreciation_factor(c, curve), 1.0 / curve.max_cycles(40), 1e-15);
}

TEST(Rainflow, FlatSeriesIsEmpty) {
    EXPECT_TRUE(rainflow_count(std::vector<double>{50, 50, 50}).empty());
    EXPECT_THROW(rainflow_count(std::vector<double>{}), ValidationError);
}

TEST(Rainflow, EnclosedRangeBecomesFullCycle) {
    const auto c = rainflow_count(std::vector<double>{0, 100, 40, 80, 0});
    const auto full = std::count_if(c.begin(), c.end(), [](const CycleRecord& r) { return r.weight == 1.0; });
    ASSERT_EQ(full, 1);
    const auto it = std::find_if(c.begin(), c.end(), [](const CycleRecord& r) { return r.weight == 1.0; });
    EXPECT_DOUBLE_EQ(it->start_soc_pct, 40);
    EXPECT_DOUBLE_EQ(it->end_soc_pct, 80);
    EXPECT_EQ(it->kind, CycleKind::irregular);
}

TEST(Rainflow, MixedSequenceKeepsUnclosedRangesAsHalves) {
    // 100,0,100,80,40,80: the 80 on the way down is not a reversal, so the
    // reversals are 100,0,100,40,80 and none of their inner ranges is
    // enclosed. The 100-0-100 excursion costs one full regular cycle.
    const auto c = rainflow_count(std::vector<double>{100, 0, 100, 80, 40, 80});
    ASSERT_EQ(c.size(), 4u);
    for (const auto& r : c) EXPECT_DOUBLE_EQ(r.weight, 0.5);
    EXPECT_EQ(c[0].kind, CycleKind::regular);
    EXPECT_EQ(c[1].kind, CycleKind::regular);
    EXPECT_EQ(c[2].kind, CycleKind::regular);
    EXPECT_EQ(c[3].kind, CycleKind::irregular);
    EXPECT_DOUBLE_EQ(c[3].start_soc_pct, 40);
    EXPECT_DOUBLE_EQ(c[3].end_soc_pct, 80);
}

TEST(Rainflow, AgreesWithScanningReference) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const auto walk = random_walk(rng, 2 + rng() % 60);
        auto ours = rainflow_count(walk);
        auto ref = oracle::rainflow(walk);
        ASSERT_EQ(ours.size(), ref.size());
        auto key = [](double a, double b, double w) { return std::tuple(w, std::min(a, b), std::max(a, b)); };
        std::vector<std::tuple<double, double, double>> x, y;
        for (const auto& r : ours) x.push_back(key(r.start_soc_pct, r.end_soc_pct, r.weight));
        for (const auto& r : ref) y.push_back(key(r.from, r.to, r.weight));
        std::sort(x.begin(), x.end());
        std::sort(y.begin(), y.end());
        EXPECT_EQ(x, y);
    }
}

TEST(Rainflow, EveryReversalConsumedOnce) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 300; ++trial) {
        const auto walk = random_walk(rng, 2 + rng() % 80);
        const auto points = turning_points(walk);
        const auto cycles = rainflow_count(walk);
        std::size_t full = 0, half = 0;
        for (const auto& c : cycles) (c.weight == 1.0 ? full : half)++;
        // each full cycle removes two reversals; the residue of m points gives m - 1 halves
        EXPECT_EQ(half + 1 + 2 * full, points.size());
    }
}

TEST(DepreciationFactor, SuiteExamples) {
    const auto curve = suite_curve();
    const std::vector<CycleRecord> regular{{100, 0, 1.0, CycleKind::regular}};
    const double df_regular = depreciation_factor(regular, curve);
    EXPECT_LE(std::abs(df_regular - 1.0 / 3000) / (1.0 / 3000), 1e-12);

    const std::vector<CycleRecord> irregular{{80, 40, 0.5, CycleKind::irregular}};
    const double df_irregular = depreciation_factor(irregular, curve);
    EXPECT_LE(std::abs(df_irregular - 7.5e-5) / 7.5e-5, 1e-12);

    EXPECT_EQ(depreciation_factor({}, curve), 0.0);
}

TEST(DepreciationFactor, HalfCyclesAddUpToFull) {
    const auto curve = CycleLifeCurve::default_curve();
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 100.0);
    for (int trial = 0; trial < 200; ++trial) {
        double a = u(rng), b = u(rng);
        const auto kind = trial % 2 ? CycleKind::irregular : CycleKind::regular;
        if (kind == CycleKind::regular) a = 100.0;
        const std::vector<CycleRecord> halves{{a, b, 0.5, kind}, {b, a, 0.5, kind}};
        const std::vector<CycleRecord> full{{a, b, 1.0, kind}};
        EXPECT_NEAR(depreciation_factor(halves, curve), depreciation_factor(full, curve), 1e-18);
    }
}

TEST(DepreciationFactor, TimeReversalInvariant) {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 500; ++trial) {
        auto walk = random_walk(rng, 2 + rng() % 60);
        if (trial % 3 == 0) walk[rng() % walk.size()] = 100.0;
        const double forward = df_of(walk);
        std::reverse(walk.begin(), walk.end());
        EXPECT_NEAR(df_of(walk), forward, 1e-15 + 1e-12 * forward);
    }
}

TEST(DepreciationFactor, EquivalentDodUsesSocMax) {
    const auto curve = suite_curve();
    // with an 80% ceiling, 80% SoC is equivalent to DoD 0 and 40% to DoD 50
    const std::vector<CycleRecord> c{{80, 40, 1.0, CycleKind::irregular}};
    const double expected = std::abs(1.0 / curve.max_cycles(0) - 1.0 / curve.max_cycles(50));
    EXPECT_NEAR(depreciation_factor(c, curve, 80.0), expected, 1e-18);
}

TEST(BatteryDepreciationCost, Examples) {
    BatterySpec b = fixture::battery(2, 1, 15000);
    b.lifetime_years = 20;
    const double cost = battery_depreciation_cost(b, 1.0, 0.01);
    EXPECT_LE(std::abs(cost - 300.0) / 300.0, 1e-12);
    EXPECT_NEAR(battery_depreciation_cost(b, 1.0, 0.2), 1500.0, 1e-9);
    EXPECT_NEAR(battery_depreciation_cost(b, 1.0, 0.0), 1500.0, 1e-9);
    EXPECT_THROW(battery_depreciation_cost(b, 0.0, 0.1), ValidationError);
    EXPECT_THROW(battery_depreciation_cost(b, 1.0, -0.1), ValidationError);
}
