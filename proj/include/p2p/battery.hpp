#pragma once

#include <span>
#include <vector>

#include "p2p/profiles.hpp"

namespace p2p {

/// Per-step outcome of running the self-consumption heuristic.
struct BatteryTrace {
    TimeSeries power_kw;     // charging positive
    TimeSeries soc_pct;      // percent of capacity
    TimeSeries soc_kwh;
    TimeSeries imports_kwh;  // e^b(t)
    TimeSeries exports_kwh;  // e^s(t)
};

/// Greedy self-consumption dispatch: surplus charges the battery and the rest
/// is exported; deficits discharge the battery and the rest is imported. The
/// battery never charges from, or discharges into, the grid.
BatteryTrace dispatch(const TimeSeries& demand, const TimeSeries& generation, const BatterySpec& spec);

enum class CycleKind { regular, irregular };

struct CycleRecord {
    double start_soc_pct;
    double end_soc_pct;
    double weight;  // 1 for a full cycle, 0.5 for a half cycle
    CycleKind kind;

    double depth_pct() const noexcept;
};

/// Regular cycles touch 100% SoC within this tolerance.
inline constexpr double kRegularCycleTolerance = 1e-6;

/// Strict local extrema of `series` plus both endpoints, with plateaus collapsed.
std::vector<double> turning_points(std::span<const double> series);

/// Four-point rain-flow counting. Enclosed ranges become full cycles, the
/// residual sequence is reported as half cycles in time order.
std::vector<CycleRecord> rainflow_count(std::span<const double> soc_pct);
std::vector<CycleRecord> rainflow_count(const TimeSeries& soc_pct);

/// Usage-driven fraction of battery life consumed by `cycles`:
/// sum of weight / N(DoD) over regular cycles plus
/// sum of weight * |1/N(DoD_eq(start)) - 1/N(DoD_eq(end))| over irregular ones,
/// where DoD_eq(s) = 100 - 100 * s / soc_max_pct.
double depreciation_factor(std::span<const CycleRecord> cycles, const CycleLifeCurve& curve,
                           double soc_max_pct = 100.0);

/// capacity * cost_per_kwh * horizon / max(1/DF, lifetime); DF == 0 uses the lifetime.
double battery_depreciation_cost(const BatterySpec& spec, double horizon_years, double depreciation_factor);

}  // namespace p2p
