#include "p2p/battery.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "p2p/errors.hpp"

namespace p2p {

BatteryTrace dispatch(const TimeSeries& demand, const TimeSeries& generation, const BatterySpec& spec) {
    require_same_shape(demand, generation, "dispatch");
    spec.validate();

    const std::size_t horizon = demand.size();
    const double dt = demand.step_hours();
    const double lo = spec.min_kwh();
    const double hi = spec.max_kwh();
    const double pmax = spec.max_power_kw;
    const double eta_c = spec.charge_efficiency;
    const double eta_d = spec.discharge_efficiency;

    std::vector<double> power(horizon, 0.0), soc_kwh(horizon), soc_pct(horizon);
    std::vector<double> imports(horizon, 0.0), exports(horizon, 0.0);

    double soc = spec.initial_kwh();
    for (std::size_t t = 0; t < horizon; ++t) {
        const double surplus = generation[t] - demand[t];
        if (surplus > 0.0) {
            const double headroom = std::max(hi - soc, 0.0);
            const double p = std::min({surplus, pmax, headroom / (eta_c * dt)});
            power[t] = p;
            soc = std::min(soc + eta_c * p * dt, hi);
            exports[t] = (surplus - p) * dt;
        } else if (surplus < 0.0) {
            const double deficit = -surplus;
            const double available = std::max(soc - lo, 0.0);
            const double p = std::min({deficit, pmax, eta_d * available / dt});
            power[t] = -p;
            soc = std::max(soc - p * dt / eta_d, lo);
            imports[t] = (deficit - p) * dt;
        }
        soc_kwh[t] = soc;
        soc_pct[t] = spec.capacity_kwh > 0.0 ? 100.0 * soc / spec.capacity_kwh : spec.initial_soc_pct;
    }

    return BatteryTrace{TimeSeries(std::move(power), dt), TimeSeries(std::move(soc_pct), dt),
                        TimeSeries(std::move(soc_kwh), dt), TimeSeries(std::move(imports), dt),
                        TimeSeries(std::move(exports), dt)};
}

double CycleRecord::depth_pct() const noexcept { return std::abs(start_soc_pct - end_soc_pct); }

std::vector<double> turning_points(std::span<const double> series) {
    std::vector<double> out;
    if (series.empty()) return out;
    out.reserve(series.size() / 4 + 2);
    out.push_back(series.front());
    int direction = 0;  // +1 rising, -1 falling
    for (std::size_t i = 1; i < series.size(); ++i) {
        const double x = series[i];
        const double last = out.back();
        if (x == last) continue;
        const int d = x > last ? 1 : -1;
        if (direction == 0 || d == direction) {
            if (out.size() == 1 && direction == 0) {
                out.push_back(x);
            } else {
                out.back() = x;
            }
        } else {
            out.push_back(x);
        }
        direction = d;
    }
    return out;
}

namespace {

CycleRecord make_cycle(double start, double end, double weight) {
    const bool regular = std::max(start, end) >= 100.0 - kRegularCycleTolerance;
    return {start, end, weight, regular ? CycleKind::regular : CycleKind::irregular};
}

}  // namespace

std::vector<CycleRecord> rainflow_count(std::span<const double> soc_pct) {
    if (soc_pct.empty()) throw ValidationError("rainflow_count needs a non-empty series");
    const auto points = turning_points(soc_pct);

    std::vector<CycleRecord> cycles;
    std::vector<double> stack;
    stack.reserve(points.size());
    for (double p : points) {
        stack.push_back(p);
        while (stack.size() >= 4) {
            const std::size_t n = stack.size();
            const double a = stack[n - 4], b = stack[n - 3], c = stack[n - 2], d = stack[n - 1];
            const double inner = std::abs(b - c);
            if (inner <= std::abs(a - b) && inner <= std::abs(c - d)) {
                cycles.push_back(make_cycle(b, c, 1.0));
                stack.erase(stack.end() - 3, stack.end() - 1);
            } else {
                break;
            }
        }
    }
    for (std::size_t i = 1; i < stack.size(); ++i) {
        cycles.push_back(make_cycle(stack[i - 1], stack[i], 0.5));
    }
    return cycles;
}

std::vector<CycleRecord> rainflow_count(const TimeSeries& soc_pct) { return rainflow_count(soc_pct.values()); }

double depreciation_factor(std::span<const CycleRecord> cycles, const CycleLifeCurve& curve,
                           double soc_max_pct) {
    if (!(soc_max_pct > 0.0)) throw ValidationError("soc_max_pct must be positive");
    auto equivalent_dod = [soc_max_pct](double soc) { return 100.0 - soc / soc_max_pct * 100.0; };

    double regular = 0.0;
    double irregular = 0.0;
    for (const auto& c : cycles) {
        if (c.kind == CycleKind::regular) {
            regular += c.weight / curve.max_cycles(c.depth_pct());
        } else {
            const double at_start = 1.0 / curve.max_cycles(equivalent_dod(c.start_soc_pct));
            const double at_end = 1.0 / curve.max_cycles(equivalent_dod(c.end_soc_pct));
            irregular += c.weight * std::abs(at_start - at_end);
        }
    }
    return regular + irregular;
}

double battery_depreciation_cost(const BatterySpec& spec, double horizon_years, double depreciation_factor) {
    if (!(horizon_years > 0.0)) throw ValidationError("depreciation horizon must be positive");
    if (!(depreciation_factor >= 0.0)) throw ValidationError("depreciation factor must be nonnegative");
    const double life = depreciation_factor > 0.0
                            ? std::max(1.0 / depreciation_factor, spec.lifetime_years)
                            : spec.lifetime_years;
    return spec.capacity_kwh * spec.cost_per_kwh * horizon_years / life;
}

}  // namespace p2p
