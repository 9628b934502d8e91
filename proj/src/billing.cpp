#include "p2p/billing.hpp"

#include <numeric>

#include "p2p/errors.hpp"

namespace p2p {

double horizon_years(std::size_t steps, double step_hours) {
    return static_cast<double>(steps) * step_hours / kHoursPerYear;
}

double generator_cost(const GeneratorSpec& spec, double horizon_years) {
    if (!(horizon_years > 0.0)) throw ValidationError("generator cost horizon must be positive");
    return spec.installed_kw * spec.cost_per_kw * horizon_years / spec.lifetime_years;
}

double battery_usage_cost(const BatterySpec& spec, const TimeSeries& soc_pct) {
    if (spec.capacity_kwh <= 0.0 || spec.cost_per_kwh <= 0.0) return 0.0;
    const double years = horizon_years(soc_pct.size(), soc_pct.step_hours());
    const auto cycles = rainflow_count(soc_pct);
    const double df = depreciation_factor(cycles, spec.cycle_life, spec.soc_max_pct);
    return battery_depreciation_cost(spec, years, df / years);
}

BillBreakdown bill(const BatteryTrace& trace, const TariffSchedule& tariffs, const BatterySpec& battery,
                   double generator_depreciation) {
    require_same_shape(trace.imports_kwh, tariffs.import_pence(), "bill");
    BillBreakdown out;
    const auto& imports = trace.imports_kwh;
    const auto& exports = trace.exports_kwh;
    const auto& tb = tariffs.import_pence();
    const auto& ts = tariffs.export_pence();
    for (std::size_t t = 0; t < imports.size(); ++t) {
        out.import_cost += imports[t] * tb[t];
        out.export_revenue += exports[t] * ts[t];
    }
    out.battery_depreciation = battery_usage_cost(battery, trace.soc_pct);
    out.generator_depreciation = generator_depreciation;
    return out;
}

BillBreakdown bill(const BatteryTrace& trace, const TariffSchedule& tariffs, const ProsumerSpec& spec) {
    const double years = horizon_years(trace.imports_kwh.size(), trace.imports_kwh.step_hours());
    return bill(trace, tariffs, spec.battery, generator_cost(spec.generator, years));
}

BillBreakdown energy_bill(const TimeSeries& net_demand_kw, const TariffSchedule& tariffs) {
    require_same_shape(net_demand_kw, tariffs.import_pence(), "energy_bill");
    const double dt = net_demand_kw.step_hours();
    BillBreakdown out;
    for (std::size_t t = 0; t < net_demand_kw.size(); ++t) {
        const double e = net_demand_kw[t] * dt;
        if (e > 0.0) {
            out.import_cost += e * tariffs.import_pence()[t];
        } else if (e < 0.0) {
            out.export_revenue += -e * tariffs.export_pence()[t];
        }
    }
    return out;
}

double gains_from_trade(std::span<const double> individual_bills, double group_bill) {
    if (individual_bills.empty()) throw ValidationError("gains_from_trade needs at least one bill");
    return std::accumulate(individual_bills.begin(), individual_bills.end(), 0.0) - group_bill;
}

}  // namespace p2p
