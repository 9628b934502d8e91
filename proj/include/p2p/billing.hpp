#pragma once

#include <span>

#include "p2p/battery.hpp"
#include "p2p/profiles.hpp"

namespace p2p {

/// All amounts in pence.
struct BillBreakdown {
    double import_cost = 0.0;
    double export_revenue = 0.0;
    double battery_depreciation = 0.0;
    double generator_depreciation = 0.0;
    double trade_payments = 0.0;  // net value received through contracts

    double total() const noexcept {
        return import_cost - export_revenue + battery_depreciation + generator_depreciation - trade_payments;
    }
};

/// Converts a step count into years, the unit asset lifetimes are quoted in.
double horizon_years(std::size_t steps, double step_hours);

/// installed_kw * cost_per_kw * horizon / lifetime.
double generator_cost(const GeneratorSpec& spec, double horizon_years);

/// Depreciation of `spec` given the SoC trajectory it followed over the
/// horizon. The rain-flow DF of the horizon is annualised before it enters
/// the lifetime comparison, so 1/DF is a lifetime in years.
double battery_usage_cost(const BatterySpec& spec, const TimeSeries& soc_pct);

/// Energy cost of a trace plus the given asset depreciation.
BillBreakdown bill(const BatteryTrace& trace, const TariffSchedule& tariffs, const BatterySpec& battery,
                   double generator_depreciation);

/// Standalone bill of one prosumer; no contract payments.
BillBreakdown bill(const BatteryTrace& trace, const TariffSchedule& tariffs, const ProsumerSpec& spec);

/// Import cost and export revenue of a net-demand series [kW]; positive
/// values import, negative values export.
BillBreakdown energy_bill(const TimeSeries& net_demand_kw, const TariffSchedule& tariffs);

/// Sum of individual bills minus the bill of the group operated jointly.
double gains_from_trade(std::span<const double> individual_bills, double group_bill);

}  // namespace p2p
