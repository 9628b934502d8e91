#include "p2p/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <fmt/format.h>

#include "p2p/csv.hpp"
#include "p2p/errors.hpp"

namespace p2p {

TimeSeries::TimeSeries(std::vector<double> values, double step_hours)
    : step_hours_(step_hours), values_(std::move(values)) {
    if (values_.empty()) {
        throw ValidationError("time series horizon must be at least one step");
    }
    if (!(step_hours_ > 0.0) || !std::isfinite(step_hours_)) {
        throw ValidationError(fmt::format("step duration must be positive, got {}", step_hours_));
    }
}

TimeSeries TimeSeries::constant(std::size_t horizon, double value, double step_hours) {
    return TimeSeries(std::vector<double>(horizon, value), step_hours);
}

double TimeSeries::sum() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0);
}

double TimeSeries::max() const noexcept { return *std::max_element(values_.begin(), values_.end()); }

double TimeSeries::min() const noexcept { return *std::min_element(values_.begin(), values_.end()); }

std::size_t TimeSeries::argmax() const noexcept {
    return static_cast<std::size_t>(std::max_element(values_.begin(), values_.end()) - values_.begin());
}

bool TimeSeries::same_shape(const TimeSeries& other) const noexcept {
    return size() == other.size() && step_hours_ == other.step_hours_;
}

void require_same_shape(const TimeSeries& a, const TimeSeries& b, std::string_view what) {
    if (a.size() != b.size()) {
        throw DimensionError(fmt::format("{}: horizon mismatch ({} vs {} steps)", what, a.size(), b.size()));
    }
    if (a.step_hours() != b.step_hours()) {
        throw DimensionError(
            fmt::format("{}: step mismatch ({} h vs {} h)", what, a.step_hours(), b.step_hours()));
    }
}

void require_nonnegative(const TimeSeries& s, std::string_view what) {
    for (std::size_t t = 0; t < s.size(); ++t) {
        if (!(s[t] >= 0.0) || !std::isfinite(s[t])) {
            throw ValidationError(fmt::format("{} must be finite and >= 0 (step {} is {})", what, t, s[t]));
        }
    }
}

namespace {

template <class Op>
TimeSeries zip(const TimeSeries& a, const TimeSeries& b, std::string_view what, Op op) {
    require_same_shape(a, b, what);
    std::vector<double> out(a.size());
    for (std::size_t t = 0; t < out.size(); ++t) out[t] = op(a[t], b[t]);
    return TimeSeries(std::move(out), a.step_hours());
}

}  // namespace

TimeSeries operator+(const TimeSeries& a, const TimeSeries& b) {
    return zip(a, b, "series sum", std::plus<>{});
}

TimeSeries operator-(const TimeSeries& a, const TimeSeries& b) {
    return zip(a, b, "series difference", std::minus<>{});
}

TimeSeries scaled(const TimeSeries& s, double factor) {
    std::vector<double> out(s.begin(), s.end());
    for (double& v : out) v *= factor;
    return TimeSeries(std::move(out), s.step_hours());
}

TimeSeries net_demand(const TimeSeries& demand, const TimeSeries& generation,
                      const TimeSeries& battery_power) {
    require_same_shape(demand, generation, "net_demand");
    require_same_shape(demand, battery_power, "net_demand");
    std::vector<double> e(demand.size());
    for (std::size_t t = 0; t < e.size(); ++t) e[t] = demand[t] - generation[t] + battery_power[t];
    return TimeSeries(std::move(e), demand.step_hours());
}

TariffSchedule::TariffSchedule(TimeSeries import_pence, TimeSeries export_pence)
    : import_(std::move(import_pence)), export_(std::move(export_pence)) {
    require_same_shape(import_, export_, "tariff schedule");
    require_nonnegative(import_, "import tariff");
    require_nonnegative(export_, "export tariff");
}

TariffSchedule flat_tariffs(double import_pence, double export_pence, std::size_t horizon,
                            double step_hours) {
    if (!(import_pence >= 0.0) || !(export_pence >= 0.0)) {
        throw ValidationError(
            fmt::format("tariffs must be nonnegative (import {}, export {})", import_pence, export_pence));
    }
    return TariffSchedule(TimeSeries::constant(horizon, import_pence, step_hours),
                          TimeSeries::constant(horizon, export_pence, step_hours));
}

CycleLifeCurve::CycleLifeCurve(std::vector<Knot> knots, Interpolation interpolation)
    : knots_(std::move(knots)), interpolation_(interpolation) {
    if (knots_.empty()) throw ValidationError("cycle life curve needs at least one knot");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        const auto& k = knots_[i];
        if (!(k.max_cycles > 0.0) || !std::isfinite(k.max_cycles)) {
            throw ValidationError(fmt::format("cycle life must be positive at DoD {}%", k.dod_pct));
        }
        if (k.dod_pct < 0.0 || k.dod_pct > 100.0) {
            throw ValidationError(fmt::format("DoD knot {}% outside [0, 100]", k.dod_pct));
        }
        if (i > 0) {
            if (!(k.dod_pct > knots_[i - 1].dod_pct)) {
                throw ValidationError("cycle life knots must be strictly ascending in DoD");
            }
            if (k.max_cycles > knots_[i - 1].max_cycles) {
                throw ValidationError("cycle life must be non-increasing in DoD");
            }
        }
    }
}

CycleLifeCurve CycleLifeCurve::default_curve() {
    return CycleLifeCurve({{10, 15000}, {20, 10000}, {40, 6000}, {60, 4000}, {80, 3400}, {100, 3000}});
}

CycleLifeCurve CycleLifeCurve::from_csv(const std::filesystem::path& path) {
    const auto rows = csv::read(path);
    if (rows.empty()) throw ParseError(fmt::format("{}: empty cycle life file", path.string()), 1);
    csv::expect_header(rows.front(), {"dod_pct", "max_cycles"});
    std::vector<Knot> knots;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.fields.size() != 2) {
            throw ParseError(fmt::format("{}: expected 2 fields", path.string()), row.line);
        }
        knots.push_back({csv::to_double(row.fields[0], row.line, "dod_pct"),
                         csv::to_double(row.fields[1], row.line, "max_cycles")});
    }
    return CycleLifeCurve(std::move(knots));
}

double CycleLifeCurve::max_cycles(double dod_pct) const {
    if (dod_pct <= knots_.front().dod_pct) return knots_.front().max_cycles;
    if (dod_pct >= knots_.back().dod_pct) return knots_.back().max_cycles;
    auto hi = std::upper_bound(knots_.begin(), knots_.end(), dod_pct,
                               [](double x, const Knot& k) { return x < k.dod_pct; });
    auto lo = hi - 1;
    const double w = (dod_pct - lo->dod_pct) / (hi->dod_pct - lo->dod_pct);
    if (interpolation_ == Interpolation::linear) {
        return lo->max_cycles + w * (hi->max_cycles - lo->max_cycles);
    }
    return std::exp(std::log(lo->max_cycles) + w * (std::log(hi->max_cycles) - std::log(lo->max_cycles)));
}

void BatterySpec::validate() const {
    const bool pct_ok = 0.0 <= soc_min_pct && soc_min_pct <= initial_soc_pct &&
                        initial_soc_pct <= soc_max_pct && soc_max_pct <= 100.0;
    if (!pct_ok) {
        throw ValidationError(fmt::format("battery SoC bounds must satisfy 0 <= min ({}) <= initial ({}) "
                                          "<= max ({}) <= 100",
                                          soc_min_pct, initial_soc_pct, soc_max_pct));
    }
    if (!(capacity_kwh >= 0.0) || !(max_power_kw >= 0.0)) {
        throw ValidationError("battery capacity and power must be nonnegative");
    }
    auto eff_ok = [](double e) { return e > 0.0 && e <= 1.0; };
    if (!eff_ok(charge_efficiency) || !eff_ok(discharge_efficiency)) {
        throw ValidationError("battery efficiencies must lie in (0, 1]");
    }
    if (!(cost_per_kwh >= 0.0) || !(lifetime_years > 0.0)) {
        throw ValidationError("battery cost must be nonnegative and lifetime positive");
    }
}

void GeneratorSpec::validate() const {
    if (!(installed_kw >= 0.0)) throw ValidationError("installed generation must be nonnegative");
    if (!(cost_per_kw >= 0.0) || !(lifetime_years > 0.0)) {
        throw ValidationError("generator cost must be nonnegative and lifetime positive");
    }
    for (double r : resource) {
        if (!(r >= 0.0 && r <= 1.0)) {
            throw ValidationError(fmt::format("normalised resource value {} outside [0, 1]", r));
        }
    }
}

void ProsumerSpec::validate() const {
    require_nonnegative(demand, fmt::format("demand of {}", id));
    require_same_shape(demand, generator.resource, fmt::format("prosumer {}", id));
    generator.validate();
    battery.validate();
}

}  // namespace p2p
