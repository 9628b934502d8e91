#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace p2p {

inline constexpr double kDefaultStepHours = 0.5;
inline constexpr double kHoursPerYear = 8760.0;
inline constexpr std::size_t kSlotsPerDay = 48;

/// Fixed-step sequence of power [kW] or energy [kWh] values over a horizon.
///
/// Immutable after construction. The horizon is always at least one step and
/// the step duration strictly positive.
class TimeSeries {
public:
    explicit TimeSeries(std::vector<double> values, double step_hours = kDefaultStepHours);

    static TimeSeries constant(std::size_t horizon, double value,
                               double step_hours = kDefaultStepHours);

    std::size_t size() const noexcept { return values_.size(); }
    double step_hours() const noexcept { return step_hours_; }
    std::span<const double> values() const noexcept { return values_; }
    double operator[](std::size_t t) const { return values_[t]; }
    auto begin() const noexcept { return values_.begin(); }
    auto end() const noexcept { return values_.end(); }

    double sum() const noexcept;
    double max() const noexcept;
    double min() const noexcept;
    std::size_t argmax() const noexcept;

    bool same_shape(const TimeSeries& other) const noexcept;

    friend bool operator==(const TimeSeries&, const TimeSeries&) = default;

private:
    double step_hours_;
    std::vector<double> values_;
};

void require_same_shape(const TimeSeries& a, const TimeSeries& b, std::string_view what);
void require_nonnegative(const TimeSeries& s, std::string_view what);

TimeSeries operator+(const TimeSeries& a, const TimeSeries& b);
TimeSeries operator-(const TimeSeries& a, const TimeSeries& b);
TimeSeries scaled(const TimeSeries& s, double factor);

/// e(t) = d(t) - g(t) + p_bat(t), charging counted positive.
TimeSeries net_demand(const TimeSeries& demand, const TimeSeries& generation,
                      const TimeSeries& battery_power);

/// Import and export tariffs in pence/kWh, one value per step.
class TariffSchedule {
public:
    TariffSchedule(TimeSeries import_pence, TimeSeries export_pence);

    const TimeSeries& import_pence() const noexcept { return import_; }
    const TimeSeries& export_pence() const noexcept { return export_; }
    std::size_t size() const noexcept { return import_.size(); }

private:
    TimeSeries import_;
    TimeSeries export_;
};

TariffSchedule flat_tariffs(double import_pence, double export_pence, std::size_t horizon,
                            double step_hours = kDefaultStepHours);

/// Map from depth of discharge [%] to the number of cycles a battery survives
/// at that depth. Piecewise between knots, clamped outside them.
class CycleLifeCurve {
public:
    enum class Interpolation { log_linear, linear };

    struct Knot {
        double dod_pct;
        double max_cycles;
    };

    explicit CycleLifeCurve(std::vector<Knot> knots,
                            Interpolation interpolation = Interpolation::log_linear);

    /// Knots at DoD {10,20,40,60,80,100}% -> {15000,10000,6000,4000,3400,3000}.
    static CycleLifeCurve default_curve();

    /// CSV with header `dod_pct,max_cycles`, rows ascending by DoD.
    static CycleLifeCurve from_csv(const std::filesystem::path& path);

    double max_cycles(double dod_pct) const;
    std::span<const Knot> knots() const noexcept { return knots_; }
    Interpolation interpolation() const noexcept { return interpolation_; }

private:
    std::vector<Knot> knots_;
    Interpolation interpolation_;
};

struct BatterySpec {
    double capacity_kwh = 0.0;
    double max_power_kw = 0.0;
    double soc_min_pct = 0.0;
    double soc_max_pct = 100.0;
    double charge_efficiency = 1.0;
    double discharge_efficiency = 1.0;
    double cost_per_kwh = 0.0;  // pence
    double lifetime_years = 20.0;
    double initial_soc_pct = 0.0;
    CycleLifeCurve cycle_life = CycleLifeCurve::default_curve();

    /// Throws ValidationError when any invariant is broken.
    void validate() const;

    double min_kwh() const noexcept { return capacity_kwh * soc_min_pct / 100.0; }
    double max_kwh() const noexcept { return capacity_kwh * soc_max_pct / 100.0; }
    double initial_kwh() const noexcept { return capacity_kwh * initial_soc_pct / 100.0; }
};

struct GeneratorSpec {
    double installed_kw = 0.0;
    double cost_per_kw = 0.0;  // pence
    double lifetime_years = 20.0;
    TimeSeries resource;  // normalised output per installed kW, in [0, 1]

    void validate() const;
    TimeSeries generation() const { return scaled(resource, installed_kw); }
};

struct ProsumerSpec {
    std::string id;
    TimeSeries demand;  // kW
    GeneratorSpec generator;
    BatterySpec battery;

    void validate() const;
    TimeSeries generation() const { return generator.generation(); }
};

}  // namespace p2p
