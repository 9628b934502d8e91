#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "p2p/clustering.hpp"
#include "p2p/data_io.hpp"
#include "p2p/profiles.hpp"

namespace p2p {

using DayShape = std::array<double, kSlotsPerDay>;

struct Archetype {
    std::string name;
    DayShape weights{};  // L1-normalised mean daily shape
    DayShape std{};      // per-slot standard deviation, same units as weights
    double population_weight = 0.0;
};

/// Named daily demand shapes with population weights summing to one.
class ArchetypeLibrary {
public:
    /// Validates shapes and rescales population weights to sum to one.
    explicit ArchetypeLibrary(std::vector<Archetype> archetypes);

    /// Evening peak, work from home, morning+evening peak, morning peak and
    /// night owl, weighted {3910, 599, 526, 169, 47} / 5251.
    static ArchetypeLibrary default_library();

    /// JSON array of {name, weights[48], std[48], population_weight}.
    static ArchetypeLibrary from_json(const std::filesystem::path& path);
    void to_json(const std::filesystem::path& path) const;

    /// One archetype per cluster: centroid shape, member spread, member share.
    static ArchetypeLibrary from_clustering(std::span<const Vector> vectors, const ClusteringResult& clusters,
                                            std::vector<std::string> names = {});

    std::size_t size() const noexcept { return archetypes_.size(); }
    const Archetype& operator[](std::size_t i) const { return archetypes_.at(i); }
    const std::vector<Archetype>& archetypes() const noexcept { return archetypes_; }
    std::vector<double> population_weights() const;

private:
    std::vector<Archetype> archetypes_;
};

/// Archetype counts for a community: the floor of each expected count, with
/// the remaining slots drawn in proportion to the fractional remainders.
std::vector<std::size_t> stratified_counts(std::span<const double> weights, std::size_t size, std::mt19937_64& rng);

struct DemandParams {
    std::size_t horizon = 17520;
    double step_hours = kDefaultStepHours;
    Date first_day{std::chrono::year{2019}, std::chrono::January, std::chrono::day{1}};
    double mean_daily_kwh = 10.0;
    double daily_kwh_sigma = 1.0;    // lognormal spread of household size
    double shape_noise = 1.0;        // multiplier on the archetype std for the household's own shape
    double day_noise = 0.15;         // lognormal spread of daily consumption
    double slot_noise = 0.35;        // relative per-slot noise within a day
    double seasonal_amplitude = 0.25;  // winter-over-summer swing of daily consumption
};

struct WindParams {
    double mean_speed = 7.0;        // m/s
    double seasonal_amplitude = 1.5;
    double diurnal_amplitude = 0.5;
    double persistence = 0.985;     // AR(1) coefficient per step
    double sigma = 2.5;             // stationary deviation, m/s
};

/// Normalised output of a generic small community turbine at `speed` m/s:
/// cut-in 3 m/s, rated 16 m/s, cut-out 25 m/s.
double wind_power_curve(double speed);

/// Shared normalised wind resource in [0, 1]; deterministic given seed.
TimeSeries synthesize_wind(std::size_t horizon, double step_hours, std::uint64_t seed, const WindParams& params = {});

/// Random draws behind a community's demand, kept so the same community can be
/// rebuilt at different noise levels.
struct DemandDraws {
    std::vector<double> daily_kwh;           // per prosumer
    std::vector<double> switch_u;            // per prosumer, uniform(0,1)
    std::vector<std::size_t> alternative;    // per prosumer, uniformly drawn archetype
    std::vector<std::vector<double>> shape_z;  // per prosumer, per slot
    std::vector<std::vector<double>> day_z;    // per prosumer, per day
    std::vector<std::vector<double>> slot_z;   // per prosumer, per step
};

DemandDraws draw_demand_noise(std::size_t size, std::size_t archetypes, const DemandParams& params,
                              std::uint64_t seed);

/// Builds one demand series per prosumer with the given archetype assignment;
/// every noise term is scaled by `noise`.
std::vector<TimeSeries> build_demands(const ArchetypeLibrary& library, std::span<const std::size_t> archetype_of,
                                      const DemandDraws& draws, const DemandParams& params, double noise);

struct SynthesisResult {
    std::vector<TimeSeries> demands;
    std::vector<std::size_t> archetype_of;
};

/// Stratified community drawn from the library with full noise.
SynthesisResult synthesize_demands(const ArchetypeLibrary& library, std::size_t size, const DemandParams& params,
                                   std::uint64_t seed);

struct AssetParams {
    double battery_cost_per_kwh = 15000.0;  // pence
    double generator_cost_per_kw = 107200.0;
    double battery_lifetime_years = 20.0;
    double generator_lifetime_years = 20.0;
    double power_per_kwh = 0.5;
    double soc_min_pct = 0.0;
    double soc_max_pct = 100.0;
    double charge_efficiency = 1.0;
    double discharge_efficiency = 1.0;
    std::vector<double> battery_candidates = {};     // default 0..15 kWh step 0.5
    std::vector<double> generation_candidates = {};  // default 0..10 kW step 0.25
    CycleLifeCurve cycle_life = CycleLifeCurve::default_curve();
};

/// Sizes a wind share (no storage) then a battery for every demand series.
std::vector<ProsumerSpec> attach_assets(std::span<const TimeSeries> demands, const TimeSeries& wind,
                                        const TariffSchedule& tariffs, const AssetParams& assets,
                                        unsigned threads = 0);

/// (sum of individual peaks) / (peak of the sum).
/// Throws DegenerateInputError when the aggregate is zero everywhere.
double diversity_factor(std::span<const TimeSeries> demands);

struct DfCommunity {
    SynthesisResult community;
    double realized_df = 0.0;
    double mixing = 0.0;  // the search variable: switch probability min(a,1) and noise scale a
};

inline constexpr double kDfMaxMixing = 4.0;
inline constexpr std::size_t kDfMaxAttempts = 100;
/// Bisection width below which the search redraws the community.
inline constexpr double kDfMixingResolution = 1e-3;

/// Searches the mixing level until the community's diversity factor is within
/// `tolerance` of `target`. All prosumers start from the most populous
/// archetype; with mixing a each one switches to its alternative archetype
/// when its uniform draw is below min(a, 1), and all noise is scaled by a.
/// When the bisection stalls on a jump in DF the draws are redrawn from a
/// seed derived from `seed` and the search restarts.
/// Throws ValidationError for target < 1 and SearchExhaustedError when the
/// target is not met within `max_attempts` evaluations.
DfCommunity generate_for_df(const ArchetypeLibrary& library, std::size_t size, double target, double tolerance,
                            std::uint64_t seed, const DemandParams& params = {},
                            std::size_t max_attempts = kDfMaxAttempts);

}  // namespace p2p
