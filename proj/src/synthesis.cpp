#include "p2p/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>

#include <fmt/format.h>
#include <json.hpp>

#include "p2p/errors.hpp"
#include "p2p/optimiser.hpp"
#include "p2p/parallel.hpp"

namespace p2p {

namespace {

void validate_archetype(const Archetype& a) {
    double total = 0.0;
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
        if (!(a.weights[s] >= 0.0) || !(a.std[s] >= 0.0))
            throw ValidationError(fmt::format("archetype '{}' has a negative weight or std", a.name));
        total += a.weights[s];
    }
    if (std::abs(total - 1.0) > 1e-6) throw ValidationError(fmt::format("archetype '{}' is not L1-normalised", a.name));
    if (!(a.population_weight > 0.0))
        throw ValidationError(fmt::format("archetype '{}' needs a positive population weight", a.name));
}

// Sum of Gaussian bumps (hour, height, width) over a base load, on a 24 h circle.
DayShape bumps(double base, std::initializer_list<std::array<double, 3>> peaks) {
    DayShape w{};
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
        const double h = (static_cast<double>(s) + 0.5) * 24.0 / kSlotsPerDay;
        double v = base;
        for (const auto& [centre, height, width] : peaks) {
            double d = std::abs(h - centre);
            d = std::min(d, 24.0 - d);
            v += height * std::exp(-0.5 * d * d / (width * width));
        }
        w[s] = v;
    }
    l1_normalise(w);
    return w;
}

Archetype make_archetype(std::string name, DayShape weights, double relative_std, double population) {
    Archetype a{std::move(name), weights, {}, population};
    for (std::size_t s = 0; s < kSlotsPerDay; ++s) a.std[s] = relative_std * weights[s];
    return a;
}

}  // namespace

ArchetypeLibrary::ArchetypeLibrary(std::vector<Archetype> archetypes) : archetypes_(std::move(archetypes)) {
    if (archetypes_.empty()) throw ValidationError("archetype library is empty");
    double total = 0.0;
    for (const auto& a : archetypes_) {
        validate_archetype(a);
        total += a.population_weight;
    }
    for (auto& a : archetypes_) a.population_weight /= total;
}

ArchetypeLibrary ArchetypeLibrary::default_library() {
    return ArchetypeLibrary({
        make_archetype("evening peak", bumps(0.35, {{18.5, 1.0, 1.6}, {8.0, 0.25, 1.2}}), 0.3, 3910),
        make_archetype("work from home", bumps(0.45, {{12.5, 0.55, 3.5}, {19.0, 0.45, 2.0}, {8.5, 0.2, 1.0}}), 0.3,
                       599),
        make_archetype("morning and evening peak", bumps(0.25, {{7.5, 0.9, 1.0}, {19.5, 0.9, 1.4}}), 0.3, 526),
        make_archetype("morning peak", bumps(0.25, {{7.0, 1.2, 1.3}, {19.0, 0.3, 2.0}}), 0.3, 169),
        make_archetype("night owl", bumps(0.3, {{23.5, 1.0, 2.0}, {2.0, 0.5, 1.8}}), 0.3, 47),
    });
}

ArchetypeLibrary ArchetypeLibrary::from_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(fmt::format("{}: cannot open archetype library", path.string()));
    nlohmann::json doc;
    try {
        in >> doc;
        std::vector<Archetype> out;
        for (const auto& item : doc) {
            Archetype a;
            a.name = item.at("name").get<std::string>();
            const auto w = item.at("weights").get<std::vector<double>>();
            const auto sd = item.at("std").get<std::vector<double>>();
            if (w.size() != kSlotsPerDay || sd.size() != kSlotsPerDay)
                throw ConfigError(fmt::format("{}: archetype '{}' needs {} weights and std values", path.string(),
                                              a.name, kSlotsPerDay));
            std::copy(w.begin(), w.end(), a.weights.begin());
            std::copy(sd.begin(), sd.end(), a.std.begin());
            a.population_weight = item.at("population_weight").get<double>();
            out.push_back(std::move(a));
        }
        return ArchetypeLibrary(std::move(out));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
}

void ArchetypeLibrary::to_json(const std::filesystem::path& path) const {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& a : archetypes_) {
        nlohmann::ordered_json item;
        item["name"] = a.name;
        item["weights"] = a.weights;
        item["std"] = a.std;
        item["population_weight"] = a.population_weight;
        doc.push_back(std::move(item));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("{}: cannot open for writing", path.string()));
    out << doc.dump(2) << '\n';
}

ArchetypeLibrary ArchetypeLibrary::from_clustering(std::span<const Vector> vectors, const ClusteringResult& clusters,
                                                   std::vector<std::string> names) {
    std::vector<Archetype> out;
    for (std::size_t c = 0; c < clusters.k; ++c) {
        Archetype a;
        a.name = c < names.size() ? names[c] : fmt::format("cluster {}", c + 1);
        std::size_t count = 0;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (clusters.assignments[i] != c) continue;
            ++count;
            for (std::size_t s = 0; s < kSlotsPerDay; ++s) a.weights[s] += vectors[i].at(s);
        }
        if (count == 0) continue;
        for (double& w : a.weights) w /= static_cast<double>(count);
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (clusters.assignments[i] != c) continue;
            for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
                const double d = vectors[i][s] - a.weights[s];
                a.std[s] += d * d / static_cast<double>(count);
            }
        }
        for (double& v : a.std) v = std::sqrt(v);
        l1_normalise(a.weights);
        a.population_weight = static_cast<double>(count);
        out.push_back(std::move(a));
    }
    return ArchetypeLibrary(std::move(out));
}

std::vector<double> ArchetypeLibrary::population_weights() const {
    std::vector<double> out;
    for (const auto& a : archetypes_) out.push_back(a.population_weight);
    return out;
}

std::vector<std::size_t> stratified_counts(std::span<const double> weights, std::size_t size, std::mt19937_64& rng) {
    if (weights.empty()) throw ValidationError("stratified sampling needs weights");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw ValidationError("stratified sampling needs a positive weight");
    std::vector<std::size_t> counts(weights.size());
    std::vector<double> remainder(weights.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double expected = weights[i] / total * static_cast<double>(size);
        counts[i] = static_cast<std::size_t>(std::floor(expected));
        remainder[i] = expected - static_cast<double>(counts[i]);
        assigned += counts[i];
    }
    for (std::size_t left = size - assigned; left > 0; --left) {
        const double r_total = std::accumulate(remainder.begin(), remainder.end(), 0.0);
        std::size_t pick = 0;
        if (r_total > 0.0) {
            double u = std::uniform_real_distribution<double>(0.0, r_total)(rng);
            for (pick = 0; pick + 1 < remainder.size(); ++pick) {
                u -= remainder[pick];
                if (u < 0.0 && remainder[pick] > 0.0) break;
            }
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, weights.size() - 1)(rng);
        }
        ++counts[pick];
        remainder[pick] = 0.0;
    }
    return counts;
}

double wind_power_curve(double speed) {
    static constexpr std::array<std::array<double, 2>, 15> curve{{{3.0, 0.0},
                                                                  {4.0, 0.015},
                                                                  {5.0, 0.04},
                                                                  {6.0, 0.085},
                                                                  {7.0, 0.145},
                                                                  {8.0, 0.22},
                                                                  {9.0, 0.32},
                                                                  {10.0, 0.44},
                                                                  {11.0, 0.57},
                                                                  {12.0, 0.70},
                                                                  {13.0, 0.82},
                                                                  {14.0, 0.91},
                                                                  {15.0, 0.97},
                                                                  {16.0, 1.0},
                                                                  {25.0, 1.0}}};
    if (speed < curve.front()[0] || speed > curve.back()[0]) return 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (speed <= curve[i][0]) {
            const auto& [x0, y0] = curve[i - 1];
            const auto& [x1, y1] = curve[i];
            return y0 + (y1 - y0) * (speed - x0) / (x1 - x0);
        }
    }
    return 0.0;
}

TimeSeries synthesize_wind(std::size_t horizon, double step_hours, std::uint64_t seed, const WindParams& p) {
    if (horizon == 0) throw ValidationError("wind horizon must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    const double innovation = p.sigma * std::sqrt(1.0 - p.persistence * p.persistence);
    double x = p.sigma * z(rng);
    std::vector<double> out(horizon);
    for (std::size_t t = 0; t < horizon; ++t) {
        const double hours = static_cast<double>(t) * step_hours;
        const double day_of_year = hours / 24.0;
        const double hour = std::fmod(hours, 24.0);
        const double mean = p.mean_speed +
                            p.seasonal_amplitude * std::cos(2.0 * std::numbers::pi * (day_of_year - 15.0) / 365.25) +
                            p.diurnal_amplitude * std::cos(2.0 * std::numbers::pi * (hour - 15.0) / 24.0);
        x = p.persistence * x + innovation * z(rng);
        out[t] = wind_power_curve(std::max(0.0, mean + x));
    }
    return TimeSeries(std::move(out), step_hours);
}

DemandDraws draw_demand_noise(std::size_t size, std::size_t archetypes, const DemandParams& params,
                              std::uint64_t seed) {
    if (archetypes == 0) throw ValidationError("need at least one archetype");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::size_t days = (params.horizon * static_cast<std::size_t>(std::lround(params.step_hours * 60.0)) +
                              24 * 60 - 1) / (24 * 60);
    const double mu = std::log(params.mean_daily_kwh) - 0.5 * params.daily_kwh_sigma * params.daily_kwh_sigma;

    DemandDraws d;
    for (std::size_t i = 0; i < size; ++i) {
        d.daily_kwh.push_back(std::exp(mu + params.daily_kwh_sigma * z(rng)));
        d.switch_u.push_back(u(rng));
        d.alternative.push_back(
            archetypes > 1 ? std::uniform_int_distribution<std::size_t>(0, archetypes - 2)(rng) : 0);
        std::vector<double> shape(kSlotsPerDay), day(days), slot(params.horizon);
        for (auto& v : shape) v = z(rng);
        for (auto& v : day) v = z(rng);
        for (auto& v : slot) v = z(rng);
        d.shape_z.push_back(std::move(shape));
        d.day_z.push_back(std::move(day));
        d.slot_z.push_back(std::move(slot));
    }
    return d;
}

std::vector<TimeSeries> build_demands(const ArchetypeLibrary& library, std::span<const std::size_t> archetype_of,
                                      const DemandDraws& draws, const DemandParams& params, double noise) {
    if (archetype_of.size() != draws.daily_kwh.size()) throw DimensionError("one archetype per prosumer is required");
    const double slot_hours = 24.0 / kSlotsPerDay;
    const double day_sigma = noise * params.day_noise;

    std::vector<double> seasonal;
    const auto first = std::chrono::sys_days(params.first_day);
    const auto jan1 = std::chrono::sys_days(params.first_day.year() / std::chrono::January / 1);
    for (std::size_t d = 0; d < draws.day_z.front().size(); ++d) {
        const double doy = static_cast<double>((first - jan1).count() + static_cast<long>(d));
        seasonal.push_back(1.0 + params.seasonal_amplitude * std::cos(2.0 * std::numbers::pi * (doy - 15.0) / 365.25));
    }

    std::vector<TimeSeries> out;
    out.reserve(archetype_of.size());
    for (std::size_t i = 0; i < archetype_of.size(); ++i) {
        const Archetype& a = library[archetype_of[i]];
        DayShape shape{};
        double total = 0.0;
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
            shape[s] = std::max(0.0, a.weights[s] + noise * params.shape_noise * a.std[s] * draws.shape_z[i][s]);
            total += shape[s];
        }
        if (total > 0.0) {
            for (double& v : shape) v /= total;
        } else {
            shape = a.weights;
        }

        std::vector<double> kw(params.horizon);
        for (std::size_t t = 0; t < params.horizon; ++t) {
            const double hours = static_cast<double>(t) * params.step_hours;
            const auto day = static_cast<std::size_t>(hours / 24.0);
            const auto slot = static_cast<std::size_t>(std::fmod(hours, 24.0) / slot_hours);
            const double day_factor = std::exp(day_sigma * draws.day_z[i][day] - 0.5 * day_sigma * day_sigma);
            const double slot_factor = std::max(0.0, 1.0 + noise * params.slot_noise * draws.slot_z[i][t]);
            kw[t] = draws.daily_kwh[i] * seasonal[day] * day_factor * slot_factor * shape[slot] / slot_hours;
        }
        out.emplace_back(std::move(kw), params.step_hours);
    }
    return out;
}

SynthesisResult synthesize_demands(const ArchetypeLibrary& library, std::size_t size, const DemandParams& params,
                                   std::uint64_t seed) {
    if (size == 0) throw ValidationError("community size must be at least 1");
    std::mt19937_64 rng(seed);
    const auto weights = library.population_weights();
    const auto counts = stratified_counts(weights, size, rng);
    SynthesisResult out;
    for (std::size_t a = 0; a < counts.size(); ++a) out.archetype_of.insert(out.archetype_of.end(), counts[a], a);
    for (std::size_t i = out.archetype_of.size(); i > 1; --i) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, i - 1)(rng);
        std::swap(out.archetype_of[i - 1], out.archetype_of[j]);
    }
    const auto draws = draw_demand_noise(size, library.size(), params, rng());
    out.demands = build_demands(library, out.archetype_of, draws, params, 1.0);
    return out;
}

std::vector<ProsumerSpec> attach_assets(std::span<const TimeSeries> demands, const TimeSeries& wind,
                                        const TariffSchedule& tariffs, const AssetParams& assets, unsigned threads) {
    const auto battery_grid =
        assets.battery_candidates.empty() ? candidate_grid(0.0, 15.0, 0.5) : assets.battery_candidates;
    const auto generation_grid =
        assets.generation_candidates.empty() ? candidate_grid(0.0, 10.0, 0.25) : assets.generation_candidates;

    std::vector<std::optional<ProsumerSpec>> sized(demands.size());
    parallel_for(
        demands.size(),
        [&](std::size_t i) {
            ProsumerSpec p{fmt::format("p{:03}", i), demands[i],
                           GeneratorSpec{0.0, assets.generator_cost_per_kw, assets.generator_lifetime_years, wind},
                           BatterySpec{.capacity_kwh = 0.0,
                                       .max_power_kw = 0.0,
                                       .soc_min_pct = assets.soc_min_pct,
                                       .soc_max_pct = assets.soc_max_pct,
                                       .charge_efficiency = assets.charge_efficiency,
                                       .discharge_efficiency = assets.discharge_efficiency,
                                       .cost_per_kwh = assets.battery_cost_per_kwh,
                                       .lifetime_years = assets.battery_lifetime_years,
                                       .initial_soc_pct = assets.soc_min_pct,
                                       .cycle_life = assets.cycle_life}};
            p.generator.installed_kw = size_generation(p, wind, tariffs, generation_grid);
            const double cap = size_battery(p, tariffs, battery_grid, assets.power_per_kwh);
            p.battery.capacity_kwh = cap;
            p.battery.max_power_kw = cap * assets.power_per_kwh;
            sized[i] = std::move(p);
        },
        threads);
    std::vector<ProsumerSpec> out;
    out.reserve(sized.size());
    for (auto& p : sized) out.push_back(std::move(*p));
    return out;
}

double diversity_factor(std::span<const TimeSeries> demands) {
    if (demands.empty()) throw ValidationError("diversity factor needs at least one profile");
    std::vector<double> aggregate(demands.front().size(), 0.0);
    double peaks = 0.0;
    for (const auto& d : demands) {
        require_same_shape(demands.front(), d, "diversity_factor");
        peaks += d.max();
        for (std::size_t t = 0; t < d.size(); ++t) aggregate[t] += d[t];
    }
    const double peak = *std::max_element(aggregate.begin(), aggregate.end());
    if (!(peak > 0.0)) throw DegenerateInputError("diversity factor is undefined for zero aggregate demand");
    return peaks / peak;
}

DfCommunity generate_for_df(const ArchetypeLibrary& library, std::size_t size, double target, double tolerance,
                            std::uint64_t seed, const DemandParams& params, std::size_t max_attempts) {
    if (!(target >= 1.0)) throw ValidationError("diversity factor targets must be at least 1");
    if (!(tolerance >= 0.0)) throw ValidationError("tolerance must be nonnegative");
    if (size == 0) throw ValidationError("community size must be at least 1");

    const auto weights = library.population_weights();
    const std::size_t base =
        static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) - weights.begin());

    double best_df = 0.0;
    std::size_t attempts = 0;
    // Realised DF jumps whenever one more household switches archetype, so a
    // bisection can close in on a jump that straddles the target. The draws
    // are then redrawn from a derived seed and the search starts over.
    for (std::uint64_t restart = 0; attempts < max_attempts; ++restart) {
        const std::uint64_t draw_seed = restart == 0 ? seed : seed ^ (0x9e3779b97f4a7c15ULL * restart);
        const auto draws = draw_demand_noise(size, library.size(), params, draw_seed);

        auto build = [&](double mixing) {
            DfCommunity c;
            c.mixing = mixing;
            c.community.archetype_of.resize(size);
            for (std::size_t i = 0; i < size; ++i) {
                const std::size_t alt = draws.alternative[i] < base ? draws.alternative[i] : draws.alternative[i] + 1;
                const bool switched = library.size() > 1 && draws.switch_u[i] < std::min(mixing, 1.0);
                c.community.archetype_of[i] = switched ? alt : base;
            }
            c.community.demands = build_demands(library, c.community.archetype_of, draws, params, mixing);
            c.realized_df = diversity_factor(c.community.demands);
            return c;
        };
        auto consider = [&](DfCommunity c) -> std::optional<DfCommunity> {
            if (std::abs(c.realized_df - target) < std::abs(best_df - target)) best_df = c.realized_df;
            if (std::abs(c.realized_df - target) <= tolerance) return c;
            return std::nullopt;
        };

        double lo = 0.0, hi = kDfMaxMixing;
        bool reachable = false;
        for (double edge : {lo, hi}) {
            if (attempts++ >= max_attempts) break;
            auto c = build(edge);
            reachable = c.realized_df >= target;
            if (auto hit = consider(std::move(c))) return std::move(*hit);
        }
        if (!reachable) break;  // the widest mixing is not diverse enough; redrawing will not help
        while (hi - lo > kDfMixingResolution && attempts++ < max_attempts) {
            const double mid = 0.5 * (lo + hi);
            auto c = build(mid);
            const double df = c.realized_df;
            if (auto hit = consider(std::move(c))) return std::move(*hit);
            (df < target ? lo : hi) = mid;
        }
    }
    throw SearchExhaustedError(fmt::format("no community within {} of diversity factor {} (best {:.4f})", tolerance,
                                           target, best_df),
                               best_df);
}

}  // namespace p2p
