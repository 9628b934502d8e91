#include "p2p/experiments.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include <fmt/format.h>
#include <json.hpp>

#include "p2p/errors.hpp"

namespace p2p {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("{}: cannot open for writing", path.string()));
    return out;
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw ConfigError(fmt::format("{}: cannot create output directory: {}", dir.string(), ec.message()));
}

constexpr std::uint64_t kWindSalt = 0x77696e64ULL;

void write_prosumers(const Community& c, const JointProfileOptimiser& opt, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "index,id,archetype,annual_kwh,wind_kw,battery_kwh,standalone_bill_pence\n";
    for (std::size_t i = 0; i < c.prosumers.size(); ++i) {
        const auto& p = c.prosumers[i];
        out << fmt::format("{},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", i, p.id,
                           i < c.archetype.size() ? c.archetype[i] : "", p.demand.sum() * p.demand.step_hours(),
                           p.generator.installed_kw, p.battery.capacity_kwh, opt.standalone_bill(static_cast<AgentId>(i)));
    }
}

}  // namespace

ArchetypeLibrary library_for(const ScenarioConfig& config) {
    return config.community.archetypes ? ArchetypeLibrary::from_json(*config.community.archetypes)
                                       : ArchetypeLibrary::default_library();
}

TariffSchedule tariffs_for(const ScenarioConfig& config) {
    return flat_tariffs(config.import_pence, config.export_pence, config.demand.horizon, config.demand.step_hours);
}

TimeSeries wind_for(const ScenarioConfig& config) {
    if (!config.community.wind)
        return synthesize_wind(config.demand.horizon, config.demand.step_hours, config.seed ^ kWindSalt);
    const auto full = load_wind(*config.community.wind, config.demand.step_hours);
    if (full.size() < config.demand.horizon)
        throw ConfigError(fmt::format("{}: covers {} steps, the horizon needs {}", config.community.wind->string(),
                                      full.size(), config.demand.horizon));
    return TimeSeries(std::vector<double>(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(config.demand.horizon)),
                      config.demand.step_hours);
}

Community community_from_demands(const ScenarioConfig& config, std::vector<TimeSeries> demands,
                                 std::vector<std::string> archetype, const TimeSeries& wind) {
    auto tariffs = tariffs_for(config);
    auto prosumers = attach_assets(demands, wind, tariffs, config.assets, config.market.threads);
    const double df = diversity_factor(demands);
    return Community{std::move(prosumers), std::move(tariffs), wind, std::move(archetype), df};
}

Community build_community(const ScenarioConfig& config, std::uint64_t seed) {
    const TimeSeries wind = wind_for(config);
    switch (config.community.source) {
        case CommunitySource::csv: {
            auto loaded = load_profiles(*config.community.profiles);
            if (loaded.empty()) throw ConfigError(fmt::format("{}: no profiles", config.community.profiles->string()));
            std::vector<TimeSeries> demands;
            for (const auto& p : loaded) {
                if (p.demand.size() < config.demand.horizon)
                    throw ConfigError(fmt::format("profile '{}' covers {} steps, the horizon needs {}", p.id,
                                                  p.demand.size(), config.demand.horizon));
                demands.emplace_back(std::vector<double>(p.demand.begin(),
                                                         p.demand.begin() + static_cast<std::ptrdiff_t>(config.demand.horizon)),
                                     config.demand.step_hours);
            }
            auto c = community_from_demands(config, std::move(demands), {}, wind);
            for (std::size_t i = 0; i < loaded.size(); ++i) c.prosumers[i].id = loaded[i].id;
            return c;
        }
        case CommunitySource::df_target: {
            const auto library = library_for(config);
            auto found = generate_for_df(library, config.community.size, config.community.target_df,
                                         config.community.df_tolerance, seed, config.demand);
            std::vector<std::string> names;
            for (auto a : found.community.archetype_of) names.push_back(library[a].name);
            return community_from_demands(config, std::move(found.community.demands), std::move(names), wind);
        }
        case CommunitySource::synthetic:
        default: {
            const auto library = library_for(config);
            auto drawn = synthesize_demands(library, config.community.size, config.demand, seed);
            std::vector<std::string> names;
            for (auto a : drawn.archetype_of) names.push_back(library[a].name);
            return community_from_demands(config, std::move(drawn.demands), std::move(names), wind);
        }
    }
}

std::unique_ptr<GridChecker> grid_for(const ScenarioConfig& config, const JointProfileOptimiser& optimiser) {
    if (!config.feeder) return std::make_unique<UnconstrainedGrid>();
    std::vector<std::string> ids;
    std::vector<TimeSeries> baseline;
    for (const auto& p : optimiser.community()) {
        ids.push_back(p.id);
        const TimeSeries g = p.generation();
        baseline.push_back(net_demand(p.demand, g, dispatch(p.demand, g, p.battery).power_kw));
    }
    return std::make_unique<FeederChecker>(FeederModel::from_csv(*config.feeder, *config.feeder_mapping, ids),
                                           baseline);
}

SimulationTrace run_market(const JointProfileOptimiser& optimiser, GridChecker& grid, const MarketSettings& market) {
    return market.kind == MarketKind::central ? run_central(optimiser, grid, market.central())
                                              : run_negotiation(optimiser, grid, market.negotiation());
}

SimulationTrace simulate(const ScenarioConfig& config, const std::filesystem::path& out) {
    ensure_dir(out);
    Community community = build_community(config, config.seed);
    const JointProfileOptimiser optimiser(community.prosumers, community.tariffs);
    auto grid = grid_for(config, optimiser);
    SimulationTrace trace = run_market(optimiser, *grid, config.market);

    write_jsonl(trace, out / "trace.jsonl");
    write_gt_vs_contracts(trace, out / "gt_vs_contracts.csv");
    write_gt_vs_participation(trace, out / "gt_vs_participation.csv");
    write_merges(trace, out / "merges.csv");
    write_prosumers(community, optimiser, out / "prosumers.csv");

    nlohmann::ordered_json summary;
    summary["market"] = trace.market;
    summary["seed"] = config.seed;
    summary["prosumers"] = trace.prosumers;
    summary["diversity_factor"] = community.diversity;
    summary["standalone_bill_pence"] = trace.standalone_total;
    summary["grand_coalition_gt_pence"] = trace.grand_gt;
    summary["gt_pct_of_bill"] = percent(trace.grand_gt, trace.standalone_total);
    summary["contracts"] = trace.rounds.size();
    summary["final_gt_pence"] = trace.final_gt();
    summary["final_gt_pct"] = trace.final_gt_pct();
    summary["participation_for_80pct_gt"] = participation_for_gt(trace, 80.0);
    auto s = open_out(out / "summary.json");
    s << summary.dump(2) << '\n';
    return trace;
}

ClusterSummary cluster_profiles(const ScenarioConfig& config, const std::filesystem::path& out) {
    if (!config.community.profiles) throw ConfigError("clustering needs community.profiles");
    ensure_dir(out);
    const auto loaded = load_profiles(*config.community.profiles);
    if (loaded.empty()) throw ConfigError(fmt::format("{}: no profiles to cluster", config.community.profiles->string()));

    const int first_year = static_cast<int>(loaded.front().first_day.year());
    const auto calendar = HolidayCalendar::england(first_year - 1, first_year + 1 + static_cast<int>(
                                                       loaded.front().demand.size() / kSlotsPerDay / 365));
    std::vector<Vector> vectors;
    std::vector<std::string> ids;
    for (const auto& p : loaded) {
        try {
            const auto avg = winter_weekday_average(p.demand, p.first_day, calendar);
            vectors.emplace_back(avg.begin(), avg.end());
            ids.push_back(p.id);
        } catch (const DegenerateInputError&) {
            // profiles without winter weekdays or without consumption are skipped
        }
    }
    if (vectors.empty()) throw DegenerateInputError("no profile has winter weekday consumption");

    std::vector<std::size_t> range;
    for (std::size_t k = config.cluster.k_min; k <= std::min(config.cluster.k_max, vectors.size()); ++k)
        range.push_back(k);
    if (range.empty()) throw DegenerateInputError("fewer profiles than the smallest k");

    ClusterSummary summary;
    summary.profiles = vectors.size();
    summary.selection = select_k(vectors, range, config.seed);
    summary.clusters = kmeans(vectors, summary.selection.chosen, config.seed);
    if (!config.cluster.merge.empty()) summary.clusters = merge_clusters(vectors, summary.clusters, config.cluster.merge);

    {
        auto f = open_out(out / "elbow.csv");
        f << "k,inertia\n";
        for (std::size_t i = 0; i < summary.selection.ks.size(); ++i)
            f << fmt::format("{},{:.9f}\n", summary.selection.ks[i], summary.selection.inertia[i]);
    }
    {
        auto f = open_out(out / "silhouette.csv");
        f << "k,silhouette\n";
        for (std::size_t i = 0; i < summary.selection.ks.size(); ++i)
            f << fmt::format("{},{:.9f}\n", summary.selection.ks[i], summary.selection.silhouette[i]);
    }
    {
        auto f = open_out(out / "centroids.csv");
        f << "cluster";
        for (std::size_t s = 1; s <= kSlotsPerDay; ++s) f << fmt::format(",hh{:02}", s);
        f << '\n';
        for (std::size_t c = 0; c < summary.clusters.centroids.size(); ++c) {
            f << c;
            for (double v : summary.clusters.centroids[c]) f << fmt::format(",{:.9f}", v);
            f << '\n';
        }
    }
    {
        auto f = open_out(out / "assignments.csv");
        f << "id,cluster\n";
        for (std::size_t i = 0; i < ids.size(); ++i) f << ids[i] << ',' << summary.clusters.assignments[i] << '\n';
    }
    ArchetypeLibrary::from_clustering(vectors, summary.clusters).to_json(out / "archetypes.json");
    nlohmann::ordered_json j;
    j["profiles"] = summary.profiles;
    j["elbow_k"] = summary.selection.elbow;
    j["chosen_k"] = summary.selection.chosen;
    j["final_k"] = summary.clusters.k;
    j["inertia"] = summary.clusters.inertia;
    j["silhouette"] = summary.clusters.silhouette;
    auto f = open_out(out / "summary.json");
    f << j.dump(2) << '\n';
    return summary;
}

double median(std::vector<double> values) {
    if (values.empty()) throw ValidationError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<SweepCell> df_sweep(const ScenarioConfig& config, const std::filesystem::path& out) {
    ensure_dir(out);
    std::vector<SweepCell> cells;
    const auto library = library_for(config);
    const TimeSeries wind = wind_for(config);
    for (double target : config.sweep.values) {
        for (std::size_t c = 0; c < config.sweep.communities; ++c) {
            // The same seed per community index across targets keeps the draws common.
            const std::uint64_t seed = config.seed + 7919ULL * c;
            SweepCell base;
            base.target_df = target;
            base.community = c;
            std::optional<DfCommunity> found;
            try {
                found = generate_for_df(library, config.community.size, target, config.community.df_tolerance, seed,
                                        config.demand);
            } catch (const SearchExhaustedError& e) {
                base.status = "search_exhausted";
                base.realized_df = e.best_achieved();
            } catch (const ValidationError&) {
                base.status = "invalid_target";
            }
            if (!found) {
                for (auto m : config.sweep.markets) {
                    base.market = m;
                    cells.push_back(base);
                }
                continue;
            }
            const auto community = community_from_demands(config, std::move(found->community.demands), {}, wind);
            const JointProfileOptimiser optimiser(community.prosumers, community.tariffs);
            base.realized_df = found->realized_df;
            base.gt_pct_of_bill = percent(optimiser.grand_coalition_gt(), optimiser.standalone_bill_sum());
            for (auto m : config.sweep.markets) {
                MarketSettings settings = config.market;
                settings.kind = m;
                auto grid = grid_for(config, optimiser);
                const auto trace = run_market(optimiser, *grid, settings);
                SweepCell cell = base;
                cell.market = m;
                cell.participation_60 = participation_for_gt(trace, 60.0);
                cell.participation_80 = participation_for_gt(trace, 80.0);
                cell.participation_90 = participation_for_gt(trace, 90.0);
                cells.push_back(cell);
            }
        }
    }

    {
        auto f = open_out(out / "df_sweep_cells.csv");
        f << "target_df,community,market,status,realized_df,gt_pct_of_bill,participation_60,participation_80,"
             "participation_90\n";
        for (const auto& c : cells)
            f << fmt::format("{:.4f},{},{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", c.target_df, c.community,
                             to_string(c.market), c.status, c.realized_df, c.gt_pct_of_bill, c.participation_60,
                             c.participation_80, c.participation_90);
    }
    {
        auto f = open_out(out / "df_sweep_summary.csv");
        f << "target_df,market,communities,median_gt_pct_of_bill,median_participation_60,median_participation_80,"
             "median_participation_90\n";
        for (double target : config.sweep.values) {
            for (auto m : config.sweep.markets) {
                std::vector<double> gt, p60, p80, p90;
                for (const auto& c : cells) {
                    if (c.target_df != target || c.market != m || c.status != "ok") continue;
                    gt.push_back(c.gt_pct_of_bill);
                    p60.push_back(c.participation_60);
                    p80.push_back(c.participation_80);
                    p90.push_back(c.participation_90);
                }
                if (gt.empty()) {
                    f << fmt::format("{:.4f},{},0,,,,\n", target, to_string(m));
                    continue;
                }
                f << fmt::format("{:.4f},{},{},{:.6f},{:.6f},{:.6f},{:.6f}\n", target, to_string(m), gt.size(),
                                 median(gt), median(p60), median(p80), median(p90));
            }
        }
    }
    return cells;
}

Community size_assets(const ScenarioConfig& config, const std::filesystem::path& out) {
    ensure_dir(out);
    Community community = build_community(config, config.seed);
    const JointProfileOptimiser optimiser(community.prosumers, community.tariffs);
    write_prosumers(community, optimiser, out / "prosumers.csv");
    return community;
}

}  // namespace p2p
