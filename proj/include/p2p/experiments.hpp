#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "p2p/grid.hpp"
#include "p2p/scenario.hpp"
#include "p2p/trace.hpp"

namespace p2p {

struct Community {
    std::vector<ProsumerSpec> prosumers;
    TariffSchedule tariffs;
    TimeSeries wind;
    std::vector<std::string> archetype;  // per prosumer, empty for ingested profiles
    double diversity = 0.0;
};

ArchetypeLibrary library_for(const ScenarioConfig& config);
TariffSchedule tariffs_for(const ScenarioConfig& config);

/// Shared wind resource of the scenario: the configured CSV (cut to the
/// horizon) or a synthetic series derived from the seed.
TimeSeries wind_for(const ScenarioConfig& config);

/// Builds and sizes the community described by `config` using `seed`.
Community build_community(const ScenarioConfig& config, std::uint64_t seed);

/// Sizes assets for the given demand series against the scenario's wind and tariffs.
Community community_from_demands(const ScenarioConfig& config, std::vector<TimeSeries> demands,
                                 std::vector<std::string> archetype, const TimeSeries& wind);

/// Feeder checker when the scenario names a feeder, otherwise an unconstrained grid.
std::unique_ptr<GridChecker> grid_for(const ScenarioConfig& config, const JointProfileOptimiser& optimiser);

SimulationTrace run_market(const JointProfileOptimiser& optimiser, GridChecker& grid, const MarketSettings& market);

/// Writes trace.jsonl, gt_vs_contracts.csv, gt_vs_participation.csv,
/// merges.csv, prosumers.csv and summary.json into `out`.
SimulationTrace simulate(const ScenarioConfig& config, const std::filesystem::path& out);

struct ClusterSummary {
    KSelection selection;
    ClusteringResult clusters;
    std::size_t profiles = 0;
};

/// Winter weekday averaging, k selection, clustering and optional merging.
ClusterSummary cluster_profiles(const ScenarioConfig& config, const std::filesystem::path& out);

struct SweepCell {
    double target_df = 0.0;
    std::size_t community = 0;
    std::string status = "ok";
    double realized_df = 0.0;
    double gt_pct_of_bill = 0.0;
    MarketKind market = MarketKind::central;
    double participation_60 = 0.0;
    double participation_80 = 0.0;
    double participation_90 = 0.0;
};

/// Runs every (DF target, community, market) cell. Cells whose community
/// cannot be generated are reported with status `search_exhausted`.
std::vector<SweepCell> df_sweep(const ScenarioConfig& config, const std::filesystem::path& out);

/// Median of a nonempty set of values.
double median(std::vector<double> values);

/// Writes the sized assets of the configured community.
Community size_assets(const ScenarioConfig& config, const std::filesystem::path& out);

}  // namespace p2p
