#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "p2p/data_io.hpp"
#include "p2p/market_negotiation.hpp"
#include "p2p/synthesis.hpp"

namespace p2p {

enum class MarketKind { central, negotiation };
enum class CommunitySource { synthetic, csv, df_target };

MarketKind parse_market(const std::string& name);
std::string to_string(MarketKind market);

struct MarketSettings {
    MarketKind kind = MarketKind::central;
    double threshold = kDefaultGtThreshold;
    std::size_t k = kDefaultPeers;
    std::size_t deadline = kDefaultDeadline;
    double reservation_value = 0.0;
    bool max_utility_sum = false;
    bool prosumer_pairs = false;
    unsigned threads = 0;

    CentralConfig central() const { return {threshold, prosumer_pairs, threads}; }
    NegotiationConfig negotiation() const {
        return {k, deadline, threshold, reservation_value, max_utility_sum, threads};
    }
};

struct CommunitySettings {
    CommunitySource source = CommunitySource::synthetic;
    std::size_t size = 100;
    std::optional<std::filesystem::path> profiles;    // csv source
    std::optional<std::filesystem::path> archetypes;  // JSON library, default built in
    std::optional<std::filesystem::path> wind;        // wind CSV, default synthesised
    double target_df = 1.0;
    double df_tolerance = 0.02;
};

struct SweepSettings {
    std::vector<double> values;
    std::size_t communities = 5;
    std::vector<MarketKind> markets{MarketKind::central, MarketKind::negotiation};
};

struct ClusterSettings {
    std::size_t k_min = 8;
    std::size_t k_max = 12;
    std::vector<std::vector<std::size_t>> merge;  // optional regrouping of the chosen clusters
};

/// Everything a run needs; defaults reproduce the reference setup: a year of
/// half hours, 16p/0p flat tariffs, £150/kWh batteries and £1072/kW wind,
/// both with 20-year lifetimes.
struct ScenarioConfig {
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> out_dir;
    DemandParams demand;
    double import_pence = 16.0;
    double export_pence = 0.0;
    AssetParams assets;
    CommunitySettings community;
    MarketSettings market;
    std::optional<std::filesystem::path> feeder;
    std::optional<std::filesystem::path> feeder_mapping;
    SweepSettings sweep;
    ClusterSettings cluster;
};

/// Reads a TOML scenario. Relative paths resolve against the file's
/// directory. Unknown keys and bad values throw ConfigError.
ScenarioConfig load_scenario(const std::filesystem::path& path);

}  // namespace p2p
