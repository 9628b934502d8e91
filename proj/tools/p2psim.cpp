// p2psim: command-line driver for the peer-to-peer trading experiments.

#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "p2p/errors.hpp"
#include "p2p/experiments.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string market;
    std::optional<std::size_t> k;
    std::optional<double> threshold;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--config", c.config, "TOML scenario file");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--out", c.out, "output directory");
    cmd->add_option("--market", c.market, "central or negotiation")->check(CLI::IsMember({"central", "negotiation"}));
    cmd->add_option("--k", c.k, "negotiation peers per agent")->check(CLI::PositiveNumber);
    cmd->add_option("--threshold", c.threshold, "termination threshold on gains, pence")->check(CLI::NonNegativeNumber);
}

p2p::ScenarioConfig resolve(const Common& c, std::filesystem::path& out) {
    p2p::ScenarioConfig cfg = c.config.empty() ? p2p::ScenarioConfig{} : p2p::load_scenario(c.config);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.market.empty()) cfg.market.kind = p2p::parse_market(c.market);
    if (c.k) cfg.market.k = *c.k;
    if (c.threshold) cfg.market.threshold = *c.threshold;
    out = !c.out.empty() ? std::filesystem::path(c.out) : cfg.out_dir.value_or("out");
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Peer-to-peer energy trading simulator"};
    app.require_subcommand(1);

    Common common;
    auto* simulate = app.add_subcommand("simulate", "build a community and run a market");
    add_common(simulate, common);

    auto* cluster = app.add_subcommand("cluster", "cluster winter weekday demand shapes");
    add_common(cluster, common);
    std::string profiles;
    std::optional<std::size_t> k_min, k_max;
    cluster->add_option("--profiles", profiles, "profile CSV (id,date,hh01..hh48)");
    cluster->add_option("--k-min", k_min, "smallest k to try")->check(CLI::PositiveNumber);
    cluster->add_option("--k-max", k_max, "largest k to try")->check(CLI::PositiveNumber);

    auto* sweep = app.add_subcommand("df-sweep", "gains and participation against diversity factor");
    add_common(sweep, common);
    std::vector<double> df_values;
    std::optional<std::size_t> communities;
    std::optional<std::size_t> size;
    sweep->add_option("--df-values", df_values, "diversity factor targets")->delimiter(',');
    sweep->add_option("--communities", communities, "communities per target");
    sweep->add_option("--size", size, "prosumers per community")->check(CLI::PositiveNumber);

    auto* sizing = app.add_subcommand("size-assets", "size wind shares and batteries for a community");
    add_common(sizing, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    std::filesystem::path out;
    p2p::ScenarioConfig cfg;
    try {
        cfg = resolve(common, out);
        if (!profiles.empty()) {
            if (!std::filesystem::exists(profiles)) throw p2p::ConfigError(fmt::format("{}: file not found", profiles));
            cfg.community.profiles = profiles;
        }
        if (k_min) cfg.cluster.k_min = *k_min;
        if (k_max) cfg.cluster.k_max = *k_max;
        if (!df_values.empty()) cfg.sweep.values = df_values;
        if (communities) cfg.sweep.communities = *communities;
        if (size) cfg.community.size = *size;
        if (cfg.cluster.k_min > cfg.cluster.k_max) throw p2p::ConfigError("k range is empty");
    } catch (const std::exception& e) {
        std::cerr << "p2psim: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        if (*simulate) {
            const auto trace = p2p::simulate(cfg, out);
            std::cout << fmt::format("{}: {} contracts, {:.2f}% of maximal gains, {:.2f}% of the bill\n", trace.market,
                                     trace.rounds.size(), trace.final_gt_pct(),
                                     p2p::percent(trace.final_gt(), trace.standalone_total));
        } else if (*cluster) {
            const auto summary = p2p::cluster_profiles(cfg, out);
            std::cout << fmt::format("{} profiles, elbow k={}, chosen k={}, final k={}\n", summary.profiles,
                                     summary.selection.elbow, summary.selection.chosen, summary.clusters.k);
        } else if (*sweep) {
            const auto cells = p2p::df_sweep(cfg, out);
            std::cout << fmt::format("{} sweep cells written\n", cells.size());
        } else if (*sizing) {
            const auto community = p2p::size_assets(cfg, out);
            std::cout << fmt::format("sized {} prosumers\n", community.prosumers.size());
        }
    } catch (const p2p::ConfigError& e) {
        std::cerr << "p2psim: " << e.what() << '\n';
        return kConfigError;
    } catch (const p2p::ParseError& e) {
        std::cerr << "p2psim: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "p2psim: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kOk;
}
