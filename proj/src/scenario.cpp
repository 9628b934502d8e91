#include "p2p/scenario.hpp"

#include <set>

#include <fmt/format.h>
#include <toml.hpp>

#include "p2p/errors.hpp"

namespace p2p {

MarketKind parse_market(const std::string& name) {
    if (name == "central") return MarketKind::central;
    if (name == "negotiation") return MarketKind::negotiation;
    throw ConfigError(fmt::format("unknown market '{}' (expected central or negotiation)", name));
}

std::string to_string(MarketKind market) { return market == MarketKind::central ? "central" : "negotiation"; }

namespace {

class Reader {
public:
    Reader(const toml::table& table, std::string name, std::filesystem::path base)
        : table_(table), name_(std::move(name)), base_(std::move(base)) {}

    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, node] : table_) {
            (void)node;
            if (!used_.contains(std::string(key.str())))
                throw ConfigError(fmt::format("unknown key '{}{}'", name_.empty() ? "" : name_ + ".", key.str()));
        }
    }

    template <class T>
    void get(const char* key, T& target) {
        used_.insert(key);
        const auto* node = table_.get(key);
        if (!node) return;
        if constexpr (std::is_same_v<T, double>) {
            if (auto v = node->value<double>()) {
                target = *v;
                return;
            }
        } else if constexpr (std::is_same_v<T, bool>) {
            if (auto v = node->value<bool>()) {
                target = *v;
                return;
            }
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (auto v = node->value<std::string>()) {
                target = *v;
                return;
            }
        } else if constexpr (std::is_integral_v<T>) {
            if (auto v = node->value<std::int64_t>(); v && *v >= 0) {
                target = static_cast<T>(*v);
                return;
            }
        }
        throw ConfigError(fmt::format("key '{}' has the wrong type", qualified(key)));
    }

    void path(const char* key, std::optional<std::filesystem::path>& target) {
        std::string text;
        get(key, text);
        if (text.empty()) return;
        std::filesystem::path p(text);
        target = p.is_absolute() ? p : base_ / p;
    }

    std::vector<double> numbers(const char* key) {
        used_.insert(key);
        std::vector<double> out;
        const auto* node = table_.get(key);
        if (!node) return out;
        const auto* arr = node->as_array();
        if (!arr) throw ConfigError(fmt::format("key '{}' must be an array", qualified(key)));
        for (const auto& item : *arr) {
            auto v = item.value<double>();
            if (!v) throw ConfigError(fmt::format("key '{}' must hold numbers", qualified(key)));
            out.push_back(*v);
        }
        return out;
    }

    std::vector<std::string> strings(const char* key) {
        used_.insert(key);
        std::vector<std::string> out;
        const auto* node = table_.get(key);
        if (!node) return out;
        const auto* arr = node->as_array();
        if (!arr) throw ConfigError(fmt::format("key '{}' must be an array", qualified(key)));
        for (const auto& item : *arr) {
            auto v = item.value<std::string>();
            if (!v) throw ConfigError(fmt::format("key '{}' must hold strings", qualified(key)));
            out.push_back(*v);
        }
        return out;
    }

    const toml::table* sub(const char* key) {
        used_.insert(key);
        const auto* node = table_.get(key);
        if (!node) return nullptr;
        const auto* t = node->as_table();
        if (!t) throw ConfigError(fmt::format("'{}' must be a table", qualified(key)));
        return t;
    }

    const toml::array* array(const char* key) {
        used_.insert(key);
        const auto* node = table_.get(key);
        if (!node) return nullptr;
        const auto* a = node->as_array();
        if (!a) throw ConfigError(fmt::format("key '{}' must be an array", qualified(key)));
        return a;
    }

private:
    std::string qualified(const char* key) const { return name_.empty() ? key : name_ + "." + key; }

    const toml::table& table_;
    std::string name_;
    std::filesystem::path base_;
    std::set<std::string> used_;
};

void require(bool ok, const std::string& message) {
    if (!ok) throw ConfigError(message);
}

}  // namespace

ScenarioConfig load_scenario(const std::filesystem::path& path) {
    toml::table doc;
    try {
        doc = toml::parse_file(path.string());
    } catch (const toml::parse_error& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.description()));
    } catch (const std::exception& e) {
        throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
    }
    const auto base = path.parent_path();
    ScenarioConfig cfg;
    {
        Reader top(doc, "", base);
        top.get("seed", cfg.seed);
        top.path("out_dir", cfg.out_dir);

        if (const auto* t = top.sub("horizon")) {
            Reader r(*t, "horizon", base);
            r.get("steps", cfg.demand.horizon);
            r.get("step_hours", cfg.demand.step_hours);
            std::string start;
            r.get("start_date", start);
            if (!start.empty()) {
                try {
                    cfg.demand.first_day = parse_date(start);
                } catch (const ParseError& e) {
                    throw ConfigError(fmt::format("horizon.start_date: {}", e.what()));
                }
            }
        }
        if (const auto* t = top.sub("tariffs")) {
            Reader r(*t, "tariffs", base);
            r.get("import_pence", cfg.import_pence);
            r.get("export_pence", cfg.export_pence);
        }
        if (const auto* t = top.sub("assets")) {
            Reader r(*t, "assets", base);
            auto& a = cfg.assets;
            r.get("battery_cost_per_kwh", a.battery_cost_per_kwh);
            r.get("generator_cost_per_kw", a.generator_cost_per_kw);
            r.get("battery_lifetime_years", a.battery_lifetime_years);
            r.get("generator_lifetime_years", a.generator_lifetime_years);
            r.get("power_per_kwh", a.power_per_kwh);
            r.get("soc_min_pct", a.soc_min_pct);
            r.get("soc_max_pct", a.soc_max_pct);
            r.get("charge_efficiency", a.charge_efficiency);
            r.get("discharge_efficiency", a.discharge_efficiency);
            a.battery_candidates = r.numbers("battery_candidates_kwh");
            a.generation_candidates = r.numbers("generation_candidates_kw");
            std::optional<std::filesystem::path> curve;
            r.path("cycle_life_csv", curve);
            if (curve) a.cycle_life = CycleLifeCurve::from_csv(*curve);
        }
        if (const auto* t = top.sub("demand")) {
            Reader r(*t, "demand", base);
            auto& d = cfg.demand;
            r.get("mean_daily_kwh", d.mean_daily_kwh);
            r.get("daily_kwh_sigma", d.daily_kwh_sigma);
            r.get("shape_noise", d.shape_noise);
            r.get("day_noise", d.day_noise);
            r.get("slot_noise", d.slot_noise);
            r.get("seasonal_amplitude", d.seasonal_amplitude);
        }
        if (const auto* t = top.sub("community")) {
            Reader r(*t, "community", base);
            auto& c = cfg.community;
            std::string source = "synthetic";
            r.get("source", source);
            if (source == "synthetic") c.source = CommunitySource::synthetic;
            else if (source == "csv") c.source = CommunitySource::csv;
            else if (source == "df_target") c.source = CommunitySource::df_target;
            else throw ConfigError(fmt::format("community.source '{}' is not synthetic, csv or df_target", source));
            r.get("size", c.size);
            r.path("profiles", c.profiles);
            r.path("archetypes", c.archetypes);
            r.path("wind", c.wind);
            r.get("target_df", c.target_df);
            r.get("df_tolerance", c.df_tolerance);
        }
        if (const auto* t = top.sub("market")) {
            Reader r(*t, "market", base);
            auto& m = cfg.market;
            std::string kind = to_string(m.kind);
            r.get("type", kind);
            m.kind = parse_market(kind);
            r.get("threshold", m.threshold);
            r.get("k", m.k);
            r.get("deadline", m.deadline);
            r.get("reservation_value", m.reservation_value);
            std::string umax = "best";
            r.get("max_utility", umax);
            require(umax == "best" || umax == "sum", "market.max_utility must be 'best' or 'sum'");
            m.max_utility_sum = umax == "sum";
            r.get("prosumer_pairs", m.prosumer_pairs);
            r.get("threads", m.threads);
        }
        if (const auto* t = top.sub("grid")) {
            Reader r(*t, "grid", base);
            r.path("feeder", cfg.feeder);
            r.path("mapping", cfg.feeder_mapping);
        }
        if (const auto* t = top.sub("df_sweep")) {
            Reader r(*t, "df_sweep", base);
            cfg.sweep.values = r.numbers("values");
            r.get("communities", cfg.sweep.communities);
            const auto markets = r.strings("markets");
            if (!markets.empty()) {
                cfg.sweep.markets.clear();
                for (const auto& m : markets) cfg.sweep.markets.push_back(parse_market(m));
            }
        }
        if (const auto* t = top.sub("cluster")) {
            Reader r(*t, "cluster", base);
            r.get("k_min", cfg.cluster.k_min);
            r.get("k_max", cfg.cluster.k_max);
            if (const auto* groups = r.array("merge")) {
                for (const auto& g : *groups) {
                    const auto* inner = g.as_array();
                    require(inner != nullptr, "cluster.merge must be an array of arrays");
                    std::vector<std::size_t> group;
                    for (const auto& item : *inner) {
                        auto v = item.value<std::int64_t>();
                        require(v && *v >= 0, "cluster.merge holds cluster indices");
                        group.push_back(static_cast<std::size_t>(*v));
                    }
                    cfg.cluster.merge.push_back(std::move(group));
                }
            }
        }
    }

    require(cfg.demand.horizon >= 1, "horizon.steps must be at least 1");
    require(cfg.demand.step_hours > 0.0, "horizon.step_hours must be positive");
    require(cfg.import_pence >= 0.0 && cfg.export_pence >= 0.0, "tariffs must be nonnegative");
    require(cfg.community.size >= 1, "community.size must be at least 1");
    require(cfg.market.k >= 1, "market.k must be at least 1");
    require(cfg.market.deadline >= 1, "market.deadline must be at least 1");
    require(cfg.cluster.k_min >= 1 && cfg.cluster.k_min <= cfg.cluster.k_max, "cluster k range is empty");
    require(cfg.feeder.has_value() == cfg.feeder_mapping.has_value(), "grid needs both feeder and mapping");
    if (cfg.community.source == CommunitySource::csv)
        require(cfg.community.profiles.has_value(), "community.source = csv needs community.profiles");
    for (const auto* p : {&cfg.community.profiles, &cfg.community.archetypes, &cfg.community.wind, &cfg.feeder,
                          &cfg.feeder_mapping})
        if (*p && !std::filesystem::exists(**p))
            throw ConfigError(fmt::format("{}: file not found", (*p)->string()));
    return cfg;
}

}  // namespace p2p
