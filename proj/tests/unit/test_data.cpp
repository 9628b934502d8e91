#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <fmt/format.h>

#include "p2p/clustering.hpp"
#include "p2p/data_io.hpp"
#include "p2p/errors.hpp"
#include "p2p/synthesis.hpp"

using namespace p2p;
using namespace std::chrono;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "p2p_data_tests";
    std::filesystem::create_directories(dir);
    return dir / name;
}

void write(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string header() {
    std::string h = "id,date";
    for (int i = 1; i <= 48; ++i) h += fmt::format(",hh{:02}", i);
    return h + "\n";
}

std::string row(const std::string& id, const std::string& date, double value) {
    std::string r = id + "," + date;
    for (int i = 0; i < 48; ++i) r += fmt::format(",{}", value);
    return r + "\n";
}

std::vector<Vector> blobs(std::size_t groups, std::size_t per_group, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, spread);
    std::vector<Vector> out;
    for (std::size_t g = 0; g < groups; ++g) {
        for (std::size_t i = 0; i < per_group; ++i) {
            Vector v(4, 0.0);
            v[g % 4] = 10.0;
            for (auto& x : v) x += noise(rng);
            out.push_back(v);
        }
    }
    return out;
}

std::vector<double> vec(const TimeSeries& s) { return {s.values().begin(), s.values().end()}; }

DemandParams short_params() {
    DemandParams p;
    p.horizon = 48 * 28;
    return p;
}

}  // namespace

TEST(LoadProfiles, TwoRows) {
    const auto path = scratch("two.csv");
    write(path, header() + row("a", "2019-12-02", 1.0) + row("b", "2019-12-02", 0.5));
    const auto ps = load_profiles(path);
    ASSERT_EQ(ps.size(), 2u);
    EXPECT_EQ(ps[0].id, "a");
    EXPECT_EQ(ps[1].demand.size(), 48u);
    EXPECT_DOUBLE_EQ(ps[1].demand[47], 0.5);
    EXPECT_EQ(ps[0].first_day, year_month_day(year{2019}, December, day{2}));
}

TEST(LoadProfiles, NegativeValueNamesRow) {
    const auto path = scratch("neg.csv");
    write(path, header() + row("a", "2019-12-02", 1.0) + row("b", "2019-12-02", -0.5));
    try {
        load_profiles(path);
        FAIL() << "negative demand accepted";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
    }
}

TEST(LoadProfiles, EmptyFileAndRaggedHorizons) {
    const auto empty = scratch("empty.csv");
    write(empty, "");
    EXPECT_TRUE(load_profiles(empty).empty());

    const auto ragged = scratch("ragged.csv");
    write(ragged, header() + row("a", "2019-12-02", 1.0) + row("a", "2019-12-03", 1.0) + row("b", "2019-12-02", 1.0));
    EXPECT_THROW(load_profiles(ragged), ParseError);

    const auto gap = scratch("gap.csv");
    write(gap, header() + row("a", "2019-12-02", 1.0) + row("a", "2019-12-04", 1.0));
    EXPECT_THROW(load_profiles(gap), ParseError);
    EXPECT_THROW(load_profiles(scratch("missing.csv")), std::exception);
}

TEST(LoadProfiles, RoundTrip) {
    std::vector<double> v(96);
    std::iota(v.begin(), v.end(), 0.0);
    const std::vector<LoadedProfile> ps{{"x", year_month_day(year{2020}, January, day{6}), TimeSeries(v)}};
    const auto path = scratch("rt.csv");
    save_profiles(path, ps);
    const auto back = load_profiles(path);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].first_day, ps[0].first_day);
    for (std::size_t t = 0; t < 96; ++t) EXPECT_DOUBLE_EQ(back[0].demand[t], v[t]);
}

TEST(Calendar, EasterSunday) {
    EXPECT_EQ(easter_sunday(2019), year_month_day(year{2019}, April, day{21}));
    EXPECT_EQ(easter_sunday(2020), year_month_day(year{2020}, April, day{12}));
    EXPECT_EQ(easter_sunday(2024), year_month_day(year{2024}, March, day{31}));
    EXPECT_EQ(easter_sunday(2038), year_month_day(year{2038}, April, day{25}));
}

TEST(Calendar, EnglandBankHolidays) {
    const auto cal = HolidayCalendar::england(2020, 2021);
    EXPECT_TRUE(cal.contains(year_month_day(year{2020}, December, day{25})));
    EXPECT_TRUE(cal.contains(year_month_day(year{2020}, December, day{28})));  // Boxing Day substitute
    EXPECT_TRUE(cal.contains(year_month_day(year{2021}, January, day{1})));
    EXPECT_TRUE(cal.contains(year_month_day(year{2020}, April, day{10})));  // Good Friday
    EXPECT_FALSE(cal.contains(year_month_day(year{2020}, December, day{24})));
}

TEST(Calendar, WinterWeekdays) {
    const HolidayCalendar none;
    EXPECT_TRUE(is_winter_weekday(year_month_day(year{2019}, December, day{2}), none));   // Monday
    EXPECT_TRUE(is_winter_weekday(year_month_day(year{2019}, December, day{5}), none));   // Thursday
    EXPECT_FALSE(is_winter_weekday(year_month_day(year{2019}, December, day{6}), none));  // Friday
    EXPECT_FALSE(is_winter_weekday(year_month_day(year{2019}, April, day{1}), none));
    const auto cal = HolidayCalendar::england(2019, 2019);
    EXPECT_FALSE(is_winter_weekday(year_month_day(year{2019}, December, day{25}), cal));
}

TEST(WinterAverage, ConstantProfileIsUniform) {
    const auto avg = winter_weekday_average(TimeSeries::constant(48 * 7, 1.0),
                                            year_month_day(year{2019}, December, day{2}), {});
    for (double x : avg) EXPECT_NEAR(x, 1.0 / 48.0, 1e-15);
}

TEST(WinterAverage, SingleSlot) {
    std::vector<double> v(48, 0.0);
    v[35] = 3.0;
    const auto avg = winter_weekday_average(TimeSeries(v), year_month_day(year{2019}, December, day{2}), {});
    for (std::size_t s = 0; s < 48; ++s) EXPECT_DOUBLE_EQ(avg[s], s == 35 ? 1.0 : 0.0);
}

TEST(WinterAverage, TwoDaysAveraged) {
    std::vector<double> v(96, 0.0);
    v[0] = 2.0;
    v[49] = 2.0;
    const auto avg = winter_weekday_average(TimeSeries(v), year_month_day(year{2019}, December, day{2}), {});
    EXPECT_DOUBLE_EQ(avg[0], 0.5);
    EXPECT_DOUBLE_EQ(avg[1], 0.5);
    EXPECT_NEAR(std::accumulate(avg.begin(), avg.end(), 0.0), 1.0, 1e-12);
}

TEST(WinterAverage, FiltersWeekendsAndSummer) {
    // Friday holds all the mass; the only retained day is the following Monday
    std::vector<double> v(96 + 48 * 2, 0.0);
    v[10] = 5.0;            // Friday 6 Dec
    v[48 * 3 + 20] = 1.0;   // Monday 9 Dec
    const auto avg = winter_weekday_average(TimeSeries(v), year_month_day(year{2019}, December, day{6}), {});
    EXPECT_DOUBLE_EQ(avg[20], 1.0);
    EXPECT_THROW(winter_weekday_average(TimeSeries::constant(48, 1.0), year_month_day(year{2019}, June, day{3}), {}),
                 DegenerateInputError);
}

TEST(Kmeans, RecoversSeparatedGroups) {
    const auto v = blobs(2, 15, 0.3, 4);
    const auto r = kmeans(v, 2, 11);
    ASSERT_EQ(r.assignments.size(), 30u);
    for (std::size_t i = 1; i < 15; ++i) EXPECT_EQ(r.assignments[i], r.assignments[0]);
    for (std::size_t i = 16; i < 30; ++i) EXPECT_EQ(r.assignments[i], r.assignments[15]);
    EXPECT_NE(r.assignments[0], r.assignments[15]);
    EXPECT_GE(r.silhouette, -1.0);
    EXPECT_LE(r.silhouette, 1.0);
}

TEST(Kmeans, OneClusterPerPointHasZeroInertia) {
    const auto v = blobs(3, 3, 1.0, 2);
    EXPECT_NEAR(kmeans(v, v.size(), 1).inertia, 0.0, 1e-12);
    EXPECT_THROW(kmeans(v, v.size() + 1, 1), ValidationError);
    EXPECT_THROW(kmeans(v, 0, 1), ValidationError);
}

TEST(Kmeans, InertiaNonincreasingAndDeterministic) {
    const auto v = blobs(4, 20, 3.0, 6);
    const auto a = kmeans(v, 5, 99);
    for (std::size_t i = 1; i < a.inertia_history.size(); ++i)
        EXPECT_LE(a.inertia_history[i], a.inertia_history[i - 1] + 1e-9);
    const auto b = kmeans(v, 5, 99);
    EXPECT_EQ(a.assignments, b.assignments);
    EXPECT_EQ(a.inertia, b.inertia);
}

TEST(SelectK, ThreeBlobs) {
    const auto v = blobs(3, 20, 0.4, 8);
    const std::vector<std::size_t> range{2, 3, 4, 5, 6};
    const auto s = select_k(v, range, 3);
    EXPECT_EQ(s.chosen, 3u);
    EXPECT_EQ(s.inertia.size(), range.size());
    EXPECT_EQ(s.silhouette.size(), range.size());
}

TEST(SelectK, SingleBlobPicksMinimum) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<Vector> v(60, Vector(48));
    for (auto& x : v)
        for (auto& c : x) c = n(rng);
    const std::vector<std::size_t> range{2, 3, 4, 5, 6};
    EXPECT_EQ(select_k(v, range, 3).chosen, 2u);
}

TEST(Clustering, MergeKeepsMembers) {
    const auto v = blobs(3, 10, 0.3, 1);
    const auto r = kmeans(v, 3, 1);
    const auto m = merge_clusters(v, r, {{0, 1}, {2}});
    EXPECT_EQ(m.k, 2u);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_EQ(m.assignments[i], r.assignments[i] == 2 ? 1u : 0u);
}

TEST(Archetypes, DefaultLibraryInvariants) {
    const auto lib = ArchetypeLibrary::default_library();
    ASSERT_EQ(lib.size(), 5u);
    double total = 0.0;
    for (const auto& a : lib.archetypes()) {
        EXPECT_NEAR(std::accumulate(a.weights.begin(), a.weights.end(), 0.0), 1.0, 1e-12);
        for (double s : a.std) EXPECT_GE(s, 0.0);
        total += a.population_weight;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(lib[0].population_weight, 3910.0 / 5251.0, 1e-12);

    const auto path = scratch("lib.json");
    lib.to_json(path);
    const auto back = ArchetypeLibrary::from_json(path);
    ASSERT_EQ(back.size(), 5u);
    EXPECT_EQ(back[4].name, lib[4].name);
    EXPECT_DOUBLE_EQ(back[2].weights[30], lib[2].weights[30]);
}

TEST(Synthesis, StratifiedCounts) {
    const auto w = ArchetypeLibrary::default_library().population_weights();
    const std::vector<double> expected{74.46, 11.41, 10.02, 3.22, 0.90};
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        std::mt19937_64 rng(seed);
        const auto c = stratified_counts(w, 100, rng);
        EXPECT_EQ(std::accumulate(c.begin(), c.end(), std::size_t{0}), 100u);
        for (std::size_t i = 0; i < c.size(); ++i) {
            EXPECT_GE(double(c[i]), std::floor(expected[i]));
            EXPECT_LE(double(c[i]), std::floor(expected[i]) + 1);
        }
    }
    std::mt19937_64 rng(1);
    const auto one = stratified_counts(w, 1, rng);
    EXPECT_EQ(std::accumulate(one.begin(), one.end(), std::size_t{0}), 1u);
}

TEST(Synthesis, ReproducibleGivenSeed) {
    const auto lib = ArchetypeLibrary::default_library();
    const auto a = synthesize_demands(lib, 8, short_params(), 42);
    const auto b = synthesize_demands(lib, 8, short_params(), 42);
    ASSERT_EQ(a.demands.size(), 8u);
    EXPECT_EQ(a.archetype_of, b.archetype_of);
    for (std::size_t i = 0; i < 8; ++i) {
        ASSERT_EQ(a.demands[i].size(), 48u * 28);
        EXPECT_EQ(vec(a.demands[i]), vec(b.demands[i]));
        for (double x : a.demands[i].values()) EXPECT_GE(x, 0.0);
    }
}

TEST(Synthesis, NoiselessSameArchetypeIsIdenticalUpToScale) {
    const auto lib = ArchetypeLibrary::default_library();
    auto p = short_params();
    const auto draws = draw_demand_noise(3, lib.size(), p, 7);
    p.seasonal_amplitude = 0.0;
    const std::vector<std::size_t> arch{1, 1, 1};
    const auto d = build_demands(lib, arch, draws, p, 0.0);
    const double ratio = d[1][5] / d[0][5];
    for (std::size_t t = 0; t < d[0].size(); ++t) EXPECT_NEAR(d[1][t], ratio * d[0][t], 1e-9);
}

TEST(Wind, PowerCurveAndResource) {
    EXPECT_EQ(wind_power_curve(2.0), 0.0);
    EXPECT_EQ(wind_power_curve(20.0), 1.0);
    EXPECT_EQ(wind_power_curve(30.0), 0.0);
    EXPECT_GT(wind_power_curve(10.0), wind_power_curve(6.0));
    const auto w = synthesize_wind(48 * 10, 0.5, 3);
    for (double x : w.values()) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
    }
    EXPECT_EQ(vec(w), vec(synthesize_wind(48 * 10, 0.5, 3)));
}

TEST(DiversityFactor, Examples) {
    const std::vector<TimeSeries> same{TimeSeries({1, 2, 1}), TimeSeries({1, 2, 1})};
    EXPECT_DOUBLE_EQ(diversity_factor(same), 1.0);
    const std::vector<TimeSeries> shoulders{TimeSeries({2, 1}), TimeSeries({2, 3})};
    EXPECT_DOUBLE_EQ(diversity_factor(shoulders), 1.25);
    const std::vector<TimeSeries> disjoint{TimeSeries({1, 0}), TimeSeries({0, 1})};
    EXPECT_DOUBLE_EQ(diversity_factor(disjoint), 2.0);
    const std::vector<TimeSeries> zero{TimeSeries({0, 0})};
    EXPECT_THROW(diversity_factor(zero), DegenerateInputError);
}

TEST(DiversityFactor, AtLeastOne) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(0.0, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<TimeSeries> d;
        for (int i = 0; i < 4; ++i) d.push_back(TimeSeries({u(rng), u(rng), u(rng), u(rng)}));
        EXPECT_GE(diversity_factor(d), 1.0 - 1e-12);
    }
}

TEST(GenerateForDf, TargetsAndErrors) {
    const auto lib = ArchetypeLibrary::default_library();
    EXPECT_THROW(generate_for_df(lib, 20, 0.9, 0.05, 1, short_params()), ValidationError);
    const auto flat = generate_for_df(lib, 20, 1.0, 0.02, 1, short_params());
    EXPECT_NEAR(flat.realized_df, 1.0, 0.02);
    const auto mixed = generate_for_df(lib, 20, 1.5, 0.05, 1, short_params());
    EXPECT_NEAR(mixed.realized_df, 1.5, 0.05);
    EXPECT_NEAR(diversity_factor(mixed.community.demands), mixed.realized_df, 1e-12);
    EXPECT_THROW(generate_for_df(lib, 2, 40.0, 0.01, 1, short_params()), SearchExhaustedError);
}

TEST(GenerateForDf, EverySeedMeetsTarget) {
    const auto lib = ArchetypeLibrary::default_library();
    for (std::uint64_t seed = 1; seed <= 8; ++seed) {
        for (double target : {1.2, 1.4}) {
            const auto c = generate_for_df(lib, 20, target, 0.02, seed, short_params());
            EXPECT_NEAR(c.realized_df, target, 0.02) << "seed " << seed;
            EXPECT_EQ(c.community.demands.size(), 20u);
        }
    }
}
