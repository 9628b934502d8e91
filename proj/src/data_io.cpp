#include "p2p/data_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include <fmt/format.h>

#include "p2p/csv.hpp"
#include "p2p/errors.hpp"

namespace p2p {

using namespace std::chrono;

Date parse_date(const std::string& text, std::size_t line) {
    int y = 0;
    unsigned m = 0, d = 0;
    char dash1 = 0, dash2 = 0;
    if (std::sscanf(text.c_str(), "%d%c%u%c%u", &y, &dash1, &m, &dash2, &d) != 5 || dash1 != '-' || dash2 != '-')
        throw ParseError(fmt::format("bad date '{}'", text), line);
    const Date date{year{y}, month{m}, day{d}};
    if (!date.ok()) throw ParseError(fmt::format("bad date '{}'", text), line);
    return date;
}

std::string format_date(Date date) {
    return fmt::format("{:04}-{:02}-{:02}", static_cast<int>(date.year()), static_cast<unsigned>(date.month()),
                       static_cast<unsigned>(date.day()));
}

std::vector<LoadedProfile> load_profiles(const std::filesystem::path& path) {
    const auto rows = csv::read(path);
    if (rows.empty()) return {};
    std::vector<std::string> header{"id", "date"};
    for (std::size_t s = 1; s <= kSlotsPerDay; ++s) header.push_back(fmt::format("hh{:02}", s));
    csv::expect_header(rows.front(), header);

    struct Accum {
        Date first;
        sys_days last;
        std::vector<double> values;
        std::size_t last_line;
    };
    std::vector<std::string> order;
    std::map<std::string, Accum> by_id;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != header.size())
            throw ParseError(fmt::format("expected {} fields, found {}", header.size(), row.fields.size()), row.line);
        const Date date = parse_date(row.fields[1], row.line);
        auto [it, fresh] = by_id.try_emplace(row.fields[0]);
        auto& acc = it->second;
        if (fresh) {
            order.push_back(row.fields[0]);
            acc.first = date;
        } else if (sys_days(date) != acc.last + days{1}) {
            throw ParseError(fmt::format("id '{}' skips from {} to {}", row.fields[0],
                                         format_date(Date(acc.last)), row.fields[1]),
                             row.line);
        }
        acc.last = sys_days(date);
        acc.last_line = row.line;
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) {
            const double v = csv::to_double(row.fields[2 + s], row.line, header[2 + s]);
            if (!(v >= 0.0) || !std::isfinite(v))
                throw ParseError(fmt::format("negative or non-finite demand in {}", header[2 + s]), row.line);
            acc.values.push_back(v);
        }
    }

    std::vector<LoadedProfile> out;
    out.reserve(order.size());
    for (const auto& id : order) {
        auto& acc = by_id.at(id);
        if (!out.empty() && acc.values.size() != out.front().demand.size())
            throw ParseError(fmt::format("id '{}' covers {} days, expected {}", id, acc.values.size() / kSlotsPerDay,
                                         out.front().demand.size() / kSlotsPerDay),
                             acc.last_line);
        out.push_back({id, acc.first, TimeSeries(std::move(acc.values), 24.0 / kSlotsPerDay)});
    }
    return out;
}

void save_profiles(const std::filesystem::path& path, std::span<const LoadedProfile> profiles) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("{}: cannot open for writing", path.string()));
    out << "id,date";
    for (std::size_t s = 1; s <= kSlotsPerDay; ++s) out << fmt::format(",hh{:02}", s);
    out << '\n';
    for (const auto& p : profiles) {
        if (p.demand.size() % kSlotsPerDay != 0) throw DimensionError("profile is not a whole number of days");
        for (std::size_t d = 0; d < p.demand.size() / kSlotsPerDay; ++d) {
            out << p.id << ',' << format_date(Date(sys_days(p.first_day) + days{d}));
            for (std::size_t s = 0; s < kSlotsPerDay; ++s) out << fmt::format(",{}", p.demand[d * kSlotsPerDay + s]);
            out << '\n';
        }
    }
}

HolidayCalendar::HolidayCalendar(std::vector<Date> dates) {
    for (const auto& d : dates) days_.insert(sys_days(d));
}

Date easter_sunday(int y) {
    // Anonymous Gregorian algorithm.
    const int a = y % 19, b = y / 100, c = y % 100, d = b / 4, e = b % 4;
    const int f = (b + 8) / 25, g = (b - f + 1) / 3, h = (19 * a + b - d - g + 15) % 30;
    const int i = c / 4, k = c % 4, l = (32 + 2 * e + 2 * i - h - k) % 7;
    const int m = (a + 11 * h + 22 * l) / 451;
    const int month_ = (h + l - 7 * m + 114) / 31;
    const int day_ = ((h + l - 7 * m + 114) % 31) + 1;
    return Date{year{y}, month{static_cast<unsigned>(month_)}, day{static_cast<unsigned>(day_)}};
}

HolidayCalendar HolidayCalendar::england(int first_year, int last_year) {
    HolidayCalendar cal;
    auto is_weekend = [](sys_days d) {
        const weekday w{d};
        return w == Saturday || w == Sunday;
    };
    auto add_substituted = [&](sys_days d) {
        while (is_weekend(d) || cal.days_.contains(d)) d += days{1};
        cal.days_.insert(d);
    };
    for (int y = first_year; y <= last_year; ++y) {
        const year yr{y};
        add_substituted(sys_days(yr / January / 1));
        const sys_days easter(easter_sunday(y));
        cal.days_.insert(easter - days{2});
        cal.days_.insert(easter + days{1});
        cal.days_.insert(sys_days(yr / May / Monday[1]));
        cal.days_.insert(sys_days(yr / May / Monday[last]));
        cal.days_.insert(sys_days(yr / August / Monday[last]));
        add_substituted(sys_days(yr / December / 25));
        add_substituted(sys_days(yr / December / 26));
    }
    return cal;
}

bool HolidayCalendar::contains(Date date) const { return days_.contains(sys_days(date)); }

std::vector<Date> HolidayCalendar::dates() const {
    std::vector<Date> out;
    for (auto d : days_) out.emplace_back(d);
    return out;
}

bool is_winter_weekday(Date date, const HolidayCalendar& calendar) {
    const unsigned m = static_cast<unsigned>(date.month());
    if (m > 3 && m < 12) return false;
    const weekday w{sys_days(date)};
    if (w == Friday || w == Saturday || w == Sunday) return false;
    return !calendar.contains(date);
}

void l1_normalise(std::span<double> values) {
    double total = 0.0;
    for (double v : values) total += std::abs(v);
    if (!(total > 0.0)) throw DegenerateInputError("cannot L1-normalise an all-zero vector");
    for (double& v : values) v /= total;
}

std::array<double, kSlotsPerDay> winter_weekday_average(const TimeSeries& profile, Date first_day,
                                                         const HolidayCalendar& calendar) {
    if (profile.size() % kSlotsPerDay != 0) throw DimensionError("profile is not a whole number of days");
    std::array<double, kSlotsPerDay> mean{};
    std::size_t kept = 0;
    for (std::size_t d = 0; d < profile.size() / kSlotsPerDay; ++d) {
        if (!is_winter_weekday(Date(sys_days(first_day) + days{d}), calendar)) continue;
        for (std::size_t s = 0; s < kSlotsPerDay; ++s) mean[s] += profile[d * kSlotsPerDay + s];
        ++kept;
    }
    if (kept == 0) throw DegenerateInputError("no winter weekday in the profile");
    for (double& v : mean) v /= static_cast<double>(kept);
    l1_normalise(mean);
    return mean;
}

TimeSeries load_wind(const std::filesystem::path& path, double step_hours) {
    const auto rows = csv::read(path);
    if (rows.empty()) throw ConfigError(fmt::format("{}: empty wind file", path.string()));
    csv::expect_header(rows.front(), {"timestamp", "norm_output"});
    std::vector<double> values;
    values.reserve(rows.size() - 1);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != 2) throw ParseError("wind row needs 2 fields", row.line);
        const double v = csv::to_double(row.fields[1], row.line, "norm_output");
        if (!(v >= 0.0 && v <= 1.0)) throw ParseError("norm_output must lie in [0, 1]", row.line);
        values.push_back(v);
    }
    if (values.empty()) throw ConfigError(fmt::format("{}: no wind data", path.string()));
    return TimeSeries(std::move(values), step_hours);
}

void save_wind(const std::filesystem::path& path, const TimeSeries& resource, Date first_day) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(fmt::format("{}: cannot open for writing", path.string()));
    out << "timestamp,norm_output\n";
    const auto minutes_per_step = static_cast<long>(std::lround(resource.step_hours() * 60.0));
    const sys_time<minutes> start{sys_days(first_day)};
    for (std::size_t t = 0; t < resource.size(); ++t) {
        const sys_time<minutes> ts = start + minutes{minutes_per_step * static_cast<long>(t)};
        const auto day_ = floor<days>(ts);
        const hh_mm_ss hms{ts - day_};
        out << fmt::format("{}T{:02}:{:02},{}\n", format_date(Date(day_)), hms.hours().count(),
                           hms.minutes().count(), resource[t]);
    }
}

}  // namespace p2p
