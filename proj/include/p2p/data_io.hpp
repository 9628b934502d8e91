#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "p2p/profiles.hpp"

namespace p2p {

using Date = std::chrono::year_month_day;

/// Parses YYYY-MM-DD; throws ParseError naming `line` otherwise.
Date parse_date(const std::string& text, std::size_t line = 0);
std::string format_date(Date date);

struct LoadedProfile {
    std::string id;
    Date first_day;
    TimeSeries demand;  // kW, consecutive days of 48 half hours
};

/// Profile CSV: header `id,date,hh01..hh48`, one row per prosumer-day.
/// Rows of one id must cover consecutive days in order. Every id must cover
/// the same number of days. An empty file yields an empty list.
std::vector<LoadedProfile> load_profiles(const std::filesystem::path& path);

void save_profiles(const std::filesystem::path& path, std::span<const LoadedProfile> profiles);

/// Set of dates excluded from averaging.
class HolidayCalendar {
public:
    HolidayCalendar() = default;
    explicit HolidayCalendar(std::vector<Date> dates);

    /// England and Wales bank holidays for the given years, with weekend substitutes.
    static HolidayCalendar england(int first_year, int last_year);

    bool contains(Date date) const;
    std::vector<Date> dates() const;

private:
    std::set<std::chrono::sys_days> days_;
};

/// Easter Sunday in the Gregorian calendar.
Date easter_sunday(int year);

/// True for days kept by winter weekday averaging: December to March,
/// Monday to Thursday, not a holiday.
bool is_winter_weekday(Date date, const HolidayCalendar& calendar);

/// Mean daily shape over retained days, L1-normalised.
/// Throws DegenerateInputError when no day is retained or the mean is zero.
std::array<double, kSlotsPerDay> winter_weekday_average(const TimeSeries& profile, Date first_day,
                                                         const HolidayCalendar& calendar);

/// Scales a nonnegative vector to unit L1 norm; throws DegenerateInputError if all zero.
void l1_normalise(std::span<double> values);

/// Wind resource CSV: header `timestamp,norm_output`, values in [0, 1].
TimeSeries load_wind(const std::filesystem::path& path, double step_hours = kDefaultStepHours);
void save_wind(const std::filesystem::path& path, const TimeSeries& resource, Date first_day);

}  // namespace p2p
