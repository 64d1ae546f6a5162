#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace satstack {

using Date = std::chrono::year_month_day;

/// Day of year, 1-based.
int day_of_year(const Date& d);
int days_in_year(int year);
bool is_leap_year(int year);

/// Throws Error{day_out_of_range} when doy is outside the year.
Date date_from_doy(int year, int doy);

Date add_days(const Date& d, int days);
/// Signed day difference a - b.
int days_between(const Date& a, const Date& b);

/// "YYYY-MM-DD"; throws Error{invalid_argument} on malformed input.
Date parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& d);

/// Extracts the first standalone 7-digit YYYYJJJ token of a layer label.
Date parse_layer_date(std::string_view label);
std::string format_layer_date(const Date& d);

/// parse_layer_date, falling back to the first valid 8-digit YYYYMMDD token
/// (Landsat / Sentinel-2 product names).
std::optional<Date> capture_date_from_name(std::string_view name);

}  // namespace satstack
