#include "satstack/date.hpp"

#include <cctype>
#include <cstdio>
#include <vector>

#include "satstack/error.hpp"

namespace satstack {

namespace chr = std::chrono;

namespace {

constexpr std::string_view kModule = "grid-core";

// Maximal runs of ASCII digits in `text`, as (offset, length).
std::vector<std::pair<std::size_t, std::size_t>> digit_runs(std::string_view text) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t i = 0;
  while (i < text.size()) {
    if (std::isdigit(static_cast<unsigned char>(text[i]))) {
      std::size_t j = i;
      while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
      runs.emplace_back(i, j - i);
      i = j;
    } else {
      ++i;
    }
  }
  return runs;
}

int to_int(std::string_view digits) {
  int v = 0;
  for (char c : digits) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

bool is_leap_year(int year) { return chr::year{year}.is_leap(); }

int days_in_year(int year) { return is_leap_year(year) ? 366 : 365; }

int day_of_year(const Date& d) {
  const chr::sys_days jan1{chr::year_month_day{d.year(), chr::January, chr::day{1}}};
  return static_cast<int>((chr::sys_days{d} - jan1).count()) + 1;
}

Date date_from_doy(int year, int doy) {
  if (doy < 1 || doy > days_in_year(year)) {
    throw Error(kModule, Errc::day_out_of_range,
                "day " + std::to_string(doy) + " of year " + std::to_string(year));
  }
  const chr::sys_days jan1{chr::year_month_day{chr::year{year}, chr::January, chr::day{1}}};
  return Date{jan1 + chr::days{doy - 1}};
}

Date add_days(const Date& d, int days) { return Date{chr::sys_days{d} + chr::days{days}}; }

int days_between(const Date& a, const Date& b) {
  return static_cast<int>((chr::sys_days{a} - chr::sys_days{b}).count());
}

Date parse_iso_date(std::string_view text) {
  auto bad = [&] { return Error("date", Errc::invalid_argument, "not an ISO date: '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  for (std::size_t i : {0, 1, 2, 3, 5, 6, 8, 9}) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) throw bad();
  }
  const Date d{chr::year{to_int(text.substr(0, 4))}, chr::month{static_cast<unsigned>(to_int(text.substr(5, 2)))},
               chr::day{static_cast<unsigned>(to_int(text.substr(8, 2)))}};
  if (!d.ok()) throw bad();
  return d;
}

std::string format_iso_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

Date parse_layer_date(std::string_view label) {
  for (auto [pos, len] : digit_runs(label)) {
    if (len != 7) continue;
    const int year = to_int(label.substr(pos, 4));
    const int doy = to_int(label.substr(pos + 4, 3));
    return date_from_doy(year, doy);
  }
  throw Error(kModule, Errc::no_date_token, "no YYYYJJJ token in '" + std::string(label) + "'");
}

std::string format_layer_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%03d", static_cast<int>(d.year()), day_of_year(d));
  return buf;
}

std::optional<Date> capture_date_from_name(std::string_view name) {
  const auto runs = digit_runs(name);
  for (auto [pos, len] : runs) {
    if (len != 7) continue;
    const int year = to_int(name.substr(pos, 4));
    const int doy = to_int(name.substr(pos + 4, 3));
    if (doy >= 1 && doy <= days_in_year(year)) return date_from_doy(year, doy);
  }
  for (auto [pos, len] : runs) {
    if (len != 8) continue;
    // Landsat/Sentinel names embed YYYYMMDD, possibly followed by a T-prefixed time block.
    const Date d{chr::year{to_int(name.substr(pos, 4))},
                 chr::month{static_cast<unsigned>(to_int(name.substr(pos + 4, 2)))},
                 chr::day{static_cast<unsigned>(to_int(name.substr(pos + 6, 2)))}};
    if (d.ok() && static_cast<int>(d.year()) > 1900) return d;
  }
  return std::nullopt;
}

}  // namespace satstack
