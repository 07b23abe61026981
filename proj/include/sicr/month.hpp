#pragma once

#include <string>
#include <string_view>

namespace sicr {

/// Calendar month as a single integer: year * 12 + (month - 1).
using Month = int;

constexpr Month make_month(int year, int month) { return year * 12 + (month - 1); }
constexpr int month_year(Month m) { return m / 12; }
constexpr int month_of_year(Month m) { return m % 12 + 1; }

/// "YYYY-MM".
std::string format_month(Month m);

/// Parses "YYYY-MM"; throws sicr::Error("bad-month") otherwise.
Month parse_month(std::string_view text);

}  // namespace sicr
