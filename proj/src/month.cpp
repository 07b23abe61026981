#include "sicr/month.hpp"

#include <charconv>
#include <cstdio>

#include "sicr/error.hpp"

namespace sicr {

std::string format_month(Month m) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d", month_year(m), month_of_year(m));
    return buf;
}

Month parse_month(std::string_view text) {
    int year = 0;
    int month = 0;
    if (text.size() != 7 || text[4] != '-') throw Error("bad-month", std::string(text));
    auto [p1, e1] = std::from_chars(text.data(), text.data() + 4, year);
    auto [p2, e2] = std::from_chars(text.data() + 5, text.data() + 7, month);
    if (e1 != std::errc{} || e2 != std::errc{} || p1 != text.data() + 4 ||
        p2 != text.data() + 7 || month < 1 || month > 12) {
        throw Error("bad-month", std::string(text));
    }
    return make_month(year, month);
}

}  // namespace sicr
