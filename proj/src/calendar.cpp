#include "sfcast/calendar.hpp"

#include <charconv>
#include <cstdio>

#include "sfcast/errors.hpp"

namespace sfcast {

std::string YearMonth::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
    return buf;
}

YearMonth YearMonth::parse(std::string_view text) {
    auto fail = [&]() -> YearMonth { throw DataError("invalid month '" + std::string(text) + "', expected YYYY-MM"); };
    if (text.size() != 7 || text[4] != '-') return fail();
    YearMonth ym;
    const char* b = text.data();
    auto [p1, e1] = std::from_chars(b, b + 4, ym.year);
    if (e1 != std::errc{} || p1 != b + 4) return fail();
    auto [p2, e2] = std::from_chars(b + 5, b + 7, ym.month);
    if (e2 != std::errc{} || p2 != b + 7 || !ym.valid()) return fail();
    return ym;
}

}  // namespace sfcast
