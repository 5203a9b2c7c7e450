#pragma once

#include <compare>
#include <string>
#include <string_view>

namespace sfcast {

inline constexpr int kMonthsPerYear = 12;

/// A calendar month. Arithmetic is in whole months.
struct YearMonth {
    int year = 1970;
    int month = 1;  // 1..12

    /// Months since year 0, January.
    [[nodiscard]] constexpr long ordinal() const { return static_cast<long>(year) * kMonthsPerYear + (month - 1); }

    [[nodiscard]] static constexpr YearMonth from_ordinal(long ordinal) {
        long y = ordinal / kMonthsPerYear;
        long m = ordinal % kMonthsPerYear;
        if (m < 0) {
            m += kMonthsPerYear;
            --y;
        }
        return YearMonth{static_cast<int>(y), static_cast<int>(m) + 1};
    }

    [[nodiscard]] constexpr YearMonth plus(long months) const { return from_ordinal(ordinal() + months); }

    [[nodiscard]] bool valid() const { return month >= 1 && month <= kMonthsPerYear; }

    /// "YYYY-MM".
    [[nodiscard]] std::string to_string() const;

    /// Parses "YYYY-MM"; throws DataError on anything else.
    [[nodiscard]] static YearMonth parse(std::string_view text);

    friend constexpr auto operator<=>(const YearMonth& a, const YearMonth& b) {
        return a.ordinal() <=> b.ordinal();
    }
    friend constexpr bool operator==(const YearMonth& a, const YearMonth& b) = default;
};

/// Signed number of months from `from` to `to`.
[[nodiscard]] constexpr long months_between(YearMonth from, YearMonth to) { return to.ordinal() - from.ordinal(); }

}  // namespace sfcast
