#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sfcast/series.hpp"

namespace sfcast {

struct ForecastPlot {
    std::string title;
    TimeSeries history;  // full observed series, test window included
    YearMonth test_start{};
    std::vector<std::pair<std::string, VectorXd>> predictions;  // label, values from test_start
};

/// Static SVG: the whole observed series on top, the test window below with month labels.
/// Observed values are solid, predictions dashed. Output depends only on the input.
[[nodiscard]] std::string forecast_svg(const ForecastPlot& plot);

}  // namespace sfcast
