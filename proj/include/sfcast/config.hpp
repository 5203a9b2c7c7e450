#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sfcast/evalbench.hpp"
#include "sfcast/synthetic.hpp"

namespace sfcast {

struct OutputConfig {
    std::filesystem::path dir = "out";
    bool emit_plots = false;
};

/// Run configuration read from JSON (schema in docs/config.md).
struct RunConfig {
    std::optional<YearMonth> train_end;  // default: horizon months before the data end
    int horizon = 12;
    ComparisonConfig comparison{};
    std::vector<std::pair<std::string, int>> arimax_lags;  // (covariate name, lag)
    OutputConfig output{};
    std::uint64_t seed = 1;

    /// Split against a dataset, filling the default train_end.
    [[nodiscard]] SplitSpec split_for(const Dataset& dataset) const;

    /// Comparison settings with covariate names resolved to indices of `dataset`.
    [[nodiscard]] ComparisonConfig resolved(const Dataset& dataset) const;
};

/// Throws DataError on malformed JSON or out-of-range settings.
[[nodiscard]] RunConfig parse_run_config(const std::string& json_text);

/// Throws DataError on malformed JSON.
[[nodiscard]] SyntheticSpec parse_synthetic_spec(const std::string& json_text);

}  // namespace sfcast
