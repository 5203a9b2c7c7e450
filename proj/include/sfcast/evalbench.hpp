#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sfcast/arima.hpp"
#include "sfcast/series.hpp"
#include "sfcast/sfplr.hpp"

namespace sfcast {

// ---------------------------------------------------------------------------
// Skill metrics

/// Nash-Sutcliffe efficiency: 1 - sum (pred - obs)^2 / sum (ref - obs)^2, where ref is the
/// mean of `obs` unless a reference mean is supplied. Throws std::invalid_argument on
/// length mismatch, fewer than two points, or a zero denominator.
template <typename DerivedP, typename DerivedO>
[[nodiscard]] double nse(const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedO>& obs,
                         std::optional<double> reference_mean = std::nullopt) {
    if (pred.size() != obs.size()) throw std::invalid_argument("nse: prediction and observation lengths differ");
    if (obs.size() < 2) throw std::invalid_argument("nse needs at least two observations");
    const double ref = reference_mean ? *reference_mean : static_cast<double>(obs.mean());
    const double num = (pred - obs).squaredNorm();
    const double den = (obs.array() - ref).square().sum();
    if (!(den > 0.0)) throw std::invalid_argument("nse is undefined for constant observations");
    return 1.0 - num / den;
}

/// Root mean square error over the common length.
template <typename DerivedP, typename DerivedO>
[[nodiscard]] double rmse(const Eigen::MatrixBase<DerivedP>& pred, const Eigen::MatrixBase<DerivedO>& obs) {
    if (pred.size() != obs.size()) throw std::invalid_argument("rmse: prediction and observation lengths differ");
    if (obs.size() < 1) throw std::invalid_argument("rmse needs at least one observation");
    return std::sqrt((pred - obs).squaredNorm() / static_cast<double>(obs.size()));
}

// ---------------------------------------------------------------------------
// Data

struct RegionData {
    std::string name;
    TimeSeries incidence;                // per 100k population, gap-free
    std::vector<TimeSeries> covariates;  // aligned with Dataset::covariate_names
};

struct Dataset {
    std::vector<std::string> covariate_names;
    std::vector<RegionData> regions;
};

// ---------------------------------------------------------------------------
// Protocol

enum class Method { arima, arimax, sfplr };

[[nodiscard]] std::string to_string(Method method);
[[nodiscard]] Method parse_method(const std::string& name);
inline const std::vector<Method> kAllMethods{Method::arima, Method::arimax, Method::sfplr};

struct SplitSpec {
    YearMonth train_end{};  // inclusive
    int horizon = 12;
};

enum class NseReference { test_mean, train_mean };

struct SfplrConfig {
    SfplrOptions options{};
    CovariateMode mode = CovariateMode::contemporaneous;
    int tau = kMonthsPerYear;
};

struct ComparisonConfig {
    OrderSearchOptions arima{};
    std::vector<CovariateLag> arimax_lags;  // empty: lag 0 for every covariate
    SfplrConfig sfplr{};
    NseReference nse_reference = NseReference::test_mean;
    bool clamp_nonnegative = true;
    std::vector<Method> methods = kAllMethods;
};

/// Point forecasts of one method for one region over the test window.
struct MethodForecast {
    VectorXd predictions;      // reported values (clamped at zero when configured)
    VectorXd raw_predictions;  // before clamping
    std::string detail;        // fitted orders, bandwidths and similar
    int fallbacks = 0;         // SFPLR predictions that used the nearest-curve fallback
};

/// Throws std::invalid_argument when the split is inconsistent with the data.
void validate_split(const RegionData& region, const SplitSpec& split, int tau);

/// Fits `method` on the training window and forecasts the horizon. Fit failures throw.
/// `selected_order` skips the ARIMA order search when given.
[[nodiscard]] MethodForecast forecast_method(const RegionData& region, Method method, const SplitSpec& split,
                                             const ComparisonConfig& config,
                                             const ArimaSpec* selected_order = nullptr);

struct MethodResult {
    std::string region;
    Method method = Method::arima;
    bool ok = false;
    std::string error;
    std::string detail;
    double nse = std::nan("");
    double rmse = std::nan("");
    VectorXd predictions;
    VectorXd raw_predictions;
    VectorXd observed;
    bool best_nse = false;
    bool best_rmse = false;
};

struct EvaluationReport {
    YearMonth test_start{};
    int horizon = 0;
    std::vector<MethodResult> rows;  // (region, method) order of the inputs

    [[nodiscard]] const MethodResult* find(const std::string& region, Method method) const;
    [[nodiscard]] bool all_failed() const;
};

/// Scores a finished set of rows and flags the best NSE and RMSE per region (ties all flagged).
void flag_best(EvaluationReport& report);

/// Fits every configured method on every region, forecasts the test window and scores it.
/// A failing method is recorded in its row and does not abort the run.
[[nodiscard]] EvaluationReport run_comparison(const Dataset& dataset, const SplitSpec& split,
                                              const ComparisonConfig& config);

/// `region,method,nse,rmse,best_nse,best_rmse`; failed cells hold NA.
[[nodiscard]] std::string report_csv(const EvaluationReport& report);

/// Per-region blocks of Method / NSE / RMSE with two decimals; best values are starred.
[[nodiscard]] std::string report_table(const EvaluationReport& report);

struct ReportCsvRow {
    std::string region;
    std::string method;
    std::optional<double> nse;
    std::optional<double> rmse;
    bool best_nse = false;
    bool best_rmse = false;
    friend bool operator==(const ReportCsvRow&, const ReportCsvRow&) = default;
};

/// Parses the output of report_csv(); throws DataError on malformed text.
[[nodiscard]] std::vector<ReportCsvRow> parse_report_csv(const std::string& text);

/// Shortest decimal form that reads back to the same double.
[[nodiscard]] std::string format_double(double value);

}  // namespace sfcast
