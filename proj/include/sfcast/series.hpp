#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sfcast/calendar.hpp"

namespace sfcast {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using VectorRef = Eigen::Ref<const VectorXd>;
using MatrixRef = Eigen::Ref<const MatrixXd>;

/// Monthly series with an implicit, gapless calendar index. Missing values are NaN.
class TimeSeries {
public:
    TimeSeries() = default;

    /// Throws std::invalid_argument if `values` is empty or holds an infinity.
    TimeSeries(YearMonth start, VectorXd values);

    [[nodiscard]] static constexpr double missing() { return std::numeric_limits<double>::quiet_NaN(); }

    [[nodiscard]] YearMonth start() const { return start_; }
    [[nodiscard]] YearMonth end() const { return start_.plus(size() - 1); }
    [[nodiscard]] Index size() const { return values_.size(); }
    [[nodiscard]] const VectorXd& values() const { return values_; }
    [[nodiscard]] double operator[](Index k) const { return values_[k]; }

    [[nodiscard]] bool is_missing(Index k) const { return std::isnan(values_[k]); }
    [[nodiscard]] Index missing_count() const;
    [[nodiscard]] bool has_missing() const { return missing_count() > 0; }

    [[nodiscard]] YearMonth month_at(Index k) const { return start_.plus(k); }
    [[nodiscard]] std::optional<Index> index_of(YearMonth ym) const;
    [[nodiscard]] bool covers(YearMonth first, YearMonth last) const { return first >= start_ && last <= end(); }

    /// Sub-series over [first, last], both inclusive; throws if not covered.
    [[nodiscard]] TimeSeries window(YearMonth first, YearMonth last) const;

    /// Same calendar extended (or truncated) to [first, last]; new months are missing.
    [[nodiscard]] TimeSeries reindexed(YearMonth first, YearMonth last) const;

    friend bool operator==(const TimeSeries& a, const TimeSeries& b);

private:
    YearMonth start_{};
    VectorXd values_;
};

enum class MissingPolicy { fail, fill_zero, interpolate_linear };

[[nodiscard]] MissingPolicy parse_missing_policy(const std::string& name);
[[nodiscard]] std::string to_string(MissingPolicy policy);

struct MissingResolution {
    TimeSeries series;
    Index filled = 0;
};

/// Resolves missing values. `fail` throws DataError on any gap; `interpolate_linear` throws
/// DataError for leading or trailing gaps, which have no neighbour on one side.
[[nodiscard]] MissingResolution resolve_missing(const TimeSeries& series, MissingPolicy policy);

/// `n` consecutive curves of `tau` samples; row i is period i.
struct FunctionalSample {
    MatrixXd curves;
    YearMonth origin{};
    Index dropped = 0;  // oldest observations discarded to make the length a multiple of tau

    [[nodiscard]] Index size() const { return curves.rows(); }
    [[nodiscard]] Index tau() const { return curves.cols(); }
    [[nodiscard]] YearMonth period_start(Index i) const { return origin.plus(i * tau()); }
};

/// Cuts a gapless series into floor(N / tau) curves, discarding the oldest N mod tau values.
/// Throws DataError on missing values and std::invalid_argument when N < 2 tau.
[[nodiscard]] FunctionalSample segment(const TimeSeries& series, Index tau);

/// Row-major concatenation of the curves (the retained part of the original series).
[[nodiscard]] VectorXd flatten(const FunctionalSample& sample);

/// (1 - B)^d y. Throws std::invalid_argument when d >= length.
[[nodiscard]] VectorXd difference(const VectorRef& y, int d);

/// First value of each partially differenced series: heads[k] = ((1 - B)^k y)[0], k < d.
[[nodiscard]] VectorXd difference_heads(const VectorRef& y, int d);

/// Inverse of difference(): rebuilds y from (1 - B)^d y and its heads.
[[nodiscard]] VectorXd integrate(const VectorRef& diffed, int d, const VectorRef& heads);

/// Box-Cox power transform of (y + shift).
struct BoxCoxTransform {
    double lambda = 1.0;
    double shift = 0.0;

    [[nodiscard]] double forward(double y) const;
    [[nodiscard]] double inverse(double z) const;
    [[nodiscard]] VectorXd forward(const VectorRef& y) const;
    [[nodiscard]] VectorXd inverse(const VectorRef& z) const;
};

/// Box-Cox with zero shift; throws std::invalid_argument on nonpositive input.
[[nodiscard]] VectorXd box_cox(const VectorRef& y, double lambda);

/// 0 if all values are positive, otherwise 1 - min(y).
[[nodiscard]] double box_cox_shift(const VectorRef& y);

/// Profiles lambda over [-2, 2] in steps of 0.05 and keeps the Gaussian profile
/// log-likelihood maximiser. The shift is chosen with box_cox_shift().
[[nodiscard]] BoxCoxTransform box_cox_mle(const VectorRef& y);

/// Gaussian profile log-likelihood of the shifted data under a given lambda.
[[nodiscard]] double box_cox_profile_loglik(const VectorRef& y, double lambda, double shift = 0.0);

/// Sample autocorrelations at lags 0..max_lag, biased (1/N) autocovariance.
[[nodiscard]] VectorXd acf(const VectorRef& y, Index max_lag);

/// Partial autocorrelations at lags 0..max_lag (entry 0 is 1) by Durbin-Levinson.
[[nodiscard]] VectorXd pacf(const VectorRef& y, Index max_lag);

/// Durbin-Levinson on an autocorrelation sequence r[0..K]; returns partials at lags 0..K.
[[nodiscard]] VectorXd durbin_levinson(const VectorRef& autocorrelation);

struct StationarityReport {
    double statistic = 0.0;  // t-statistic on the lagged level
    int lags = 0;
    bool reject_unit_root = false;
    double alpha = 0.05;
    double critical_value = 0.0;
    Index nobs = 0;
};

/// floor(12 (N / 100)^(1/4)).
[[nodiscard]] int adf_default_lags(Index n);

/// Constant-only Dickey-Fuller critical value for alpha in {0.01, 0.05, 0.10},
/// linearly interpolated in 1/T between tabulated sample sizes.
[[nodiscard]] double adf_critical_value(double alpha, Index nobs);

/// Augmented Dickey-Fuller test with a constant and no trend. A series whose first
/// difference is constant is reported with statistic 0 (unit root not rejected).
/// Throws std::invalid_argument if length < 20 + lags, FitError on a singular regression.
[[nodiscard]] StationarityReport adf_test(const VectorRef& y, int lags, double alpha = 0.05);

/// adf_test with adf_default_lags(), capped so the length requirement holds.
[[nodiscard]] StationarityReport adf_test_auto(const VectorRef& y, double alpha = 0.05);

}  // namespace sfcast
