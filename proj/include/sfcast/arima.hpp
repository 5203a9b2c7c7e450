#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sfcast/optim.hpp"
#include "sfcast/series.hpp"

namespace sfcast {

/// ARIMA orders, always written in (p, d, q) order: p autoregressive terms,
/// d nonseasonal differences, q moving-average terms.
struct ArimaSpec {
    int p = 0;
    int d = 0;
    int q = 0;
    bool use_boxcox = false;

    [[nodiscard]] std::string to_string() const;
    friend bool operator==(const ArimaSpec&, const ArimaSpec&) = default;
};

inline constexpr int kMaxDifferenceOrder = 2;

struct ArmaFitOptions {
    /// Estimate a mean for the differenced series. fit_arima() turns this off when d > 0,
    /// so a differenced model carries no drift.
    bool include_mean = true;
    NelderMeadOptions optimizer{};
};

/// Conditional-sum-of-squares ARMA(p, q) fit, optionally with regression terms.
/// Sign conventions: phi(B) = 1 - phi_1 B - ... - phi_p B^p and
/// theta(B) = 1 + theta_1 B + ... + theta_q B^q.
struct ArmaFit {
    VectorXd phi;
    VectorXd theta;
    VectorXd beta;           // regression weights, empty for plain ARMA
    double intercept = 0.0;  // mean of the (regression-adjusted) series
    double css = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    Index nobs = 0;
    VectorXd residuals;  // one-step residuals, length nobs
    int iterations = 0;
    bool restarted = false;
};

/// Minimises the conditional sum of squares of one-step residuals (presample residuals 0,
/// presample observations at the sample mean) over coefficients parametrised through partial
/// autocorrelations, so the fit is stationary and invertible by construction.
/// Throws FitError on insufficient data (length < 10 (p + q + 1)) or non-convergence.
[[nodiscard]] ArmaFit fit_arma(const VectorRef& w, int p, int q, const ArmaFitOptions& options = {});

/// Maps partial autocorrelations in (-1, 1) to the coefficients of a stationary
/// phi(B) = 1 - sum phi_i B^i.
[[nodiscard]] VectorXd partials_to_ar(const VectorRef& partials);

/// Smallest root modulus of 1 - sum phi_i z^i (infinity when phi is empty).
[[nodiscard]] double min_root_modulus_ar(const VectorRef& phi);

/// Smallest root modulus of 1 + sum theta_j z^j (infinity when theta is empty).
[[nodiscard]] double min_root_modulus_ma(const VectorRef& theta);

/// Smallest relative distance |r_ar - r_ma| / min(|r_ar|, |r_ma|) between a root of phi(z)
/// and a root of theta(z); infinity when either polynomial has no roots. Near zero the two
/// factors cancel and the model reduces to a lower order.
[[nodiscard]] double common_factor_distance(const VectorRef& phi, const VectorRef& theta);

struct ArimaModel {
    ArimaSpec spec;
    VectorXd phi;
    VectorXd theta;
    double intercept = 0.0;
    double sigma2 = 0.0;
    double loglik = 0.0;
    double aicc = 0.0;
    std::optional<BoxCoxTransform> boxcox;
    VectorXd heads;      // difference_heads() of the transformed series
    VectorXd history;    // training series on the transformed scale, before differencing
    VectorXd residuals;  // one-step residuals on the differenced scale
    Index offset = 0;    // leading differenced observations excluded from estimation
};

/// Optional Box-Cox, d differences (heads retained), then fit_arma on the result.
[[nodiscard]] ArimaModel fit_arima(const VectorRef& y, const ArimaSpec& spec, const ArmaFitOptions& options = {});
[[nodiscard]] ArimaModel fit_arima(const TimeSeries& series, const ArimaSpec& spec,
                                   const ArmaFitOptions& options = {});

/// Point forecasts on the original scale: ARMA recursion with future shocks at zero,
/// integrated d times and back-transformed.
[[nodiscard]] VectorXd forecast(const ArimaModel& model, int horizon);

struct CovariateLag {
    Index covariate = 0;
    int lag = 0;
    friend bool operator==(const CovariateLag&, const CovariateLag&) = default;
};

/// Regression on (lagged) covariates with ARIMA errors.
struct ArimaxModel {
    ArimaModel base;
    VectorXd beta_x;
    std::vector<CovariateLag> covariate_lags;
    MatrixXd covariates;  // training covariates, original scale, one column per covariate
};

/// Joint CSS fit of regression weights and ARMA terms. The response (after optional
/// Box-Cox) and every covariate column are differenced d times. An empty `lags` means
/// lag 0 for every column. Throws FitError on collinear covariates (condition number
/// above 1e10) or non-convergence, std::invalid_argument on misaligned or missing input.
[[nodiscard]] ArimaxModel fit_arimax(const VectorRef& y, const MatrixRef& covariates, const ArimaSpec& spec,
                                     std::vector<CovariateLag> lags = {}, const ArmaFitOptions& options = {});

/// Forecasts with supplied covariate values for every month of the horizon
/// (`future_covariates` has `horizon` rows).
[[nodiscard]] VectorXd forecast_arimax(const ArimaxModel& model, const MatrixRef& future_covariates, int horizon);

struct OrderSearchOptions {
    int p_max = 5;
    int q_max = 5;
    int d_max = 2;
    double alpha = 0.05;
    bool use_boxcox = false;
    double common_factor_tolerance = 0.1;  // candidates with nearly cancelling AR/MA roots are skipped
    ArmaFitOptions fit{};
};

struct OrderSelection {
    ArimaSpec spec;
    bool stationary = true;  // false when no d <= d_max passed the ADF test
    std::vector<StationarityReport> adf;
    double aicc = 0.0;
    int failed_fits = 0;
    int redundant_fits = 0;  // skipped for a near-common AR/MA factor
};

/// Smallest d whose differenced series rejects a unit root, then the (p, q) grid point
/// with the lowest AICc; ties go to smaller p + q, then smaller p. Candidates whose AR and
/// MA polynomials share a near-common root are skipped as over-parametrised.
/// Throws std::invalid_argument below 30 observations and FitError if every fit fails.
[[nodiscard]] OrderSelection select_order(const VectorRef& y, const OrderSearchOptions& options = {});

}  // namespace sfcast
