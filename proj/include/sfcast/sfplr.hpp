#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "sfcast/series.hpp"

namespace sfcast {

// ---------------------------------------------------------------------------
// Kernels on nonnegative scaled distances

enum class KernelKind { quadratic, triangle, uniform, gaussian };

[[nodiscard]] KernelKind parse_kernel(const std::string& name);
[[nodiscard]] std::string to_string(KernelKind kernel);

/// Asymmetric kernels supported on [0, 1] (gaussian: half-normal on [0, inf)).
/// quadratic: 3/2 (1 - u^2); triangle: 2 (1 - u); uniform: 1.
template <typename Scalar>
[[nodiscard]] constexpr Scalar kernel_value(KernelKind kernel, Scalar u) {
    if (u < Scalar(0)) return Scalar(0);
    switch (kernel) {
        case KernelKind::quadratic: return u < Scalar(1) ? Scalar(1.5) * (Scalar(1) - u * u) : Scalar(0);
        case KernelKind::triangle: return u < Scalar(1) ? Scalar(2) * (Scalar(1) - u) : Scalar(0);
        case KernelKind::uniform: return u < Scalar(1) ? Scalar(1) : Scalar(0);
        case KernelKind::gaussian: return Scalar(0.7978845608028654) * std::exp(-u * u / Scalar(2));
    }
    return Scalar(0);
}

// ---------------------------------------------------------------------------
// Semi-metrics between curves

enum class SemiMetricKind { euclid_grid, deriv_grid, pca };

struct SemiMetricSpec {
    SemiMetricKind kind = SemiMetricKind::euclid_grid;
    int q = 3;             // components for pca
    int deriv_order = 1;   // for deriv_grid
};

[[nodiscard]] SemiMetricKind parse_semi_metric(const std::string& name);
[[nodiscard]] std::string to_string(SemiMetricKind kind);

/// Distance between curves sampled on a common grid. The pca kind needs fit() on the
/// training curves first.
class SemiMetric {
public:
    SemiMetric() = default;
    explicit SemiMetric(SemiMetricSpec spec);

    /// Learns the top-q principal directions of `curves` (rows); a no-op for other kinds.
    void fit(const MatrixRef& curves);

    [[nodiscard]] const SemiMetricSpec& spec() const { return spec_; }
    [[nodiscard]] bool ready() const { return spec_.kind != SemiMetricKind::pca || basis_.size() > 0; }
    [[nodiscard]] const MatrixXd& basis() const { return basis_; }

    /// Throws std::invalid_argument on length mismatch or an unfitted pca basis.
    [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                    const Eigen::Ref<const Eigen::RowVectorXd>& b) const;

    /// Distances from each row of `queries` to each row of `curves`.
    [[nodiscard]] MatrixXd pairwise(const MatrixRef& queries, const MatrixRef& curves) const;

private:
    /// Curves mapped to the space where the metric is plain Euclidean distance.
    [[nodiscard]] MatrixXd embed(const MatrixRef& curves) const;

    SemiMetricSpec spec_{};
    MatrixXd basis_;  // tau x q
};

[[nodiscard]] double semi_metric(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                                 const Eigen::Ref<const Eigen::RowVectorXd>& b, const SemiMetric& metric);

// ---------------------------------------------------------------------------
// Nadaraya-Watson weights

/// w_i = K(d_i / h) / sum_j K(d_j / h). Throws DegenerateWeights when every K vanishes.
[[nodiscard]] VectorXd nw_weights_from_distances(const VectorRef& distances, double h, KernelKind kernel);

[[nodiscard]] VectorXd nw_weights(const Eigen::Ref<const Eigen::RowVectorXd>& target, const MatrixRef& curves,
                                  double h, KernelKind kernel, const SemiMetric& metric);

struct WeightsWithFallback {
    VectorXd weights;
    bool fallback = false;  // all kernel mass vanished; weight 1 went to the nearest curve
};

[[nodiscard]] WeightsWithFallback nw_weights_or_nearest(const VectorRef& distances, double h, KernelKind kernel);

/// W_h with rows w_{n,h}(Y_i, .) over all training curves, self included.
[[nodiscard]] MatrixXd smoother_matrix(const MatrixRef& distances, double h, KernelKind kernel);

// ---------------------------------------------------------------------------
// Dataset construction

enum class TargetKind { month_value, period_sum, period_max };

struct TargetSpec {
    TargetKind kind = TargetKind::month_value;
    int month_index = 0;  // position in the period; also selects the covariate month

    /// G applied to one curve.
    [[nodiscard]] double apply(const Eigen::Ref<const Eigen::RowVectorXd>& curve) const;
};

enum class CovariateMode {
    contemporaneous,        // covariates at the target month of the response period
    same_month_prior_year,  // covariates at the target month of the predictor period
};

[[nodiscard]] CovariateMode parse_covariate_mode(const std::string& name);
[[nodiscard]] std::string to_string(CovariateMode mode);

/// Training triples (Y_i, X_i, Z_i = G(Y_{i+1})), i = 0..n-2, plus the inputs needed to
/// predict the period after the last curve.
struct SfplrData {
    MatrixXd curves;  // (n-1) x tau predictor curves
    MatrixXd X;       // (n-1) x p
    VectorXd Z;       // n-1 responses
    Eigen::RowVectorXd last_curve;      // Y_n, the predictor for period n+1
    std::optional<VectorXd> x_next;     // covariates for period n+1 when available
    YearMonth next_target_month{};      // calendar month predicted from last_curve
};

/// Throws DataError when a covariate does not cover a required month or has a gap there,
/// std::invalid_argument when n < 3 or the target month is outside the period.
[[nodiscard]] SfplrData build_dataset(const FunctionalSample& sample, const std::vector<TimeSeries>& covariates,
                                      const TargetSpec& target, CovariateMode mode);

// ---------------------------------------------------------------------------
// Estimators

/// beta = (Xt' Xt)^-1 Xt' Zt with Xt = (I - W) X, Zt = (I - W) Z, solved by column-pivoted QR.
/// Throws FitError when n <= p or the condition number of Xt exceeds 1e10.
[[nodiscard]] VectorXd fit_beta_with_smoother(const MatrixRef& X, const VectorRef& Z, const MatrixRef& W);

[[nodiscard]] VectorXd fit_beta(const MatrixRef& X, const VectorRef& Z, const MatrixRef& curves, double h,
                                KernelKind kernel, const SemiMetric& metric);

/// 20 log-spaced bandwidths between the 5th and 95th percentiles of pairwise curve distances.
[[nodiscard]] std::vector<double> default_bandwidth_grid(const MatrixRef& curves, const SemiMetric& metric,
                                                         int count = 20);

struct CvResult {
    double h = 0.0;
    std::vector<double> grid;    // sorted, deduplicated
    std::vector<double> scores;  // leave-one-out mean squared error, NaN where excluded
};

/// Leave-one-out bandwidth choice. A bandwidth is excluded when any left-out point has no
/// kernel mass or its refit is singular; ties go to the smallest h. Throws FitError if
/// every bandwidth is excluded.
[[nodiscard]] CvResult cv_bandwidth(const MatrixRef& X, const VectorRef& Z, const MatrixRef& curves, KernelKind kernel,
                                    const SemiMetric& metric, std::vector<double> h_grid);

struct SfplrOptions {
    KernelKind kernel = KernelKind::quadratic;
    SemiMetricSpec metric{};
    std::vector<double> h_grid;  // empty: default_bandwidth_grid()
    std::optional<double> h;     // fixed bandwidth, skipping cross-validation
    bool nonnegative = true;     // clamp predictions at zero (incidence targets)
};

struct SfplrModel {
    VectorXd beta;
    double h = 0.0;
    KernelKind kernel = KernelKind::quadratic;
    SemiMetric metric;
    MatrixXd train_curves;
    MatrixXd train_X;
    VectorXd train_Z;
    TargetSpec target;
    bool nonnegative = true;
    CvResult cv;
};

[[nodiscard]] SfplrModel fit_sfplr(const MatrixRef& X, const VectorRef& Z, const MatrixRef& curves,
                                   const SfplrOptions& options = {}, TargetSpec target = {});

struct MEstimate {
    double value = 0.0;
    bool fallback = false;
};

/// m(curve) = sum_i w_{n,h}(curve, Y_i) (Z_i - X_i' beta). A query with no kernel mass
/// falls back to its nearest training curve and is flagged.
[[nodiscard]] MEstimate estimate_m(const SfplrModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& curve);

struct SfplrPrediction {
    double value = 0.0;  // clamped at 0 when the model is nonnegative
    double raw = 0.0;
    bool fallback = false;
};

[[nodiscard]] SfplrPrediction predict(const SfplrModel& model, const VectorRef& x_new,
                                      const Eigen::Ref<const Eigen::RowVectorXd>& last_curve);

}  // namespace sfcast
