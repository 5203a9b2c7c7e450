#include "sfcast/sfplr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sfcast/errors.hpp"

namespace sfcast {

namespace {

constexpr double kConditionLimit = 1e10;

std::vector<Index> all_but(Index n, Index skip) {
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(n - 1));
    for (Index i = 0; i < n; ++i) {
        if (i != skip) idx.push_back(i);
    }
    return idx;
}

double quantile_sorted(const std::vector<double>& sorted, double prob) {
    const double pos = prob * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

KernelKind parse_kernel(const std::string& name) {
    if (name == "quadratic") return KernelKind::quadratic;
    if (name == "triangle") return KernelKind::triangle;
    if (name == "uniform") return KernelKind::uniform;
    if (name == "gaussian") return KernelKind::gaussian;
    throw std::invalid_argument("unknown kernel '" + name + "'");
}

std::string to_string(KernelKind kernel) {
    switch (kernel) {
        case KernelKind::quadratic: return "quadratic";
        case KernelKind::triangle: return "triangle";
        case KernelKind::uniform: return "uniform";
        case KernelKind::gaussian: return "gaussian";
    }
    return "quadratic";
}

SemiMetricKind parse_semi_metric(const std::string& name) {
    if (name == "euclid_grid") return SemiMetricKind::euclid_grid;
    if (name == "deriv_grid") return SemiMetricKind::deriv_grid;
    if (name == "pca" || name == "pca_q") return SemiMetricKind::pca;
    throw std::invalid_argument("unknown semi-metric '" + name + "'");
}

std::string to_string(SemiMetricKind kind) {
    switch (kind) {
        case SemiMetricKind::euclid_grid: return "euclid_grid";
        case SemiMetricKind::deriv_grid: return "deriv_grid";
        case SemiMetricKind::pca: return "pca_q";
    }
    return "euclid_grid";
}

// ---------------------------------------------------------------------------

SemiMetric::SemiMetric(SemiMetricSpec spec) : spec_(spec) {
    if (spec_.kind == SemiMetricKind::pca && spec_.q < 1) throw std::invalid_argument("pca semi-metric needs q >= 1");
    if (spec_.kind == SemiMetricKind::deriv_grid && spec_.deriv_order < 1) {
        throw std::invalid_argument("derivative semi-metric needs order >= 1");
    }
}

void SemiMetric::fit(const MatrixRef& curves) {
    if (spec_.kind != SemiMetricKind::pca) return;
    const Index tau = curves.cols();
    if (spec_.q > tau) throw std::invalid_argument("pca semi-metric needs q <= curve length");
    if (curves.rows() < 2) throw std::invalid_argument("pca semi-metric needs at least two curves");
    const MatrixXd centered = curves.rowwise() - curves.colwise().mean();
    const MatrixXd cov = centered.transpose() * centered / static_cast<double>(curves.rows());
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    basis_ = eig.eigenvectors().rightCols(spec_.q).rowwise().reverse();
}

MatrixXd SemiMetric::embed(const MatrixRef& curves) const {
    switch (spec_.kind) {
        case SemiMetricKind::euclid_grid: return curves;
        case SemiMetricKind::deriv_grid: {
            if (spec_.deriv_order >= curves.cols()) throw std::invalid_argument("derivative order exceeds curve length");
            MatrixXd out = curves;
            for (int k = 0; k < spec_.deriv_order; ++k) {
                const Index m = out.cols() - 1;
                MatrixXd next = out.rightCols(m) - out.leftCols(m);
                out = std::move(next);
            }
            return out;
        }
        case SemiMetricKind::pca: {
            if (!ready()) throw std::invalid_argument("pca semi-metric used before fit()");
            if (curves.cols() != basis_.rows()) throw std::invalid_argument("curve length does not match pca basis");
            return curves * basis_;
        }
    }
    return curves;
}

double SemiMetric::operator()(const Eigen::Ref<const Eigen::RowVectorXd>& a,
                              const Eigen::Ref<const Eigen::RowVectorXd>& b) const {
    if (a.size() != b.size()) throw std::invalid_argument("curves have different lengths");
    // Embedding the difference is exact for all three (linear) kinds.
    const MatrixXd diff = a - b;
    return embed(diff).norm();
}

MatrixXd SemiMetric::pairwise(const MatrixRef& queries, const MatrixRef& curves) const {
    if (queries.cols() != curves.cols()) throw std::invalid_argument("curves have different lengths");
    const MatrixXd eq = embed(queries);
    const MatrixXd ec = embed(curves);
    MatrixXd out(eq.rows(), ec.rows());
    for (Index i = 0; i < eq.rows(); ++i) {
        for (Index j = 0; j < ec.rows(); ++j) out(i, j) = (eq.row(i) - ec.row(j)).norm();
    }
    return out;
}

double semi_metric(const Eigen::Ref<const Eigen::RowVectorXd>& a, const Eigen::Ref<const Eigen::RowVectorXd>& b,
                   const SemiMetric& metric) {
    return metric(a, b);
}

// ---------------------------------------------------------------------------

VectorXd nw_weights_from_distances(const VectorRef& distances, double h, KernelKind kernel) {
    if (!(h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
    VectorXd k(distances.size());
    for (Index i = 0; i < k.size(); ++i) k[i] = kernel_value(kernel, distances[i] / h);
    const double total = k.sum();
    if (!(total > 0.0)) throw DegenerateWeights("no curve within bandwidth " + std::to_string(h));
    return k / total;
}

VectorXd nw_weights(const Eigen::Ref<const Eigen::RowVectorXd>& target, const MatrixRef& curves, double h,
                    KernelKind kernel, const SemiMetric& metric) {
    const MatrixXd d = metric.pairwise(target, curves);
    return nw_weights_from_distances(d.row(0).transpose(), h, kernel);
}

WeightsWithFallback nw_weights_or_nearest(const VectorRef& distances, double h, KernelKind kernel) {
    try {
        return {nw_weights_from_distances(distances, h, kernel), false};
    } catch (const DegenerateWeights&) {
        WeightsWithFallback out{VectorXd::Zero(distances.size()), true};
        Index nearest = 0;
        distances.minCoeff(&nearest);
        out.weights[nearest] = 1.0;
        return out;
    }
}

MatrixXd smoother_matrix(const MatrixRef& distances, double h, KernelKind kernel) {
    MatrixXd W(distances.rows(), distances.cols());
    for (Index i = 0; i < W.rows(); ++i) {
        W.row(i) = nw_weights_from_distances(distances.row(i).transpose(), h, kernel).transpose();
    }
    return W;
}

// ---------------------------------------------------------------------------

double TargetSpec::apply(const Eigen::Ref<const Eigen::RowVectorXd>& curve) const {
    switch (kind) {
        case TargetKind::month_value:
            if (month_index < 0 || month_index >= curve.size()) throw std::invalid_argument("target month out of range");
            return curve[month_index];
        case TargetKind::period_sum: return curve.sum();
        case TargetKind::period_max: return curve.maxCoeff();
    }
    return 0.0;
}

CovariateMode parse_covariate_mode(const std::string& name) {
    if (name == "contemporaneous") return CovariateMode::contemporaneous;
    if (name == "same_month_prior_year") return CovariateMode::same_month_prior_year;
    throw std::invalid_argument("unknown covariate mode '" + name + "'");
}

std::string to_string(CovariateMode mode) {
    return mode == CovariateMode::contemporaneous ? "contemporaneous" : "same_month_prior_year";
}

SfplrData build_dataset(const FunctionalSample& sample, const std::vector<TimeSeries>& covariates,
                        const TargetSpec& target, CovariateMode mode) {
    const Index n = sample.size();
    const Index tau = sample.tau();
    if (n < 3) throw std::invalid_argument("SFPLR needs at least three curves");
    if (target.month_index < 0 || target.month_index >= tau) throw std::invalid_argument("target month out of range");

    const auto p = static_cast<Index>(covariates.size());
    auto covariate_month = [&](Index response_period) {
        const Index period = mode == CovariateMode::contemporaneous ? response_period : response_period - 1;
        return sample.period_start(period).plus(target.month_index);
    };
    auto lookup = [&](Index j, YearMonth ym) -> std::optional<double> {
        const auto k = covariates[static_cast<std::size_t>(j)].index_of(ym);
        if (!k || covariates[static_cast<std::size_t>(j)].is_missing(*k)) return std::nullopt;
        return covariates[static_cast<std::size_t>(j)][*k];
    };

    SfplrData out;
    out.curves = sample.curves.topRows(n - 1);
    out.X.resize(n - 1, p);
    out.Z.resize(n - 1);
    for (Index i = 0; i + 1 < n; ++i) {
        out.Z[i] = target.apply(sample.curves.row(i + 1));
        const YearMonth ym = covariate_month(i + 1);
        for (Index j = 0; j < p; ++j) {
            const auto v = lookup(j, ym);
            if (!v) throw DataError("covariate " + std::to_string(j) + " has no value for " + ym.to_string());
            out.X(i, j) = *v;
        }
    }
    out.last_curve = sample.curves.row(n - 1);
    out.next_target_month = sample.period_start(n).plus(target.month_index);

    VectorXd x_next(p);
    bool complete = true;
    const YearMonth ym = covariate_month(n);
    for (Index j = 0; j < p && complete; ++j) {
        const auto v = lookup(j, ym);
        if (v) {
            x_next[j] = *v;
        } else {
            complete = false;
        }
    }
    if (complete) out.x_next = x_next;
    return out;
}

// ---------------------------------------------------------------------------

VectorXd fit_beta_with_smoother(const MatrixRef& X, const VectorRef& Z, const MatrixRef& W) {
    const Index n = X.rows();
    const Index p = X.cols();
    if (Z.size() != n || W.rows() != n || W.cols() != n) throw std::invalid_argument("inconsistent SFPLR inputs");
    if (p == 0) return VectorXd(0);
    if (n <= p) throw FitError("SFPLR needs more observations than covariates");
    const MatrixXd Xt = X - W * X;
    const VectorXd Zt = Z - W * Z;
    Eigen::JacobiSVD<MatrixXd> svd(Xt);
    const auto& sv = svd.singularValues();
    const double smin = sv[sv.size() - 1];
    if (!(smin > 0.0) || sv[0] / smin > kConditionLimit) throw FitError("ill-conditioned partial-residual design");
    return Xt.colPivHouseholderQr().solve(Zt);
}

VectorXd fit_beta(const MatrixRef& X, const VectorRef& Z, const MatrixRef& curves, double h, KernelKind kernel,
                  const SemiMetric& metric) {
    const MatrixXd D = metric.pairwise(curves, curves);
    return fit_beta_with_smoother(X, Z, smoother_matrix(D, h, kernel));
}

std::vector<double> default_bandwidth_grid(const MatrixRef& curves, const SemiMetric& metric, int count) {
    const MatrixXd D = metric.pairwise(curves, curves);
    std::vector<double> d;
    double min_positive = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < D.rows(); ++i) {
        for (Index j = i + 1; j < D.cols(); ++j) {
            d.push_back(D(i, j));
            if (D(i, j) > 0.0) min_positive = std::min(min_positive, D(i, j));
        }
    }
    if (d.empty() || !std::isfinite(min_positive)) throw FitError("all training curves coincide under the semi-metric");
    std::sort(d.begin(), d.end());
    const double lo = std::max(quantile_sorted(d, 0.05), min_positive);
    double hi = quantile_sorted(d, 0.95);
    if (hi <= lo) hi = lo * 2.0;
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int k = 0; k < count; ++k) {
        const double frac = count > 1 ? static_cast<double>(k) / (count - 1) : 0.0;
        grid[static_cast<std::size_t>(k)] = std::exp(std::log(lo) + frac * (std::log(hi) - std::log(lo)));
    }
    return grid;
}

CvResult cv_bandwidth(const MatrixRef& X, const VectorRef& Z, const MatrixRef& curves, KernelKind kernel,
                      const SemiMetric& metric, std::vector<double> h_grid) {
    if (h_grid.empty()) throw std::invalid_argument("bandwidth grid is empty");
    for (double h : h_grid) {
        if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("bandwidths must be positive and finite");
    }
    std::sort(h_grid.begin(), h_grid.end());
    h_grid.erase(std::unique(h_grid.begin(), h_grid.end()), h_grid.end());

    const Index n = curves.rows();
    if (n < 3) throw std::invalid_argument("cross-validation needs at least three curves");
    const MatrixXd D = metric.pairwise(curves, curves);

    CvResult out;
    out.grid = h_grid;
    out.scores.assign(h_grid.size(), std::numeric_limits<double>::quiet_NaN());
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t g = 0; g < h_grid.size(); ++g) {
        const double h = h_grid[g];
        double sse = 0.0;
        bool usable = true;
        for (Index i = 0; i < n && usable; ++i) {
            const auto keep = all_but(n, i);
            const MatrixXd D_sub = D(keep, keep);
            const MatrixXd X_sub = X(keep, Eigen::all);
            const VectorXd Z_sub = Z(keep);
            try {
                const VectorXd beta = fit_beta_with_smoother(X_sub, Z_sub, smoother_matrix(D_sub, h, kernel));
                const VectorXd d_i = D(i, keep).transpose();
                const VectorXd w = nw_weights_from_distances(d_i, h, kernel);
                const VectorXd partial = X.cols() > 0 ? VectorXd(Z_sub - X_sub * beta) : Z_sub;
                const double xb = X.cols() > 0 ? X.row(i).dot(beta) : 0.0;
                const double err = Z[i] - (xb + w.dot(partial));
                sse += err * err;
            } catch (const FitError&) {
                usable = false;
            }
        }
        if (!usable) continue;
        out.scores[g] = sse / static_cast<double>(n);
        if (out.scores[g] < best) {
            best = out.scores[g];
            out.h = h;
        }
    }
    if (!std::isfinite(best)) throw FitError("every bandwidth in the grid is degenerate under leave-one-out");
    return out;
}

SfplrModel fit_sfplr(const MatrixRef& X, const VectorRef& Z, const MatrixRef& curves, const SfplrOptions& options,
                     TargetSpec target) {
    if (X.rows() != curves.rows() || Z.size() != curves.rows()) throw std::invalid_argument("inconsistent SFPLR inputs");
    SfplrModel model;
    model.kernel = options.kernel;
    model.metric = SemiMetric(options.metric);
    model.metric.fit(curves);
    model.train_curves = curves;
    model.train_X = X;
    model.train_Z = Z;
    model.target = target;
    model.nonnegative = options.nonnegative;
    if (options.h) {
        if (!(*options.h > 0.0)) throw std::invalid_argument("bandwidth must be positive");
        model.h = *options.h;
    } else {
        auto grid = options.h_grid.empty() ? default_bandwidth_grid(curves, model.metric) : options.h_grid;
        model.cv = cv_bandwidth(X, Z, curves, options.kernel, model.metric, std::move(grid));
        model.h = model.cv.h;
    }
    model.beta = fit_beta(X, Z, curves, model.h, model.kernel, model.metric);
    return model;
}

MEstimate estimate_m(const SfplrModel& model, const Eigen::Ref<const Eigen::RowVectorXd>& curve) {
    const MatrixXd d = model.metric.pairwise(curve, model.train_curves);
    const auto w = nw_weights_or_nearest(d.row(0).transpose(), model.h, model.kernel);
    const VectorXd partial =
        model.beta.size() > 0 ? VectorXd(model.train_Z - model.train_X * model.beta) : model.train_Z;
    return {w.weights.dot(partial), w.fallback};
}

SfplrPrediction predict(const SfplrModel& model, const VectorRef& x_new,
                        const Eigen::Ref<const Eigen::RowVectorXd>& last_curve) {
    if (x_new.size() != model.beta.size()) throw std::invalid_argument("covariate vector has the wrong length");
    if (last_curve.size() != model.train_curves.cols()) throw std::invalid_argument("query curve has the wrong length");
    const MEstimate m = estimate_m(model, last_curve);
    SfplrPrediction out;
    out.raw = (model.beta.size() > 0 ? x_new.dot(model.beta) : 0.0) + m.value;
    out.value = model.nonnegative ? std::max(out.raw, 0.0) : out.raw;
    out.fallback = m.fallback;
    return out;
}

}  // namespace sfcast
