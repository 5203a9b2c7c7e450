#include "sfcast/arima.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "sfcast/errors.hpp"

namespace sfcast {

namespace {

// Partial autocorrelations are kept strictly inside (-1, 1) so root moduli stay above 1.
constexpr double kPartialBound = 1.0 - 1e-6;
constexpr double kConditionLimit = 1e10;

double sample_sd(const VectorRef& v) {
    if (v.size() < 2) return 0.0;
    return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

VectorXd to_partials(const VectorRef& unconstrained) {
    VectorXd r(unconstrained.size());
    for (Index i = 0; i < r.size(); ++i) r[i] = std::clamp(std::tanh(unconstrained[i]), -kPartialBound, kPartialBound);
    return r;
}

/// Regression-with-ARMA-errors objective over the parameter layout
/// [mean?][beta (k)][AR partials, unconstrained (p)][MA partials, unconstrained (q)].
class CssObjective {
public:
    CssObjective(const VectorXd& w, const MatrixXd& xreg, Index offset, int p, int q, bool include_mean)
        : w_(w), xreg_(xreg), offset_(offset), p_(p), q_(q), mean_(include_mean),
          u_(w.size() - offset), e_(w.size() - offset) {}

    [[nodiscard]] Index dimension() const { return (mean_ ? 1 : 0) + xreg_.cols() + p_ + q_; }
    [[nodiscard]] Index nobs() const { return u_.size(); }

    struct Params {
        double mean = 0.0;
        VectorXd beta;
        VectorXd phi;
        VectorXd theta;
    };

    [[nodiscard]] Params unpack(const VectorXd& x) const {
        Params out;
        Index at = 0;
        if (mean_) out.mean = x[at++];
        out.beta = x.segment(at, xreg_.cols());
        at += xreg_.cols();
        out.phi = partials_to_ar(to_partials(x.segment(at, p_)));
        at += p_;
        out.theta = -partials_to_ar(to_partials(x.segment(at, q_)));
        return out;
    }

    double operator()(const VectorXd& x) { return evaluate(unpack(x)); }

    /// CSS for the given coefficients; residuals are left in residuals().
    double evaluate(const Params& params) {
        const Index m = u_.size();
        if (xreg_.cols() > 0) {
            u_ = w_.tail(m) - xreg_.bottomRows(m) * params.beta;
            u_.array() -= params.mean;
        } else {
            u_ = w_.tail(m).array() - params.mean;
        }
        const double presample = u_.mean();
        const double* phi = params.phi.data();
        const double* theta = params.theta.data();
        double ss = 0.0;
        for (Index t = 0; t < m; ++t) {
            double e = u_[t];
            for (int i = 1; i <= p_; ++i) e -= phi[i - 1] * (t >= i ? u_[t - i] : presample);
            for (int j = 1; j <= q_ && j <= t; ++j) e -= theta[j - 1] * e_[t - j];
            e_[t] = e;
            ss += e * e;
        }
        return ss;
    }

    [[nodiscard]] const VectorXd& residuals() const { return e_; }

private:
    const VectorXd& w_;
    const MatrixXd& xreg_;
    Index offset_;
    int p_;
    int q_;
    bool mean_;
    VectorXd u_;
    VectorXd e_;
};

/// Shared estimator for fit_arma and fit_arimax. `xreg` rows align with `w`; rows before
/// `offset` are ignored.
ArmaFit fit_regression_arma(const VectorXd& w, const MatrixXd& xreg, Index offset, int p, int q,
                            const ArmaFitOptions& options) {
    if (p < 0 || q < 0) throw std::invalid_argument("ARMA orders must be nonnegative");
    const Index m = w.size() - offset;
    const Index k = xreg.cols();
    if (m < 10 * (p + q + 1)) {
        throw FitError("ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") needs at least " +
                       std::to_string(10 * (p + q + 1)) + " observations, got " + std::to_string(m));
    }
    if (!w.allFinite()) throw std::invalid_argument("ARMA input must be finite");

    // Starting values: OLS for mean and regression weights, Yule-Walker partials for AR.
    const Index n_lin = (options.include_mean ? 1 : 0) + k;
    VectorXd lin0 = VectorXd::Zero(n_lin);
    VectorXd u0 = w.tail(m);
    if (n_lin > 0) {
        MatrixXd design(m, n_lin);
        if (options.include_mean) design.col(0).setOnes();
        if (k > 0) design.rightCols(k) = xreg.bottomRows(m);
        lin0 = design.colPivHouseholderQr().solve(u0);
        u0 -= design * lin0;
    }
    VectorXd ar0 = VectorXd::Zero(p);
    if (p > 0 && u0.maxCoeff() > u0.minCoeff()) {
        const VectorXd partial = pacf(u0, p);
        for (int i = 0; i < p; ++i) ar0[i] = std::atanh(std::clamp(partial[i + 1], -0.95, 0.95));
    }

    CssObjective objective(w, xreg, offset, p, q, options.include_mean);
    const Index dim = objective.dimension();
    VectorXd x0(dim);
    VectorXd step(dim);
    const double scale = std::max(sample_sd(w.tail(m)), 1e-8);
    Index at = 0;
    if (options.include_mean) {
        x0[at] = lin0[0];
        step[at] = 0.1 * scale;
        ++at;
    }
    for (Index j = 0; j < k; ++j, ++at) {
        const double b = lin0[(options.include_mean ? 1 : 0) + j];
        const double col_sd = std::max(sample_sd(xreg.col(j).tail(m)), 1e-12);
        x0[at] = b;
        step[at] = 0.1 * std::abs(b) + 0.05 * scale / col_sd;
    }
    for (int i = 0; i < p; ++i, ++at) {
        x0[at] = ar0[i];
        step[at] = 0.2;
    }
    for (int j = 0; j < q; ++j, ++at) {
        x0[at] = 0.0;
        step[at] = 0.2;
    }

    ArmaFit fit;
    NelderMeadResult result = nelder_mead(objective, x0, step, options.optimizer);
    fit.iterations = result.iterations;
    if (!result.converged) {
        fit.restarted = true;
        result = nelder_mead(objective, result.x, step, options.optimizer);
        fit.iterations += result.iterations;
        if (!result.converged) {
            throw FitError("ARMA(" + std::to_string(p) + "," + std::to_string(q) + ") CSS did not converge in " +
                           std::to_string(fit.iterations) + " iterations");
        }
    }

    const auto params = objective.unpack(result.x);
    fit.css = objective.evaluate(params);
    fit.residuals = objective.residuals();
    fit.phi = params.phi;
    fit.theta = params.theta;
    fit.beta = params.beta;
    fit.intercept = params.mean;
    fit.nobs = m;
    const double n = static_cast<double>(m);
    fit.sigma2 = std::max(fit.css / n, std::numeric_limits<double>::min());
    fit.loglik = -0.5 * n * (std::log(2.0 * std::numbers::pi * fit.sigma2) + 1.0);
    const double n_par = static_cast<double>(p + q + 1 + k);
    fit.aicc = n - n_par - 1.0 > 0.0 ? -2.0 * fit.loglik + 2.0 * n_par * n / (n - n_par - 1.0)
                                     : std::numeric_limits<double>::infinity();
    return fit;
}

/// Inverse roots of 1 - sum coef_i z^i (eigenvalues of the companion matrix).
Eigen::VectorXcd inverse_roots(const VectorRef& coef) {
    const Index p = coef.size();
    if (p == 0) return {};
    MatrixXd companion = MatrixXd::Zero(p, p);
    companion.row(0) = coef.transpose();
    if (p > 1) companion.bottomLeftCorner(p - 1, p - 1).setIdentity();
    return Eigen::EigenSolver<MatrixXd>(companion, false).eigenvalues();
}

double max_companion_modulus(const VectorRef& coef) {
    if (coef.size() == 0) return 0.0;
    return inverse_roots(coef).cwiseAbs().maxCoeff();
}

/// Future values of u (the regression-adjusted, differenced series) with zero future shocks.
VectorXd extend_arma(const VectorXd& u, const VectorXd& residuals, const VectorXd& phi, const VectorXd& theta,
                     int horizon) {
    const Index m = u.size();
    const double presample = m > 0 ? u.mean() : 0.0;
    VectorXd future(horizon);
    auto u_at = [&](Index idx) { return idx < 0 ? presample : (idx < m ? u[idx] : future[idx - m]); };
    auto e_at = [&](Index idx) { return (idx < 0 || idx >= m) ? 0.0 : residuals[idx]; };
    for (int s = 0; s < horizon; ++s) {
        const Index t = m + s;
        double v = 0.0;
        for (Index i = 1; i <= phi.size(); ++i) v += phi[i - 1] * u_at(t - i);
        for (Index j = 1; j <= theta.size(); ++j) v += theta[j - 1] * e_at(t - j);
        future[s] = v;
    }
    return future;
}

/// Undoes d differences of `future_diffed`, continuing from the end of `history`.
VectorXd integrate_forward(const VectorXd& history, int d, const VectorXd& future_diffed) {
    std::vector<double> tails(static_cast<std::size_t>(d));
    VectorXd level = history;
    for (int k = 0; k < d; ++k) {
        tails[static_cast<std::size_t>(k)] = level[level.size() - 1];
        level = difference(level, 1);
    }
    VectorXd f = future_diffed;
    for (int k = d - 1; k >= 0; --k) {
        double prev = tails[static_cast<std::size_t>(k)];
        for (Index s = 0; s < f.size(); ++s) {
            prev += f[s];
            f[s] = prev;
        }
    }
    return f;
}

void validate_spec(const ArimaSpec& spec) {
    if (spec.p < 0 || spec.q < 0 || spec.d < 0) throw std::invalid_argument("ARIMA orders must be nonnegative");
    if (spec.d > kMaxDifferenceOrder) throw std::invalid_argument("difference order above 2 is not supported");
}

struct Prepared {
    std::optional<BoxCoxTransform> boxcox;
    VectorXd transformed;
    VectorXd w;
};

Prepared prepare_response(const VectorRef& y, const ArimaSpec& spec) {
    if (!y.allFinite()) throw std::invalid_argument("ARIMA input must be finite and free of missing values");
    Prepared out;
    out.transformed = y;
    if (spec.use_boxcox) {
        out.boxcox = box_cox_mle(y);
        out.transformed = out.boxcox->forward(y);
    }
    out.w = difference(out.transformed, spec.d);
    return out;
}

ArimaModel assemble(const ArimaSpec& spec, const Prepared& prep, const ArmaFit& fit, Index offset) {
    ArimaModel model;
    model.spec = spec;
    model.phi = fit.phi;
    model.theta = fit.theta;
    model.intercept = fit.intercept;
    model.sigma2 = fit.sigma2;
    model.loglik = fit.loglik;
    model.aicc = fit.aicc;
    model.boxcox = prep.boxcox;
    model.heads = difference_heads(prep.transformed, spec.d);
    model.history = prep.transformed;
    model.residuals = fit.residuals;
    model.offset = offset;
    return model;
}

VectorXd finish_forecast(const ArimaModel& model, const VectorXd& w_future) {
    VectorXd z = integrate_forward(model.history, model.spec.d, w_future);
    return model.boxcox ? model.boxcox->inverse(z) : z;
}

/// Lagged, differenced regressor columns aligned with the differenced response.
MatrixXd regressors(const MatrixXd& diffed_cov, const std::vector<CovariateLag>& lags, Index rows) {
    MatrixXd out = MatrixXd::Zero(rows, static_cast<Index>(lags.size()));
    for (std::size_t c = 0; c < lags.size(); ++c) {
        const auto& cl = lags[c];
        for (Index t = cl.lag; t < rows; ++t) out(t, static_cast<Index>(c)) = diffed_cov(t - cl.lag, cl.covariate);
    }
    return out;
}

MatrixXd difference_columns(const MatrixXd& x, int d) {
    MatrixXd out(x.rows() - d, x.cols());
    for (Index c = 0; c < x.cols(); ++c) out.col(c) = difference(x.col(c), d);
    return out;
}

}  // namespace

std::string ArimaSpec::to_string() const {
    return "ARIMA(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) + ")" +
           (use_boxcox ? "+BoxCox" : "");
}

VectorXd partials_to_ar(const VectorRef& partials) {
    const Index p = partials.size();
    VectorXd phi(p);
    VectorXd prev(p);
    for (Index k = 0; k < p; ++k) {
        prev.head(k) = phi.head(k);
        phi[k] = partials[k];
        for (Index i = 0; i < k; ++i) phi[i] = prev[i] - partials[k] * prev[k - 1 - i];
    }
    return phi;
}

double min_root_modulus_ar(const VectorRef& phi) {
    const double m = max_companion_modulus(phi);
    return m == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / m;
}

double min_root_modulus_ma(const VectorRef& theta) {
    const double m = max_companion_modulus(-theta);
    return m == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / m;
}

double common_factor_distance(const VectorRef& phi, const VectorRef& theta) {
    const Eigen::VectorXcd ar = inverse_roots(phi);
    const Eigen::VectorXcd ma = inverse_roots(-theta);
    double best = std::numeric_limits<double>::infinity();
    for (Index i = 0; i < ar.size(); ++i) {
        for (Index j = 0; j < ma.size(); ++j) {
            const double scale = std::min(std::abs(ar[i]), std::abs(ma[j]));
            if (scale == 0.0) continue;  // zero inverse root: no root at all
            best = std::min(best, std::abs(ar[i] - ma[j]) / scale);
        }
    }
    return best;
}

ArmaFit fit_arma(const VectorRef& w, int p, int q, const ArmaFitOptions& options) {
    const VectorXd series = w;
    return fit_regression_arma(series, MatrixXd(series.size(), 0), 0, p, q, options);
}

ArimaModel fit_arima(const VectorRef& y, const ArimaSpec& spec, const ArmaFitOptions& options) {
    validate_spec(spec);
    const Prepared prep = prepare_response(y, spec);
    ArmaFitOptions opts = options;
    opts.include_mean = options.include_mean && spec.d == 0;
    const ArmaFit fit = fit_regression_arma(prep.w, MatrixXd(prep.w.size(), 0), 0, spec.p, spec.q, opts);
    return assemble(spec, prep, fit, 0);
}

ArimaModel fit_arima(const TimeSeries& series, const ArimaSpec& spec, const ArmaFitOptions& options) {
    if (series.has_missing()) throw DataError("ARIMA fit requires a series without missing values");
    return fit_arima(series.values(), spec, options);
}

VectorXd forecast(const ArimaModel& model, int horizon) {
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be positive");
    const VectorXd w = difference(model.history, model.spec.d);
    const VectorXd u = w.tail(w.size() - model.offset).array() - model.intercept;
    const VectorXd u_future = extend_arma(u, model.residuals, model.phi, model.theta, horizon);
    return finish_forecast(model, u_future.array() + model.intercept);
}

ArimaxModel fit_arimax(const VectorRef& y, const MatrixRef& covariates, const ArimaSpec& spec,
                       std::vector<CovariateLag> lags, const ArmaFitOptions& options) {
    validate_spec(spec);
    if (covariates.rows() != y.size()) {
        throw std::invalid_argument("covariates have " + std::to_string(covariates.rows()) + " rows for a series of " +
                                    std::to_string(y.size()));
    }
    if (!covariates.allFinite()) throw std::invalid_argument("covariates must be fully observed over the training window");
    if (lags.empty()) {
        for (Index c = 0; c < covariates.cols(); ++c) lags.push_back({c, 0});
    }
    int max_lag = 0;
    for (const auto& cl : lags) {
        if (cl.covariate < 0 || cl.covariate >= covariates.cols() || cl.lag < 0) {
            throw std::invalid_argument("invalid covariate lag specification");
        }
        max_lag = std::max(max_lag, cl.lag);
    }

    const Prepared prep = prepare_response(y, spec);
    const MatrixXd x = covariates;
    const MatrixXd xd = difference_columns(x, spec.d);
    const Index rows = prep.w.size();
    if (max_lag >= rows) throw std::invalid_argument("covariate lag exceeds the series length");
    const MatrixXd xreg = regressors(xd, lags, rows);

    ArmaFitOptions opts = options;
    opts.include_mean = options.include_mean && spec.d == 0;
    if (!lags.empty()) {
        const Index m = rows - max_lag;
        MatrixXd design(m, (opts.include_mean ? 1 : 0) + xreg.cols());
        if (opts.include_mean) design.col(0).setOnes();
        design.rightCols(xreg.cols()) = xreg.bottomRows(m);
        Eigen::JacobiSVD<MatrixXd> svd(design);
        const auto& sv = svd.singularValues();
        const double smin = sv[sv.size() - 1];
        if (!(smin > 0.0) || sv[0] / smin > kConditionLimit) {
            throw FitError("collinear or degenerate covariates (condition number " +
                           std::to_string(smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity()) + ")");
        }
    }

    const ArmaFit fit = fit_regression_arma(prep.w, xreg, max_lag, spec.p, spec.q, opts);
    ArimaxModel model;
    model.base = assemble(spec, prep, fit, max_lag);
    model.beta_x = fit.beta;
    model.covariate_lags = std::move(lags);
    model.covariates = x;
    return model;
}

VectorXd forecast_arimax(const ArimaxModel& model, const MatrixRef& future_covariates, int horizon) {
    if (horizon < 1) throw std::invalid_argument("forecast horizon must be positive");
    const ArimaModel& base = model.base;
    if (future_covariates.rows() < horizon || future_covariates.cols() != model.covariates.cols()) {
        throw std::invalid_argument("future covariates must supply every covariate for each month of the horizon");
    }
    if (!future_covariates.topRows(horizon).allFinite()) {
        throw std::invalid_argument("missing future covariate values");
    }
    const int d = base.spec.d;
    const Index n_train = model.covariates.rows();
    MatrixXd all(n_train + horizon, model.covariates.cols());
    all.topRows(n_train) = model.covariates;
    all.bottomRows(horizon) = future_covariates.topRows(horizon);
    const MatrixXd xd = difference_columns(all, d);
    const MatrixXd xreg = regressors(xd, model.covariate_lags, xd.rows());
    const VectorXd reg = model.beta_x.size() > 0 ? VectorXd(xreg * model.beta_x) : VectorXd::Zero(xd.rows());

    const VectorXd w = difference(base.history, d);
    const Index rows = w.size();
    const Index m = rows - base.offset;
    const VectorXd u = (w.tail(m) - reg.segment(base.offset, m)).array() - base.intercept;
    const VectorXd u_future = extend_arma(u, base.residuals, base.phi, base.theta, horizon);
    const VectorXd w_future = (u_future + reg.segment(rows, horizon)).array() + base.intercept;
    return finish_forecast(base, w_future);
}

OrderSelection select_order(const VectorRef& y, const OrderSearchOptions& options) {
    if (y.size() < 30) throw std::invalid_argument("order selection needs at least 30 observations");
    if (options.d_max < 0 || options.d_max > kMaxDifferenceOrder || options.p_max < 0 || options.q_max < 0) {
        throw std::invalid_argument("invalid order-search bounds");
    }
    OrderSelection out;
    VectorXd z = y;
    if (options.use_boxcox) z = box_cox_mle(y).forward(y);

    int chosen_d = -1;
    for (int d = 0; d <= options.d_max; ++d) {
        const VectorXd w = difference(z, d);
        if (w.size() < 20) break;
        try {
            const auto report = adf_test_auto(w, options.alpha);
            out.adf.push_back(report);
            if (report.reject_unit_root) {
                chosen_d = d;
                break;
            }
        } catch (const FitError&) {
            // A singular ADF regression counts as "not shown stationary".
        }
    }
    out.stationary = chosen_d >= 0;
    const int d = out.stationary ? chosen_d : options.d_max;

    ArimaSpec spec{0, d, 0, options.use_boxcox};
    bool found = false;
    double best = std::numeric_limits<double>::infinity();
    // Visit candidates by (p + q, p) so that strict improvement implements the tie-break.
    for (int total = 0; total <= options.p_max + options.q_max; ++total) {
        for (int p = std::max(0, total - options.q_max); p <= std::min(total, options.p_max); ++p) {
            const int q = total - p;
            try {
                const ArimaModel model = fit_arima(y, ArimaSpec{p, d, q, options.use_boxcox}, options.fit);
                if (common_factor_distance(model.phi, model.theta) < options.common_factor_tolerance) {
                    ++out.redundant_fits;
                    continue;
                }
                if (model.aicc < best) {
                    best = model.aicc;
                    spec = model.spec;
                    found = true;
                }
            } catch (const FitError&) {
                ++out.failed_fits;
            }
        }
    }
    if (!found) throw FitError("every candidate ARMA fit failed");
    out.spec = spec;
    out.aicc = best;
    return out;
}

}  // namespace sfcast
