#include "sfcast/series.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "sfcast/errors.hpp"

namespace sfcast {

TimeSeries::TimeSeries(YearMonth start, VectorXd values) : start_(start), values_(std::move(values)) {
    if (values_.size() == 0) throw std::invalid_argument("time series must hold at least one value");
    if (!start_.valid()) throw std::invalid_argument("invalid start month");
    for (Index k = 0; k < values_.size(); ++k) {
        if (std::isinf(values_[k])) {
            throw std::invalid_argument("non-finite value at " + start_.plus(k).to_string());
        }
    }
}

Index TimeSeries::missing_count() const {
    return static_cast<Index>(values_.array().isNaN().count());
}

std::optional<Index> TimeSeries::index_of(YearMonth ym) const {
    const long k = months_between(start_, ym);
    if (k < 0 || k >= size()) return std::nullopt;
    return static_cast<Index>(k);
}

TimeSeries TimeSeries::window(YearMonth first, YearMonth last) const {
    if (last < first || !covers(first, last)) {
        throw std::invalid_argument("window " + first.to_string() + ".." + last.to_string() +
                                    " is not covered by series " + start_.to_string() + ".." +
                                    end().to_string());
    }
    const auto begin = static_cast<Index>(months_between(start_, first));
    const auto count = static_cast<Index>(months_between(first, last) + 1);
    return TimeSeries(first, values_.segment(begin, count));
}

TimeSeries TimeSeries::reindexed(YearMonth first, YearMonth last) const {
    if (last < first) throw std::invalid_argument("empty reindex window");
    const auto count = static_cast<Index>(months_between(first, last) + 1);
    VectorXd out = VectorXd::Constant(count, missing());
    for (Index k = 0; k < count; ++k) {
        if (auto src = index_of(first.plus(k))) out[k] = values_[*src];
    }
    return TimeSeries(first, std::move(out));
}

bool operator==(const TimeSeries& a, const TimeSeries& b) {
    if (a.start_ != b.start_ || a.size() != b.size()) return false;
    for (Index k = 0; k < a.size(); ++k) {
        const bool na = a.is_missing(k);
        if (na != b.is_missing(k)) return false;
        if (!na && a[k] != b[k]) return false;
    }
    return true;
}

MissingPolicy parse_missing_policy(const std::string& name) {
    if (name == "fail") return MissingPolicy::fail;
    if (name == "fill_zero") return MissingPolicy::fill_zero;
    if (name == "interpolate_linear") return MissingPolicy::interpolate_linear;
    throw DataError("unknown missing-value policy '" + name + "'");
}

std::string to_string(MissingPolicy policy) {
    switch (policy) {
        case MissingPolicy::fail: return "fail";
        case MissingPolicy::fill_zero: return "fill_zero";
        case MissingPolicy::interpolate_linear: return "interpolate_linear";
    }
    return "fail";
}

MissingResolution resolve_missing(const TimeSeries& series, MissingPolicy policy) {
    const Index n = series.size();
    const Index gaps = series.missing_count();
    if (gaps == 0) return {series, 0};

    VectorXd v = series.values();
    switch (policy) {
        case MissingPolicy::fail: {
            for (Index k = 0; k < n; ++k) {
                if (series.is_missing(k)) throw DataError("missing value at " + series.month_at(k).to_string());
            }
            break;
        }
        case MissingPolicy::fill_zero:
            v = v.array().isNaN().select(0.0, v);
            break;
        case MissingPolicy::interpolate_linear: {
            Index k = 0;
            while (k < n) {
                if (!std::isnan(v[k])) {
                    ++k;
                    continue;
                }
                Index stop = k;
                while (stop < n && std::isnan(v[stop])) ++stop;
                if (k == 0 || stop == n) {
                    throw DataError("cannot interpolate boundary gap at " + series.month_at(k == 0 ? 0 : k).to_string());
                }
                const double left = v[k - 1];
                const double right = v[stop];
                const double span = static_cast<double>(stop - k + 1);
                for (Index j = k; j < stop; ++j) {
                    v[j] = left + (right - left) * static_cast<double>(j - k + 1) / span;
                }
                k = stop;
            }
            break;
        }
    }
    return {TimeSeries(series.start(), std::move(v)), gaps};
}

FunctionalSample segment(const TimeSeries& series, Index tau) {
    if (tau < 1) throw std::invalid_argument("segment length must be positive");
    if (series.has_missing()) {
        throw DataError("cannot segment a series with " + std::to_string(series.missing_count()) +
                        " missing values");
    }
    const Index n_obs = series.size();
    if (n_obs < 2 * tau) {
        throw std::invalid_argument("series of length " + std::to_string(n_obs) + " is shorter than two curves of " +
                                    std::to_string(tau));
    }
    const Index n = n_obs / tau;
    const Index dropped = n_obs % tau;

    FunctionalSample out;
    out.origin = series.month_at(dropped);
    out.dropped = dropped;
    out.curves.resize(n, tau);
    for (Index i = 0; i < n; ++i) {
        out.curves.row(i) = series.values().segment(dropped + i * tau, tau).transpose();
    }
    return out;
}

VectorXd flatten(const FunctionalSample& sample) {
    VectorXd out(sample.curves.size());
    for (Index i = 0; i < sample.size(); ++i) {
        out.segment(i * sample.tau(), sample.tau()) = sample.curves.row(i).transpose();
    }
    return out;
}

VectorXd difference(const VectorRef& y, int d) {
    if (d < 0) throw std::invalid_argument("difference order must be nonnegative");
    if (d >= y.size()) {
        throw std::invalid_argument("difference order " + std::to_string(d) + " needs more than " +
                                    std::to_string(y.size()) + " observations");
    }
    VectorXd w = y;
    for (int k = 0; k < d; ++k) {
        const Index m = w.size() - 1;
        VectorXd next = w.tail(m) - w.head(m);
        w = std::move(next);
    }
    return w;
}

VectorXd difference_heads(const VectorRef& y, int d) {
    if (d < 0 || d >= y.size()) throw std::invalid_argument("invalid difference order");
    VectorXd heads(d);
    VectorXd w = y;
    for (int k = 0; k < d; ++k) {
        heads[k] = w[0];
        const Index m = w.size() - 1;
        VectorXd next = w.tail(m) - w.head(m);
        w = std::move(next);
    }
    return heads;
}

VectorXd integrate(const VectorRef& diffed, int d, const VectorRef& heads) {
    if (d < 0) throw std::invalid_argument("difference order must be nonnegative");
    if (heads.size() != d) {
        throw std::invalid_argument("integrate expects " + std::to_string(d) + " heads, got " +
                                    std::to_string(heads.size()));
    }
    VectorXd w = diffed;
    for (int k = d - 1; k >= 0; --k) {
        VectorXd up(w.size() + 1);
        up[0] = heads[k];
        for (Index t = 0; t < w.size(); ++t) up[t + 1] = up[t] + w[t];
        w = std::move(up);
    }
    return w;
}

// ---------------------------------------------------------------------------
// Box-Cox

double BoxCoxTransform::forward(double y) const {
    const double x = y + shift;
    if (!(x > 0.0)) throw std::invalid_argument("Box-Cox input must be positive after shift");
    return lambda == 0.0 ? std::log(x) : (std::pow(x, lambda) - 1.0) / lambda;
}

double BoxCoxTransform::inverse(double z) const {
    if (lambda == 0.0) return std::exp(z) - shift;
    // Outside the image of forward(), clamp to the boundary of the domain.
    const double base = std::max(lambda * z + 1.0, 0.0);
    return std::pow(base, 1.0 / lambda) - shift;
}

VectorXd BoxCoxTransform::forward(const VectorRef& y) const {
    VectorXd z(y.size());
    for (Index k = 0; k < y.size(); ++k) z[k] = forward(y[k]);
    return z;
}

VectorXd BoxCoxTransform::inverse(const VectorRef& z) const {
    VectorXd y(z.size());
    for (Index k = 0; k < z.size(); ++k) y[k] = inverse(z[k]);
    return y;
}

VectorXd box_cox(const VectorRef& y, double lambda) { return BoxCoxTransform{lambda, 0.0}.forward(y); }

double box_cox_shift(const VectorRef& y) {
    const double lo = y.minCoeff();
    return lo <= 0.0 ? 1.0 - lo : 0.0;
}

double box_cox_profile_loglik(const VectorRef& y, double lambda, double shift) {
    const BoxCoxTransform t{lambda, shift};
    const VectorXd z = t.forward(y);
    const double n = static_cast<double>(y.size());
    const double var = (z.array() - z.mean()).square().sum() / n;
    const double log_jacobian = (y.array() + shift).log().sum();
    return -0.5 * n * std::log(var) + (lambda - 1.0) * log_jacobian;
}

BoxCoxTransform box_cox_mle(const VectorRef& y) {
    if (y.size() < 2) throw std::invalid_argument("Box-Cox estimation needs at least two values");
    if (y.maxCoeff() == y.minCoeff()) throw std::invalid_argument("Box-Cox estimation needs a non-constant series");
    const double shift = box_cox_shift(y);
    BoxCoxTransform best{1.0, shift};
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int k = -40; k <= 40; ++k) {
        const double lambda = 0.05 * k;
        const double ll = box_cox_profile_loglik(y, lambda, shift);
        if (ll > best_ll) {
            best_ll = ll;
            best.lambda = lambda;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Correlograms

VectorXd acf(const VectorRef& y, Index max_lag) {
    const Index n = y.size();
    if (max_lag < 1 || max_lag >= n) {
        throw std::invalid_argument("acf needs 1 <= max_lag < length");
    }
    if (y.maxCoeff() == y.minCoeff()) throw std::invalid_argument("acf of a constant series is undefined");
    const VectorXd c = y.array() - y.mean();
    const double c0 = c.squaredNorm();
    VectorXd r(max_lag + 1);
    r[0] = 1.0;
    for (Index k = 1; k <= max_lag; ++k) {
        r[k] = c.tail(n - k).dot(c.head(n - k)) / c0;
    }
    return r;
}

VectorXd durbin_levinson(const VectorRef& r) {
    const Index max_lag = r.size() - 1;
    VectorXd partial(max_lag + 1);
    partial[0] = 1.0;
    if (max_lag == 0) return partial;

    VectorXd phi = VectorXd::Zero(max_lag + 1);  // phi[j], j = 1..k, of the current order
    VectorXd prev = phi;
    phi[1] = r[1];
    partial[1] = r[1];
    double v = 1.0 - r[1] * r[1];
    for (Index k = 2; k <= max_lag; ++k) {
        prev = phi;
        double num = r[k];
        for (Index j = 1; j < k; ++j) num -= prev[j] * r[k - j];
        const double kk = v > 0.0 ? num / v : 0.0;
        phi[k] = kk;
        for (Index j = 1; j < k; ++j) phi[j] = prev[j] - kk * prev[k - j];
        v *= 1.0 - kk * kk;
        partial[k] = kk;
    }
    return partial;
}

VectorXd pacf(const VectorRef& y, Index max_lag) { return durbin_levinson(acf(y, max_lag)); }

// ---------------------------------------------------------------------------
// Augmented Dickey-Fuller

int adf_default_lags(Index n) {
    return static_cast<int>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

double adf_critical_value(double alpha, Index nobs) {
    // Dickey-Fuller tau_mu quantiles (constant, no trend) by sample size.
    static constexpr std::array<double, 6> sizes{25, 50, 100, 250, 500, 0};  // 0 = infinity
    static constexpr std::array<std::array<double, 6>, 3> table{{
        {-3.75, -3.58, -3.51, -3.46, -3.44, -3.43},  // 1%
        {-3.00, -2.93, -2.89, -2.88, -2.87, -2.86},  // 5%
        {-2.63, -2.60, -2.58, -2.57, -2.57, -2.57},  // 10%
    }};
    int row = -1;
    if (std::abs(alpha - 0.01) < 1e-12) row = 0;
    if (std::abs(alpha - 0.05) < 1e-12) row = 1;
    if (std::abs(alpha - 0.10) < 1e-12) row = 2;
    if (row < 0) throw std::invalid_argument("ADF critical values are tabulated for alpha in {0.01, 0.05, 0.10}");
    if (nobs < 1) throw std::invalid_argument("ADF critical value needs a positive sample size");

    const auto& q = table[static_cast<std::size_t>(row)];
    const double x = 1.0 / static_cast<double>(nobs);
    if (x >= 1.0 / sizes[0]) return q[0];  // no extrapolation below T = 25
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const double x0 = 1.0 / sizes[i];
        const double x1 = sizes[i + 1] == 0 ? 0.0 : 1.0 / sizes[i + 1];
        if (x <= x0 && x >= x1) {
            const double w = (x0 - x1) > 0 ? (x - x1) / (x0 - x1) : 0.0;
            return q[i + 1] + w * (q[i] - q[i + 1]);
        }
    }
    return q.back();
}

StationarityReport adf_test(const VectorRef& y, int lags, double alpha) {
    if (lags < 0) throw std::invalid_argument("ADF lag order must be nonnegative");
    const Index n = y.size();
    if (n < 20 + lags) {
        throw std::invalid_argument("ADF test with " + std::to_string(lags) + " lags needs at least " +
                                    std::to_string(20 + lags) + " observations, got " + std::to_string(n));
    }
    StationarityReport report;
    report.lags = lags;
    report.alpha = alpha;

    const VectorXd dy = difference(y, 1);
    const Index nobs = dy.size() - lags;
    report.nobs = nobs;
    report.critical_value = adf_critical_value(alpha, nobs);

    // A deterministic linear path: the differenced series is constant.
    if (dy.maxCoeff() - dy.minCoeff() <= 1e-12 * std::max(1.0, dy.cwiseAbs().maxCoeff())) {
        report.statistic = 0.0;
        report.reject_unit_root = false;
        return report;
    }

    const Index k = 2 + lags;
    MatrixXd design(nobs, k);
    VectorXd response(nobs);
    for (Index r = 0; r < nobs; ++r) {
        const Index t = r + lags;  // index into dy; dy[t] = y[t+1] - y[t]
        response[r] = dy[t];
        design(r, 0) = 1.0;
        design(r, 1) = y[t];
        for (int j = 1; j <= lags; ++j) design(r, 1 + j) = dy[t - j];
    }
    if (nobs <= k) throw FitError("ADF regression has no residual degrees of freedom");

    Eigen::ColPivHouseholderQR<MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < k) throw FitError("singular ADF regression");
    const VectorXd coef = qr.solve(response);
    const VectorXd resid = response - design * coef;
    const double s2 = resid.squaredNorm() / static_cast<double>(nobs - k);
    const MatrixXd xtx_inv = (design.transpose() * design).ldlt().solve(MatrixXd::Identity(k, k));
    const double se = std::sqrt(s2 * xtx_inv(1, 1));
    report.statistic = se > 0.0 ? coef[1] / se : 0.0;
    report.reject_unit_root = report.statistic < report.critical_value;
    return report;
}

StationarityReport adf_test_auto(const VectorRef& y, double alpha) {
    const Index n = y.size();
    int lags = adf_default_lags(n);
    lags = static_cast<int>(std::min<Index>(lags, std::max<Index>(n - 20, 0)));
    return adf_test(y, lags, alpha);
}

}  // namespace sfcast
