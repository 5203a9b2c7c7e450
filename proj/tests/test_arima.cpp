#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sfcast/arima.hpp"
#include "sfcast/errors.hpp"
#include "sim.hpp"

using namespace sfcast;
using sfcast::testing::cumulate;
using sfcast::testing::random_walk;
using sfcast::testing::simulate_arma;
using sfcast::testing::white_noise;

namespace {

VectorXd vec(std::initializer_list<double> xs) {
    VectorXd v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

/// Conditional sum of squares written out directly: u_t = w_t - mu, presample u at mean(u),
/// presample residuals zero.
double css_oracle(const VectorXd& w, double mu, const VectorXd& phi, const VectorXd& theta) {
    const VectorXd u = w.array() - mu;
    const double pre = u.mean();
    VectorXd e = VectorXd::Zero(u.size());
    double ss = 0.0;
    for (Index t = 0; t < u.size(); ++t) {
        double v = u[t];
        for (Index i = 0; i < phi.size(); ++i) v -= phi[i] * (t - 1 - i >= 0 ? u[t - 1 - i] : pre);
        for (Index j = 0; j < theta.size(); ++j) v -= theta[j] * (t - 1 - j >= 0 ? e[t - 1 - j] : 0.0);
        e[t] = v;
        ss += v * v;
    }
    return ss;
}

}  // namespace

TEST_SUITE("coefficient maps") {
    TEST_CASE("partials to AR coefficients") {
        CHECK(partials_to_ar(vec({0.3}))[0] == doctest::Approx(0.3));
        // Durbin-Levinson step: phi_2 = r2, phi_1 = r1 (1 - r2).
        const VectorXd phi = partials_to_ar(vec({0.5, -0.4}));
        CHECK(phi[1] == doctest::Approx(-0.4));
        CHECK(phi[0] == doctest::Approx(0.5 * 1.4));
    }

    TEST_CASE("partials inside (-1, 1) give stationary polynomials") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> u(-0.99, 0.99);
        for (int rep = 0; rep < 200; ++rep) {
            VectorXd r(1 + rep % 6);
            for (Index i = 0; i < r.size(); ++i) r[i] = u(rng);
            CHECK(min_root_modulus_ar(partials_to_ar(r)) > 1.0);
        }
    }

    TEST_CASE("root moduli against factored polynomials") {
        CHECK(min_root_modulus_ar(vec({0.5})) == doctest::Approx(2.0));
        // (1 - z/2)(1 - z/3) = 1 - 5/6 z + 1/6 z^2
        CHECK(min_root_modulus_ar(vec({5.0 / 6.0, -1.0 / 6.0})) == doctest::Approx(2.0));
        // 1 + 0.25 z: root at -4
        CHECK(min_root_modulus_ma(vec({0.25})) == doctest::Approx(4.0));
        CHECK(std::isinf(min_root_modulus_ar(VectorXd())));
    }

    TEST_CASE("common factor distance") {
        // 1 - 0.5 z and 1 + (-0.5) z share the root 2.
        CHECK(common_factor_distance(vec({0.5}), vec({-0.5})) == doctest::Approx(0.0));
        // roots 2 and -2
        CHECK(common_factor_distance(vec({0.5}), vec({0.5})) == doctest::Approx(2.0));
        CHECK(std::isinf(common_factor_distance(vec({0.5}), VectorXd())));
    }
}

TEST_SUITE("fit_arma") {
    TEST_CASE("AR(1) recovery") {
        const ArmaFit f = fit_arma(simulate_arma(vec({0.6}), VectorXd(), 2000, 1), 1, 0);
        CHECK(f.phi[0] >= 0.55);
        CHECK(f.phi[0] <= 0.65);
    }

    TEST_CASE("MA(1) recovery") {
        const ArmaFit f = fit_arma(simulate_arma(VectorXd(), vec({0.5}), 2000, 2), 0, 1);
        CHECK(f.theta[0] >= 0.44);
        CHECK(f.theta[0] <= 0.56);
    }

    TEST_CASE("white noise reduces to mean and variance") {
        const VectorXd y = white_noise(1000, 3).array() * 2.0 + 5.0;
        const ArmaFit f = fit_arma(y, 0, 0);
        const double var = (y.array() - y.mean()).square().mean();
        CHECK(f.intercept == doctest::Approx(y.mean()).epsilon(1e-4));
        CHECK(f.sigma2 == doctest::Approx(var).epsilon(0.02));
    }

    TEST_CASE("reported CSS, likelihood and AICc agree with their definitions") {
        const VectorXd y = simulate_arma(vec({0.4}), vec({0.3}), 400, 4, 1.0, 3.0);
        const ArmaFit f = fit_arma(y, 1, 1);
        CHECK(f.css == doctest::Approx(css_oracle(y, f.intercept, f.phi, f.theta)).epsilon(1e-10));
        const double n = 400.0;
        const double ll = -0.5 * n * (std::log(2.0 * std::numbers::pi * f.css / n) + 1.0);
        CHECK(f.loglik == doctest::Approx(ll).epsilon(1e-12));
        const double k = 3.0;
        CHECK(f.aicc == doctest::Approx(-2.0 * ll + 2.0 * k * n / (n - k - 1.0)).epsilon(1e-12));
    }

    TEST_CASE("fitted polynomials satisfy the root conditions") {
        int checked = 0;
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            const VectorXd y = simulate_arma(vec({0.7, -0.2}), vec({0.6}), 300, 50 + seed);
            for (int p = 0; p <= 3; ++p) {
                for (int q = 0; q <= 2; ++q) {
                    const ArmaFit f = fit_arma(y, p, q);
                    CHECK(min_root_modulus_ar(f.phi) > 1.0 + 1e-8);
                    CHECK(min_root_modulus_ma(f.theta) > 1.0 + 1e-8);
                    ++checked;
                }
            }
        }
        CHECK(checked == 120);
    }

    TEST_CASE("insufficient data") {
        CHECK_THROWS_AS((void)fit_arma(white_noise(25, 1), 2, 1), FitError);
    }
}

TEST_SUITE("fit_arima and forecast") {
    TEST_CASE("random walk model forecasts the last value") {
        const VectorXd y = random_walk(200, 5);
        const ArimaModel m = fit_arima(y, ArimaSpec{0, 1, 0});
        const VectorXd f = forecast(m, 12);
        for (Index k = 0; k < 12; ++k) CHECK(f[k] == doctest::Approx(y[199]).epsilon(1e-14));
    }

    TEST_CASE("white-noise model forecasts the intercept") {
        const ArimaModel m = fit_arima(white_noise(300, 6).array() + 4.0, ArimaSpec{0, 0, 0});
        const VectorXd f = forecast(m, 6);
        CHECK((f.array() - m.intercept).abs().maxCoeff() <= 1e-12);
    }

    TEST_CASE("d = 0 reduces to fit_arma") {
        const VectorXd y = simulate_arma(vec({0.6}), VectorXd(), 500, 7, 1.0, 2.0);
        const ArimaModel m = fit_arima(y, ArimaSpec{1, 0, 0});
        const ArmaFit f = fit_arma(y, 1, 0);
        CHECK(m.phi[0] == doctest::Approx(f.phi[0]).epsilon(1e-12));
        CHECK(m.intercept == doctest::Approx(f.intercept).epsilon(1e-12));
        CHECK(m.sigma2 == doctest::Approx(f.sigma2).epsilon(1e-12));
    }

    TEST_CASE("AR(1) forecasts match the closed form") {
        const VectorXd y = simulate_arma(vec({0.6}), VectorXd(), 500, 8, 1.0, 10.0);
        const ArimaModel m = fit_arima(y, ArimaSpec{1, 0, 0});
        const VectorXd f = forecast(m, 12);
        for (int k = 1; k <= 12; ++k) {
            const double expected = m.intercept + std::pow(m.phi[0], k) * (y[499] - m.intercept);
            CHECK(std::abs(f[k - 1] - expected) <= 1e-10);
        }
    }

    TEST_CASE("integrated ARMA(1,1) recovery") {
        const VectorXd w = simulate_arma(vec({0.5}), vec({0.3}), 2000, 9);
        const ArimaModel m = fit_arima(cumulate(w, 50.0), ArimaSpec{1, 1, 1});
        CHECK(std::abs(m.phi[0] - 0.5) <= 0.1);
        CHECK(std::abs(m.theta[0] - 0.3) <= 0.1);
    }

    TEST_CASE("forecasts are shift-equivariant") {
        const VectorXd y = simulate_arma(vec({0.5}), vec({0.2}), 400, 10);
        const VectorXd f0 = forecast(fit_arima(y, ArimaSpec{1, 0, 1}), 12);
        const VectorXd f1 = forecast(fit_arima(y.array() + 37.5, ArimaSpec{1, 0, 1}), 12);
        CHECK(((f1.array() - 37.5) - f0.array()).abs().maxCoeff() <= 1e-6);
    }

    TEST_CASE("Box-Cox models forecast on the original scale") {
        const VectorXd y = (simulate_arma(vec({0.5}), VectorXd(), 300, 11) * 0.3).array().exp() * 20.0;
        const ArimaModel m = fit_arima(y, ArimaSpec{1, 0, 0, true});
        REQUIRE(m.boxcox.has_value());
        const VectorXd f = forecast(m, 12);
        CHECK(f.allFinite());
        CHECK((f.array() > 0.0).all());
        CHECK(std::abs(f[11] - y.mean()) < y.mean());
    }

    TEST_CASE("spec formatting and bounds") {
        CHECK(ArimaSpec{2, 1, 3}.to_string() == "ARIMA(2,1,3)");
        CHECK_THROWS_AS((void)fit_arima(white_noise(100, 1), ArimaSpec{0, 3, 0}), std::invalid_argument);
        CHECK_THROWS_AS((void)forecast(fit_arima(white_noise(100, 1), ArimaSpec{}), 0), std::invalid_argument);
    }
}

TEST_SUITE("fit_arimax") {
    VectorXd regression_series(const VectorXd& x, std::uint64_t seed) {
        return 2.0 * x + simulate_arma(vec({0.6}), VectorXd(), x.size(), seed);
    }

    TEST_CASE("regression weight recovery") {
        const VectorXd x = simulate_arma(vec({0.5}), VectorXd(), 2000, 100);
        const ArimaxModel m = fit_arimax(regression_series(x, 101), x, ArimaSpec{1, 0, 0});
        CHECK(m.beta_x[0] >= 1.9);
        CHECK(m.beta_x[0] <= 2.1);
        CHECK(m.base.phi[0] == doctest::Approx(0.6).epsilon(0.1));
    }

    TEST_CASE("degenerate covariates are rejected") {
        const VectorXd y = white_noise(200, 1);
        CHECK_THROWS_AS((void)fit_arimax(y, MatrixXd::Zero(200, 1), ArimaSpec{1, 0, 0}), FitError);
        MatrixXd dup(200, 2);
        dup.col(0) = white_noise(200, 2);
        dup.col(1) = dup.col(0);
        CHECK_THROWS_AS((void)fit_arimax(y, dup, ArimaSpec{1, 0, 0}), FitError);
        CHECK_THROWS_AS((void)fit_arimax(y, MatrixXd::Ones(100, 1), ArimaSpec{1, 0, 0}), std::invalid_argument);
    }

    TEST_CASE("no covariates reproduces fit_arima") {
        const VectorXd y = simulate_arma(vec({0.5}), vec({0.3}), 500, 12, 1.0, 1.0);
        const ArimaxModel mx = fit_arimax(y, MatrixXd(500, 0), ArimaSpec{1, 0, 1});
        const ArimaModel m = fit_arima(y, ArimaSpec{1, 0, 1});
        const double css_x = css_oracle(y, mx.base.intercept, mx.base.phi, mx.base.theta);
        const double css = css_oracle(y, m.intercept, m.phi, m.theta);
        CHECK(std::abs(css_x - css) <= 1e-6 * std::max(1.0, css));
    }

    TEST_CASE("zero regression weights reduce to the base forecast") {
        const VectorXd x = white_noise(300, 13);
        ArimaxModel m = fit_arimax(regression_series(x, 14), x, ArimaSpec{1, 0, 0});
        m.beta_x.setZero();
        const MatrixXd future = white_noise(12, 15);
        CHECK((forecast_arimax(m, future, 12) - forecast(m.base, 12)).cwiseAbs().maxCoeff() <= 1e-12);
    }

    TEST_CASE("pure regression forecasts intercept plus weighted covariates") {
        MatrixXd x(400, 2);
        x.col(0) = white_noise(400, 16);
        x.col(1) = white_noise(400, 17);
        const VectorXd y = (1.5 * x.col(0) - 0.7 * x.col(1) + 0.3 * white_noise(400, 18)).array() + 3.0;
        const ArimaxModel m = fit_arimax(y, x, ArimaSpec{0, 0, 0});
        MatrixXd future(12, 2);
        future.col(0) = white_noise(12, 19);
        future.col(1) = white_noise(12, 20);
        const VectorXd expected = (future * m.beta_x).array() + m.base.intercept;
        CHECK((forecast_arimax(m, future, 12) - expected).cwiseAbs().maxCoeff() <= 1e-10);
    }

    TEST_CASE("lagged covariates") {
        const VectorXd x = white_noise(1000, 21);
        VectorXd y = 0.3 * white_noise(1000, 22);
        for (Index t = 2; t < 1000; ++t) y[t] += 1.5 * x[t - 2];
        const ArimaxModel m = fit_arimax(y, x, ArimaSpec{0, 0, 0}, {CovariateLag{0, 2}});
        CHECK(m.beta_x[0] == doctest::Approx(1.5).epsilon(0.02));
        // The lag-2 term of the first two forecasts comes from the training covariates.
        const MatrixXd future = white_noise(3, 23);
        const VectorXd f = forecast_arimax(m, future, 3);
        CHECK(f[0] == doctest::Approx(m.base.intercept + m.beta_x[0] * x[998]).epsilon(1e-10));
        CHECK(f[2] == doctest::Approx(m.base.intercept + m.beta_x[0] * future(0, 0)).epsilon(1e-10));
    }

    TEST_CASE("differenced ARIMAX keeps the level") {
        const VectorXd x = white_noise(600, 24);
        const VectorXd y = cumulate(simulate_arma(vec({0.4}), VectorXd(), 599, 25), 20.0) + 2.0 * x;
        const ArimaxModel m = fit_arimax(y, x, ArimaSpec{1, 1, 0});
        CHECK(m.beta_x[0] == doctest::Approx(2.0).epsilon(0.05));
        const VectorXd f = forecast_arimax(m, MatrixXd::Zero(1, 1), 1);
        CHECK(std::abs(f[0] - (y[599] - 2.0 * x[599])) < 3.0);
    }

    TEST_CASE("known covariates beat the intercept-only model") {
        int wins = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const VectorXd x = simulate_arma(vec({0.5}), VectorXd(), 2012, 2000 + seed);
            const VectorXd y = regression_series(x, 3000 + seed);
            const VectorXd y_train = y.head(2000);
            const MatrixXd x_train = x.head(2000);
            const VectorXd truth = y.tail(12);
            const VectorXd fx = forecast_arimax(fit_arimax(y_train, x_train, ArimaSpec{1, 0, 0}), x.tail(12), 12);
            const VectorXd f0 = forecast(fit_arima(y_train, ArimaSpec{0, 0, 0}), 12);
            wins += (fx - truth).norm() < (f0 - truth).norm() ? 1 : 0;
        }
        CHECK(wins >= 90);
    }
}

TEST_SUITE("select_order") {
    TEST_CASE("needs thirty observations") {
        CHECK_THROWS_AS((void)select_order(white_noise(29, 1)), std::invalid_argument);
    }

    TEST_CASE("white noise: no differencing, at most one ARMA term") {
        int good = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const OrderSelection s = select_order(white_noise(500, 10000 + seed));
            good += s.spec.d == 0 && s.spec.p + s.spec.q <= 1 ? 1 : 0;
        }
        CHECK(good >= 80);
    }

    TEST_CASE("random walk: one difference") {
        int good = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const OrderSelection s = select_order(random_walk(500, 20000 + seed));
            good += s.spec.d == 1 ? 1 : 0;
        }
        CHECK(good >= 80);
    }

    TEST_CASE("AR(2) identification") {
        int good = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const OrderSelection s = select_order(simulate_arma(vec({0.5, -0.3}), VectorXd(), 2000, 30000 + seed));
            good += s.spec == ArimaSpec{2, 0, 0} ? 1 : 0;
        }
        CHECK(good >= 60);
    }

    TEST_CASE("grid minimum with the documented tie-break") {
        // Brute force over the same grid, skipping the same redundant candidates.
        const VectorXd y = simulate_arma(vec({0.5}), vec({0.4}), 300, 40);
        OrderSearchOptions opts;
        opts.p_max = 2;
        opts.q_max = 2;
        const OrderSelection s = select_order(y, opts);
        REQUIRE(s.spec.d == 0);
        double best = INFINITY;
        ArimaSpec arg{};
        for (int p = 0; p <= 2; ++p) {
            for (int q = 0; q <= 2; ++q) {
                const ArimaModel m = fit_arima(y, ArimaSpec{p, 0, q});
                if (common_factor_distance(m.phi, m.theta) < opts.common_factor_tolerance) continue;
                const bool better = m.aicc < best ||
                                    (m.aicc == best && (p + q < arg.p + arg.q || (p + q == arg.p + arg.q && p < arg.p)));
                if (better) {
                    best = m.aicc;
                    arg = ArimaSpec{p, 0, q};
                }
            }
        }
        CHECK(s.spec == arg);
        CHECK(s.aicc == best);
    }
}
