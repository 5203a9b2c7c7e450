// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <sys/wait.h>
#include <unistd.h>

#include "sfcast/arima.hpp"
#include "sfcast/errors.hpp"
#include "sfcast/evalbench.hpp"
#include "sfcast/ingest.hpp"
#include "sfcast/sfplr.hpp"
#include "sfcast/synthetic.hpp"
#include "sim.hpp"

using namespace sfcast;
using namespace sfcast::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    std::string note;
};

struct Criterion {
    int id;
    const char* title;
    double time_limit_s;
    std::function<Outcome()> run;
};

VectorXd one(double v) { return VectorXd::Constant(1, v); }

// 1. nse(y, y) = 1, rmse(y, y) = 0, nse(mean) = 0.
Outcome metric_identities() {
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const VectorXd y = white_noise(2 + static_cast<Index>(s % 30), s) * (1.0 + static_cast<double>(s % 7));
        if (nse(y, y) != 1.0 || rmse(y, y) != 0.0) return {false, "identity failed at draw " + std::to_string(s)};
        worst = std::max(worst, std::abs(nse(VectorXd::Constant(y.size(), y.mean()), y)));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |nse(mean)| = %.1e", worst);
    return {worst <= 1e-12, buf};
}

// 2. Kernel weights are a probability vector.
Outcome weight_law() {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> log_scale(-2.0, 2.0);
    std::uniform_int_distribution<int> kernel_pick(0, 3);
    std::uniform_int_distribution<int> size_pick(2, 40);
    const SemiMetric euclid{SemiMetricSpec{}};
    double worst = 0.0;
    int fallbacks = 0;
    for (int draw = 0; draw < 10000; ++draw) {
        const Index n = size_pick(rng);
        const double scale = std::pow(10.0, log_scale(rng));
        MatrixXd curves(n, 12);
        std::normal_distribution<double> normal(0.0, scale);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < 12; ++j) curves(i, j) = normal(rng);
        }
        Eigen::RowVectorXd target(12);
        for (Index j = 0; j < 12; ++j) target[j] = normal(rng);
        // Typical distances are about 5 scale; the low end of the range falls below the nearest curve.
        const double h = scale * std::pow(10.0, 0.8 + 0.2 * log_scale(rng));
        const auto kernel = static_cast<KernelKind>(kernel_pick(rng));
        const MatrixXd d = euclid.pairwise(target, curves);
        const auto w = nw_weights_or_nearest(d.row(0).transpose(), h, kernel);
        fallbacks += w.fallback ? 1 : 0;
        if ((w.weights.array() < 0.0).any()) return {false, "negative weight at draw " + std::to_string(draw)};
        worst = std::max(worst, std::abs(w.weights.sum() - 1.0));
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |sum - 1| = %.1e, %d nearest-curve fallbacks", worst, fallbacks);
    return {worst <= 1e-12, buf};
}

// 3. Uniform smoother: beta equals centred least squares.
Outcome beta_reduction() {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const Index p = 1 + inst % 3;
        const Index n = p + 2 + (inst / 3) % (9 - p);  // p + 2 .. 10
        MatrixXd X(n, p);
        VectorXd Z(n);
        MatrixXd curves(n, 12);
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < p; ++j) X(i, j) = normal(rng);
            for (Index j = 0; j < 12; ++j) curves(i, j) = normal(rng);
            Z[i] = normal(rng);
        }
        // Brute force: centre, then solve the normal equations by Gaussian elimination.
        const MatrixXd Xc = X.rowwise() - X.colwise().mean();
        const VectorXd Zc = Z.array() - Z.mean();
        MatrixXd A(p, p + 1);
        A.leftCols(p) = Xc.transpose() * Xc;
        A.col(p) = Xc.transpose() * Zc;
        for (Index c = 0; c < p; ++c) {
            Index piv = c;
            for (Index r = c + 1; r < p; ++r) {
                if (std::abs(A(r, c)) > std::abs(A(piv, c))) piv = r;
            }
            A.row(c).swap(A.row(piv));
            for (Index r = 0; r < p; ++r) {
                if (r != c) A.row(r) -= A(r, c) / A(c, c) * A.row(c);
            }
        }
        VectorXd oracle(p);
        for (Index c = 0; c < p; ++c) oracle[c] = A(c, p) / A(c, c);

        const VectorXd via_matrix = fit_beta_with_smoother(X, Z, MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n)));
        // A uniform kernel wider than every distance builds the same smoother.
        const SemiMetric euclid{SemiMetricSpec{}};
        const double wide = 2.0 * euclid.pairwise(curves, curves).maxCoeff();
        const VectorXd via_kernel = fit_beta(X, Z, curves, wide, KernelKind::uniform, euclid);
        worst = std::max({worst, (via_matrix - oracle).cwiseAbs().maxCoeff(), (via_kernel - oracle).cwiseAbs().maxCoeff()});
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max |beta - centred OLS| = %.1e", worst);
    return {worst <= 1e-8, buf};
}

// 4. SFPLR recovers beta and the functional part on planted data.
Outcome sfplr_recovery() {
    SyntheticSpec spec;
    spec.n_regions = 1;
    spec.n_years = 250;
    spec.beta = (VectorXd(2) << 2.0, -1.0).finished();
    spec.noise_sigma = 0.1;
    spec.round_counts = false;
    spec.m_shape = MShape::squared_mean;
    spec.m_scale = 0.8;
    spec.m_input_scale = 1.0;
    spec.seed = 4;
    const SyntheticDataset data = generate_synthetic(spec);
    const RegionData& region = data.data.regions[0];
    const int month = 2;
    const SfplrData d = build_dataset(segment(region.incidence, 12), region.covariates,
                                      TargetSpec{TargetKind::month_value, month}, CovariateMode::contemporaneous);
    const Index n_train = 200;
    const SfplrModel model = fit_sfplr(d.X.topRows(n_train), d.Z.head(n_train), d.curves.topRows(n_train));
    const double beta_err = (model.beta - spec.beta).cwiseAbs().maxCoeff();
    double mae = 0.0;
    const Index n_test = d.curves.rows() - n_train;
    for (Index i = n_train; i < d.curves.rows(); ++i) {
        // Pair i predicts period i + 1, whose functional effect is stored in row i + 1.
        mae += std::abs(estimate_m(model, d.curves.row(i)).value - data.truth.m_values[0](i + 1, month));
    }
    mae /= static_cast<double>(n_test);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "max|beta err| = %.4f (< 0.1), held-out m MAE = %.4f (< %.2f), h = %.3g", beta_err,
                  mae, 3 * spec.noise_sigma, model.h);
    return {beta_err < 0.1 && mae < 3 * spec.noise_sigma, buf};
}

// 5. AR(1) and MA(1) recovery with root conditions.
Outcome arma_recovery() {
    double phi_sum = 0.0;
    double theta_sum = 0.0;
    double min_modulus = INFINITY;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const ArmaFit ar = fit_arma(simulate_arma(one(0.6), VectorXd(), 2000, 500 + s), 1, 0);
        const ArmaFit ma = fit_arma(simulate_arma(VectorXd(), one(0.5), 2000, 600 + s), 0, 1);
        phi_sum += ar.phi[0];
        theta_sum += ma.theta[0];
        min_modulus = std::min({min_modulus, min_root_modulus_ar(ar.phi), min_root_modulus_ma(ma.theta)});
    }
    const double phi_mean = phi_sum / 20.0;
    const double theta_mean = theta_sum / 20.0;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "mean phi = %.4f, mean theta = %.4f, min root modulus = %.3f", phi_mean, theta_mean,
                  min_modulus);
    return {std::abs(phi_mean - 0.6) <= 0.05 && std::abs(theta_mean - 0.5) <= 0.05 && min_modulus > 1.0, buf};
}

// 6. ADF-driven differencing order.
Outcome order_selection() {
    int rw_ok = 0;
    int wn_ok = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
        rw_ok += select_order(random_walk(500, 700 + s)).spec.d == 1 ? 1 : 0;
        wn_ok += select_order(white_noise(500, 800 + s)).spec.d == 0 ? 1 : 0;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "random walk d=1 in %d/100, white noise d=0 in %d/100 (N=500)", rw_ok, wn_ok);
    return {rw_ok >= 80 && wn_ok >= 80, buf};
}

// 7. ARIMAX regression weight.
Outcome arimax_recovery() {
    double lo = INFINITY;
    double hi = -INFINITY;
    for (std::uint64_t s = 0; s < 20; ++s) {
        const VectorXd x = simulate_arma(one(0.5), VectorXd(), 2000, 900 + s, 1.0, 3.0);
        const VectorXd y = 2.0 * x + simulate_arma(one(0.7), VectorXd(), 2000, 1000 + s);
        const ArimaxModel m = fit_arimax(y, x, ArimaSpec{1, 0, 0});
        lo = std::min(lo, m.beta_x[0]);
        hi = std::max(hi, m.beta_x[0]);
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "beta range [%.4f, %.4f]", lo, hi);
    return {lo >= 1.9 && hi <= 2.1, buf};
}

// 8. SFPLR wins on data with covariate and functional structure.
Outcome method_ranking() {
    int wins = 0;
    int failed = 0;
    for (std::uint64_t s = 0; s < 50; ++s) {
        SyntheticSpec spec;
        spec.n_regions = 1;
        spec.n_years = 30;
        spec.m_shape = MShape::squared_mean;
        spec.seed = 100 + s;
        const Dataset d = generate_synthetic(spec).data;
        const SplitSpec split{d.regions[0].incidence.end().plus(-12), 12};
        const EvaluationReport r = run_comparison(d, split, ComparisonConfig{});
        const MethodResult* sf = r.find(d.regions[0].name, Method::sfplr);
        wins += sf && sf->best_nse ? 1 : 0;
        for (const auto& row : r.rows) failed += row.ok ? 0 : 1;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "SFPLR best NSE in %d/50 seeds (%d failed cells)", wins, failed);
    return {wins >= 40, buf};
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SFCAST_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 9. synth -> compare end to end, reproducible.
Outcome end_to_end() {
    const fs::path root = fs::temp_directory_path() / ("sfcast_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    struct Cleanup {
        fs::path p;
        ~Cleanup() { fs::remove_all(p); }
    } cleanup{root};

    for (const char* run : {"a", "b"}) {
        const fs::path data = root / (std::string("data_") + run);
        const fs::path out = root / (std::string("out_") + run);
        if (run_cli("synth --seed 7 --out " + data.string()) != 0) return {false, "synth failed"};
        if (run_cli("compare --manifest " + (data / "manifest.json").string() + " --out " + out.string() +
                    " --emit-plots") != 0) {
            return {false, "compare failed"};
        }
    }
    const fs::path out = root / "out_a";
    const auto report = parse_report_csv(read_text_file(out / "report.csv"));
    if (report.size() != 9) return {false, "report.csv has " + std::to_string(report.size()) + " rows"};
    for (const auto& row : report) {
        if (!row.nse || !row.rmse) return {false, row.region + " " + row.method + " failed"};
    }
    int prediction_files = 0;
    for (int r = 1; r <= 3; ++r) {
        for (const char* m : {"arima", "arimax", "sfplr"}) {
            const fs::path f = out / ("predictions_region_" + std::to_string(r) + "_" + m + ".csv");
            const TimeSeries s = parse_series_csv(f);
            if (s.size() != 12 || s.start() != YearMonth{2018, 1} || s.has_missing()) {
                return {false, f.filename().string() + " does not cover Jan-Dec 2018"};
            }
            ++prediction_files;
        }
        if (!fs::exists(out / ("plot_region_" + std::to_string(r) + ".svg"))) return {false, "missing SVG plot"};
    }
    int compared = 0;
    for (const char* dir : {"data", "out"}) {
        for (const auto& entry : fs::directory_iterator(root / (std::string(dir) + "_a"))) {
            const fs::path twin = root / (std::string(dir) + "_b") / entry.path().filename();
            if (!fs::exists(twin) || read_text_file(entry.path()) != read_text_file(twin)) {
                return {false, entry.path().filename().string() + " differs between runs"};
            }
            ++compared;
        }
    }
    return {true, "9 report rows, " + std::to_string(prediction_files) + " prediction files, " +
                      std::to_string(compared) + " files byte-identical on rerun"};
}

// 10. AR(1) forecasts against the closed form.
Outcome closed_form_forecast() {
    const VectorXd y = simulate_arma(one(0.6), VectorXd(), 500, 10, 1.0, 4.0);
    const ArimaModel m = fit_arima(y, ArimaSpec{1, 0, 0});
    const VectorXd f = forecast(m, 12);
    double worst = 0.0;
    for (int k = 1; k <= 12; ++k) {
        const double expected = m.intercept + std::pow(m.phi[0], k) * (y[y.size() - 1] - m.intercept);
        worst = std::max(worst, std::abs(f[k - 1] - expected));
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max deviation %.1e over k = 1..12", worst);
    return {worst <= 1e-10, buf};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "metric identities", 1.0, metric_identities},
        {2, "kernel weight law", 5.0, weight_law},
        {3, "beta reduction to centred OLS", 5.0, beta_reduction},
        {4, "SFPLR recovery", 30.0, sfplr_recovery},
        {5, "ARMA recovery", 60.0, arma_recovery},
        {6, "order selection", 120.0, order_selection},
        {7, "ARIMAX regression recovery", 60.0, arimax_recovery},
        {8, "method ranking", 600.0, method_ranking},
        {9, "end-to-end CLI", 120.0, end_to_end},
        {10, "closed-form AR(1) forecasts", INFINITY, closed_form_forecast},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.time_limit_s) {
            o.ok = false;
            o.note += " [over time limit]";
        }
        std::printf("%s %2d %-30s %7.2fs  %s\n", o.ok ? "PASS" : "FAIL", c.id, c.title, secs, o.note.c_str());
        std::fflush(stdout);
        failures += o.ok ? 0 : 1;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
