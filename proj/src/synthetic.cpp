#include "sfcast/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace sfcast {

MShape parse_m_shape(const std::string& name) {
    if (name == "zero") return MShape::zero;
    if (name == "squared_mean") return MShape::squared_mean;
    if (name == "sine") return MShape::sine;
    throw std::invalid_argument("unknown m shape '" + name + "'");
}

std::string to_string(MShape shape) {
    switch (shape) {
        case MShape::zero: return "zero";
        case MShape::squared_mean: return "squared_mean";
        case MShape::sine: return "sine";
    }
    return "zero";
}

double seasonal_profile(int month_index, int tau) {
    const double peak = 2.0 * tau / kMonthsPerYear;
    double dist = std::abs(month_index - peak);
    dist = std::min(dist, tau - dist);
    const double width = 1.5 * tau / kMonthsPerYear;
    return 0.25 + std::exp(-0.5 * dist * dist / (width * width));
}

double carry_over(MShape shape, const Eigen::Ref<const Eigen::RowVectorXd>& previous, double base_level,
                  double input_scale) {
    const double v = (previous.mean() - base_level) / input_scale;
    switch (shape) {
        case MShape::zero: return 0.0;
        case MShape::squared_mean: {
            const double t = std::tanh(v);
            return t * t;
        }
        case MShape::sine: return 0.5 * (1.0 + std::sin(std::numbers::pi * v));
    }
    return 0.0;
}

double true_m(const SyntheticSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& previous, int month_index) {
    return spec.base_level + spec.m_scale * seasonal_profile(month_index, spec.tau) *
                                 carry_over(spec.m_shape, previous, spec.base_level, spec.m_input_scale);
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_regions < 1 || spec.n_years < 2 || spec.tau < 2) throw std::invalid_argument("invalid synthetic spec");
    const Index p = spec.beta.size();
    const Index tau = spec.tau;
    const Index months = static_cast<Index>(spec.n_years) * tau;

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticDataset out;
    out.truth.beta = spec.beta;
    static const char* kNames[] = {"precipitation", "hydrometric_level", "oni"};
    for (Index j = 0; j < p; ++j) {
        out.data.covariate_names.push_back(p <= 3 ? kNames[j] : "x" + std::to_string(j + 1));
    }

    for (int r = 0; r < spec.n_regions; ++r) {
        // Covariates: seasonal mean plus AR(1) anomaly, started from the stationary law.
        MatrixXd x(months, p);
        for (Index j = 0; j < p; ++j) {
            const double phase = 2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(std::max<Index>(p, 1));
            const double stationary_sd = spec.covariate_sigma / std::sqrt(1.0 - spec.covariate_phi * spec.covariate_phi);
            double anomaly = stationary_sd * normal(rng);
            for (Index t = 0; t < months; ++t) {
                if (t > 0) anomaly = spec.covariate_phi * anomaly + spec.covariate_sigma * normal(rng);
                const double season = spec.covariate_seasonal_amplitude *
                                      std::sin(2.0 * std::numbers::pi * static_cast<double>(t % tau) / tau + phase);
                x(t, j) = season + anomaly;
            }
        }

        MatrixXd y(spec.n_years, tau);
        MatrixXd m_values(spec.n_years, tau);
        for (int i = 0; i < spec.n_years; ++i) {
            const double g = i == 0 ? 0.5 : carry_over(spec.m_shape, y.row(i - 1), spec.base_level, spec.m_input_scale);
            for (Index k = 0; k < tau; ++k) {
                const Index t = i * tau + k;
                const double m = spec.base_level + spec.m_scale * seasonal_profile(static_cast<int>(k), spec.tau) * g;
                m_values(i, k) = m;
                double v = m + (p > 0 ? x.row(t).dot(spec.beta) : 0.0) + spec.noise_sigma * normal(rng);
                if (spec.round_counts) v = std::max(0.0, std::round(v));
                y(i, k) = v;
            }
        }

        RegionData region;
        region.name = "region_" + std::to_string(r + 1);
        VectorXd flat(months);
        for (int i = 0; i < spec.n_years; ++i) flat.segment(i * tau, tau) = y.row(i).transpose();
        region.incidence = TimeSeries(spec.start, flat);
        for (Index j = 0; j < p; ++j) region.covariates.emplace_back(spec.start, x.col(j));
        out.data.regions.push_back(std::move(region));
        out.truth.m_values.push_back(std::move(m_values));
    }
    return out;
}

}  // namespace sfcast
