#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sfcast/evalbench.hpp"

namespace sfcast {

/// Shape of the functional effect of the previous period on the next one.
enum class MShape {
    zero,          // no carry-over
    squared_mean,  // tanh(v)^2, v the standardised mean level of the previous curve
    sine,          // (1 + sin(pi v)) / 2
};

[[nodiscard]] MShape parse_m_shape(const std::string& name);
[[nodiscard]] std::string to_string(MShape shape);

/// Generator settings. Incidence for period i, month k is
///   base_level + sum_j beta_j x_j(i, k) + m_scale * s_k * g(Y_{i-1}) + noise_sigma * eps,
/// where s_k is a seasonal outbreak profile and g the chosen MShape of the previous curve,
/// with v = (mean(Y_{i-1}) - base_level) / m_input_scale. Covariates are seasonal AR(1).
struct SyntheticSpec {
    int n_regions = 3;
    int n_years = 10;
    int tau = kMonthsPerYear;
    YearMonth start{2009, 1};
    VectorXd beta = (VectorXd(3) << 0.8, 0.5, -1.0).finished();
    double noise_sigma = 0.5;
    double covariate_phi = 0.6;
    double covariate_sigma = 1.0;
    double covariate_seasonal_amplitude = 1.0;
    MShape m_shape = MShape::sine;
    double m_scale = 8.0;
    double m_input_scale = 2.0;
    double base_level = 6.0;
    bool round_counts = true;  // round and floor at zero, as case counts
    std::uint64_t seed = 1;
};

struct SyntheticTruth {
    VectorXd beta;
    /// Per region, n_years x tau: the true base_level + functional effect for each period.
    /// Row 0 uses a neutral carry-over g = 1/2 since it has no previous curve.
    std::vector<MatrixXd> m_values;
};

struct SyntheticDataset {
    Dataset data;
    SyntheticTruth truth;
};

/// Seasonal outbreak profile s_k, peaking at the third month of the period.
[[nodiscard]] double seasonal_profile(int month_index, int tau);

/// g(previous curve) in [0, 1].
[[nodiscard]] double carry_over(MShape shape, const Eigen::Ref<const Eigen::RowVectorXd>& previous,
                                double base_level, double input_scale);

/// True functional effect (including base_level) at a month, given the previous curve.
[[nodiscard]] double true_m(const SyntheticSpec& spec, const Eigen::Ref<const Eigen::RowVectorXd>& previous,
                            int month_index);

/// Deterministic for a given spec (including seed). Regions are named region_1.. and
/// covariates precipitation, hydrometric_level, oni (x1.. beyond three).
[[nodiscard]] SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace sfcast
