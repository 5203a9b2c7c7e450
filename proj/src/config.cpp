#include "sfcast/config.hpp"

#include <algorithm>

#include <json.hpp>

#include "sfcast/errors.hpp"

namespace sfcast {

using nlohmann::json;

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void require(bool ok, const std::string& what) {
    if (!ok) throw DataError("config: " + what);
}

}  // namespace

SplitSpec RunConfig::split_for(const Dataset& dataset) const {
    SplitSpec split;
    split.horizon = horizon;
    if (train_end) {
        split.train_end = *train_end;
    } else {
        require(!dataset.regions.empty(), "dataset has no regions");
        split.train_end = dataset.regions.front().incidence.end().plus(-horizon);
    }
    return split;
}

ComparisonConfig RunConfig::resolved(const Dataset& dataset) const {
    ComparisonConfig out = comparison;
    out.arimax_lags.clear();
    for (const auto& [name, lag] : arimax_lags) {
        const auto it = std::find(dataset.covariate_names.begin(), dataset.covariate_names.end(), name);
        if (it == dataset.covariate_names.end()) throw DataError("config: unknown ARIMAX covariate '" + name + "'");
        out.arimax_lags.push_back({static_cast<Index>(it - dataset.covariate_names.begin()), lag});
    }
    return out;
}

RunConfig parse_run_config(const std::string& json_text) {
    RunConfig cfg;
    try {
        const json j = json::parse(json_text);
        if (j.contains("split")) {
            const auto& s = j.at("split");
            if (s.contains("train_end")) cfg.train_end = YearMonth::parse(s.at("train_end").get<std::string>());
            read(s, "horizon", cfg.horizon);
        }
        auto& arima = cfg.comparison.arima;
        if (j.contains("arima")) {
            const auto& a = j.at("arima");
            read(a, "p_max", arima.p_max);
            read(a, "q_max", arima.q_max);
            read(a, "d_max", arima.d_max);
            read(a, "use_boxcox", arima.use_boxcox);
            read(a, "alpha", arima.alpha);
            read(a, "max_iterations", arima.fit.optimizer.max_iterations);
            read(a, "common_factor_tolerance", arima.common_factor_tolerance);
        }
        if (j.contains("arimax")) {
            for (const auto& lag : j.at("arimax").value("covariate_lags", json::array())) {
                cfg.arimax_lags.emplace_back(lag.at("covariate").get<std::string>(), lag.value("lag", 0));
            }
        }
        auto& sf = cfg.comparison.sfplr;
        if (j.contains("sfplr")) {
            const auto& s = j.at("sfplr");
            if (s.contains("metric")) sf.options.metric.kind = parse_semi_metric(s.at("metric").get<std::string>());
            read(s, "pca_components", sf.options.metric.q);
            read(s, "deriv_order", sf.options.metric.deriv_order);
            if (s.contains("kernel")) sf.options.kernel = parse_kernel(s.at("kernel").get<std::string>());
            if (s.contains("target")) {
                require(s.at("target").get<std::string>() == "month_value",
                        "the comparison forecasts monthly values; sfplr.target must be month_value");
            }
            if (s.contains("covariate_mode")) sf.mode = parse_covariate_mode(s.at("covariate_mode").get<std::string>());
            read(s, "h_grid", sf.options.h_grid);
            read(s, "tau", sf.tau);
        }
        if (j.contains("evaluation")) {
            const auto& e = j.at("evaluation");
            if (e.contains("nse_reference")) {
                const auto ref = e.at("nse_reference").get<std::string>();
                require(ref == "test_mean" || ref == "train_mean", "nse_reference must be test_mean or train_mean");
                cfg.comparison.nse_reference = ref == "test_mean" ? NseReference::test_mean : NseReference::train_mean;
            }
            read(e, "clamp_nonnegative", cfg.comparison.clamp_nonnegative);
            if (e.contains("methods")) {
                cfg.comparison.methods.clear();
                for (const auto& m : e.at("methods")) cfg.comparison.methods.push_back(parse_method(m.get<std::string>()));
            }
        }
        if (j.contains("output")) {
            const auto& o = j.at("output");
            if (o.contains("dir")) cfg.output.dir = o.at("dir").get<std::string>();
            read(o, "emit_plots", cfg.output.emit_plots);
        }
        read(j, "seed", cfg.seed);
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    const auto& a = cfg.comparison.arima;
    require(a.p_max >= 0 && a.q_max >= 0, "p_max and q_max must be nonnegative");
    require(a.d_max >= 0 && a.d_max <= kMaxDifferenceOrder, "d_max must lie in 0..2");
    require(cfg.horizon >= 1 && cfg.horizon <= cfg.comparison.sfplr.tau, "horizon must lie in 1..tau");
    require(cfg.comparison.sfplr.tau >= 2, "tau must be at least 2");
    require(!cfg.comparison.methods.empty(), "no methods selected");
    for (const auto& [name, lag] : cfg.arimax_lags) require(lag >= 0, "ARIMAX lags must be nonnegative");
    for (double h : cfg.comparison.sfplr.options.h_grid) require(h > 0.0, "bandwidths must be positive");
    return cfg;
}

SyntheticSpec parse_synthetic_spec(const std::string& json_text) {
    SyntheticSpec spec;
    try {
        const json j = json::parse(json_text);
        read(j, "n_regions", spec.n_regions);
        read(j, "n_years", spec.n_years);
        read(j, "tau", spec.tau);
        if (j.contains("start")) spec.start = YearMonth::parse(j.at("start").get<std::string>());
        if (j.contains("beta")) {
            const auto b = j.at("beta").get<std::vector<double>>();
            spec.beta = Eigen::Map<const VectorXd>(b.data(), static_cast<Index>(b.size()));
        }
        read(j, "noise_sigma", spec.noise_sigma);
        if (j.contains("covariate_process")) {
            const auto& c = j.at("covariate_process");
            read(c, "phi", spec.covariate_phi);
            read(c, "sigma", spec.covariate_sigma);
            read(c, "seasonal_amplitude", spec.covariate_seasonal_amplitude);
        }
        if (j.contains("m_shape")) spec.m_shape = parse_m_shape(j.at("m_shape").get<std::string>());
        read(j, "m_scale", spec.m_scale);
        read(j, "m_input_scale", spec.m_input_scale);
        read(j, "base_level", spec.base_level);
        read(j, "round_counts", spec.round_counts);
        read(j, "seed", spec.seed);
    } catch (const json::exception& e) {
        throw DataError(std::string("synthetic spec: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("synthetic spec: ") + e.what());
    }
    if (spec.n_regions < 1 || spec.n_years < 2 || spec.tau < 2) throw DataError("synthetic spec: invalid sizes");
    if (std::abs(spec.covariate_phi) >= 1.0) throw DataError("synthetic spec: covariate phi must lie in (-1, 1)");
    return spec;
}

}  // namespace sfcast
