#include "sfcast/evalbench.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <sstream>

#include "sfcast/errors.hpp"

namespace sfcast {

namespace {

constexpr double kTieTolerance = 1e-12;

MatrixXd covariate_block(const RegionData& region, YearMonth first, YearMonth last) {
    const auto rows = static_cast<Index>(months_between(first, last) + 1);
    MatrixXd out(rows, static_cast<Index>(region.covariates.size()));
    for (std::size_t j = 0; j < region.covariates.size(); ++j) {
        const TimeSeries& cov = region.covariates[j];
        if (!cov.covers(first, last)) {
            throw DataError("covariate " + std::to_string(j) + " of " + region.name + " does not cover " +
                            first.to_string() + ".." + last.to_string());
        }
        out.col(static_cast<Index>(j)) = cov.window(first, last).values();
    }
    if (!out.allFinite()) throw DataError("covariates of " + region.name + " have gaps in " + first.to_string() + ".." +
                                          last.to_string());
    return out;
}

std::string trim(std::string s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
    std::size_t b = 0;
    while (b < s.size() && s[b] == ' ') ++b;
    return s.substr(b);
}

}  // namespace

std::string to_string(Method method) {
    switch (method) {
        case Method::arima: return "ARIMA";
        case Method::arimax: return "ARIMAX";
        case Method::sfplr: return "SFPLR";
    }
    return "ARIMA";
}

Method parse_method(const std::string& name) {
    std::string upper = name;
    std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
    if (upper == "ARIMA") return Method::arima;
    if (upper == "ARIMAX") return Method::arimax;
    if (upper == "SFPLR") return Method::sfplr;
    throw std::invalid_argument("unknown method '" + name + "'");
}

void validate_split(const RegionData& region, const SplitSpec& split, int tau) {
    const TimeSeries& y = region.incidence;
    if (split.horizon < 1 || split.horizon > tau) {
        throw std::invalid_argument("horizon must lie in 1.." + std::to_string(tau));
    }
    const long train_len = months_between(y.start(), split.train_end) + 1;
    if (train_len < 3L * tau) {
        throw std::invalid_argument("training window of " + region.name + " is shorter than three periods");
    }
    if (y.end() < split.train_end.plus(split.horizon)) {
        throw std::invalid_argument("series of " + region.name + " ends at " + y.end().to_string() +
                                    ", before the end of the test window");
    }
    if (y.has_missing()) throw DataError("incidence of " + region.name + " has missing values");
}

MethodForecast forecast_method(const RegionData& region, Method method, const SplitSpec& split,
                               const ComparisonConfig& config, const ArimaSpec* selected) {
    validate_split(region, split, config.sfplr.tau);
    const int h = split.horizon;
    const TimeSeries train = region.incidence.window(region.incidence.start(), split.train_end);
    MethodForecast out;

    auto select = [&]() {
        if (selected) return *selected;
        return select_order(train.values(), config.arima).spec;
    };

    switch (method) {
        case Method::arima: {
            const ArimaSpec spec = select();
            const ArimaModel model = fit_arima(train, spec, config.arima.fit);
            out.raw_predictions = forecast(model, h);
            out.detail = spec.to_string();
            break;
        }
        case Method::arimax: {
            const ArimaSpec spec = select();
            const MatrixXd x_train = covariate_block(region, train.start(), split.train_end);
            const MatrixXd x_future = covariate_block(region, split.train_end.plus(1), split.train_end.plus(h));
            const ArimaxModel model = fit_arimax(train.values(), x_train, spec, config.arimax_lags, config.arima.fit);
            out.raw_predictions = forecast_arimax(model, x_future, h);
            std::ostringstream detail;
            detail << spec.to_string() << " beta=[";
            for (Index j = 0; j < model.beta_x.size(); ++j) detail << (j ? " " : "") << format_double(model.beta_x[j]);
            detail << "]";
            out.detail = detail.str();
            break;
        }
        case Method::sfplr: {
            const FunctionalSample sample = segment(train, config.sfplr.tau);
            out.raw_predictions.resize(h);
            std::ostringstream detail;
            detail << "h=[";
            for (int m = 0; m < h; ++m) {
                const TargetSpec target{TargetKind::month_value, m};
                const SfplrData data = build_dataset(sample, region.covariates, target, config.sfplr.mode);
                if (!data.x_next) {
                    throw DataError("covariates for " + data.next_target_month.to_string() + " are not available");
                }
                SfplrOptions opts = config.sfplr.options;
                opts.nonnegative = false;
                const SfplrModel model = fit_sfplr(data.X, data.Z, data.curves, opts, target);
                const SfplrPrediction p = predict(model, *data.x_next, data.last_curve);
                out.raw_predictions[m] = p.raw;
                out.fallbacks += p.fallback ? 1 : 0;
                detail << (m ? " " : "") << format_double(model.h);
            }
            detail << "]";
            if (out.fallbacks > 0) detail << " fallbacks=" << out.fallbacks;
            out.detail = detail.str();
            break;
        }
    }
    if (!out.raw_predictions.allFinite()) throw FitError(to_string(method) + " produced non-finite forecasts");
    out.predictions = config.clamp_nonnegative ? VectorXd(out.raw_predictions.cwiseMax(0.0)) : out.raw_predictions;
    return out;
}

const MethodResult* EvaluationReport::find(const std::string& region, Method method) const {
    for (const auto& row : rows) {
        if (row.region == region && row.method == method) return &row;
    }
    return nullptr;
}

bool EvaluationReport::all_failed() const {
    return std::none_of(rows.begin(), rows.end(), [](const MethodResult& r) { return r.ok; });
}

void flag_best(EvaluationReport& report) {
    std::vector<std::string> regions;
    for (const auto& row : report.rows) {
        if (std::find(regions.begin(), regions.end(), row.region) == regions.end()) regions.push_back(row.region);
    }
    for (const auto& region : regions) {
        double best_nse = -std::numeric_limits<double>::infinity();
        double best_rmse = std::numeric_limits<double>::infinity();
        for (const auto& row : report.rows) {
            if (row.region != region || !row.ok) continue;
            best_nse = std::max(best_nse, row.nse);
            best_rmse = std::min(best_rmse, row.rmse);
        }
        for (auto& row : report.rows) {
            if (row.region != region) continue;
            row.best_nse = row.ok && std::abs(row.nse - best_nse) <= kTieTolerance * std::max(1.0, std::abs(best_nse));
            row.best_rmse = row.ok && std::abs(row.rmse - best_rmse) <= kTieTolerance * std::max(1.0, best_rmse);
        }
    }
}

EvaluationReport run_comparison(const Dataset& dataset, const SplitSpec& split, const ComparisonConfig& config) {
    EvaluationReport report;
    report.test_start = split.train_end.plus(1);
    report.horizon = split.horizon;

    for (const auto& region : dataset.regions) {
        // One order search serves both ARIMA and ARIMAX.
        std::optional<ArimaSpec> spec;
        std::string spec_error;
        const bool needs_order = std::any_of(config.methods.begin(), config.methods.end(),
                                             [](Method m) { return m != Method::sfplr; });
        if (needs_order) {
            try {
                validate_split(region, split, config.sfplr.tau);
                const TimeSeries train = region.incidence.window(region.incidence.start(), split.train_end);
                spec = select_order(train.values(), config.arima).spec;
            } catch (const std::exception& e) {
                spec_error = e.what();
            }
        }

        for (Method method : config.methods) {
            MethodResult row;
            row.region = region.name;
            row.method = method;
            try {
                if (method != Method::sfplr && !spec) throw FitError("order selection failed: " + spec_error);
                const MethodForecast f = forecast_method(region, method, split, config, spec ? &*spec : nullptr);
                row.predictions = f.predictions;
                row.raw_predictions = f.raw_predictions;
                row.detail = f.detail;
                row.observed = region.incidence.window(report.test_start, split.train_end.plus(split.horizon)).values();
                std::optional<double> ref;
                if (config.nse_reference == NseReference::train_mean) {
                    ref = region.incidence.window(region.incidence.start(), split.train_end).values().mean();
                }
                row.nse = nse(row.predictions, row.observed, ref);
                row.rmse = rmse(row.predictions, row.observed);
                row.ok = true;
            } catch (const std::exception& e) {
                row.ok = false;
                row.error = e.what();
            }
            report.rows.push_back(std::move(row));
        }
    }
    flag_best(report);
    return report;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "NA";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) return "NA";
    return std::string(buf, ptr);
}

std::string report_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "region,method,nse,rmse,best_nse,best_rmse\n";
    for (const auto& row : report.rows) {
        out << row.region << ',' << to_string(row.method) << ',' << (row.ok ? format_double(row.nse) : "NA") << ','
            << (row.ok ? format_double(row.rmse) : "NA") << ',' << (row.best_nse ? 1 : 0) << ','
            << (row.best_rmse ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string report_table(const EvaluationReport& report) {
    std::ostringstream out;
    char line[128];
    std::string current;
    for (const auto& row : report.rows) {
        if (row.region != current) {
            if (!current.empty()) out << '\n';
            current = row.region;
            out << current << '\n';
            std::snprintf(line, sizeof(line), "%-8s %9s %9s\n", "Method", "NSE", "RMSE");
            out << line << std::string(28, '-') << '\n';
        }
        if (!row.ok) {
            std::snprintf(line, sizeof(line), "%-8s %9s %9s  (%s)\n", to_string(row.method).c_str(), "failed", "failed",
                          row.error.c_str());
        } else {
            char nse_s[32];
            char rmse_s[32];
            std::snprintf(nse_s, sizeof(nse_s), "%.2f%s", row.nse, row.best_nse ? "*" : " ");
            std::snprintf(rmse_s, sizeof(rmse_s), "%.2f%s", row.rmse, row.best_rmse ? "*" : " ");
            std::snprintf(line, sizeof(line), "%-8s %9s %9s\n", to_string(row.method).c_str(), nse_s, rmse_s);
        }
        out << line;
    }
    out << "\n* best value per region\n";
    return out.str();
}

std::vector<ReportCsvRow> parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || trim(line) != "region,method,nse,rmse,best_nse,best_rmse") {
        throw DataError("report CSV: unexpected header");
    }
    auto parse_value = [](const std::string& s, int line_no) -> std::optional<double> {
        if (s == "NA") return std::nullopt;
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw DataError("report CSV line " + std::to_string(line_no) + ": bad number '" + s + "'");
        }
        return v;
    };
    std::vector<ReportCsvRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string f;
        while (std::getline(ss, f, ',')) fields.push_back(f);
        if (fields.size() != 6) throw DataError("report CSV line " + std::to_string(line_no) + ": expected 6 fields");
        ReportCsvRow row;
        row.region = fields[0];
        row.method = fields[1];
        row.nse = parse_value(fields[2], line_no);
        row.rmse = parse_value(fields[3], line_no);
        row.best_nse = fields[4] == "1";
        row.best_rmse = fields[5] == "1";
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace sfcast
