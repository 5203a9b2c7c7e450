// sfcast: command-line driver for the ARIMA / ARIMAX / SFPLR comparison.
//
// Exit codes: 0 success, 1 data or configuration error, 2 every fit failed.

#include <cctype>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sfcast/config.hpp"
#include "sfcast/errors.hpp"
#include "sfcast/evalbench.hpp"
#include "sfcast/ingest.hpp"
#include "sfcast/svg.hpp"
#include "sfcast/synthetic.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sfcast;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitFit = 2;

struct Inputs {
    Dataset dataset;
    RunConfig config;
    SplitSpec split;
    ComparisonConfig comparison;
};

Inputs load_inputs(const std::string& manifest_path, const std::string& config_path) {
    Inputs in;
    const IngestResult ingested = ingest(parse_manifest(manifest_path));
    std::cerr << "ingested " << ingested.dataset.regions.size() << " region(s), " << ingested.first.to_string()
              << ".." << ingested.last.to_string() << '\n';
    for (const auto& action : ingested.actions) std::cerr << "  " << action << '\n';
    in.dataset = ingested.dataset;
    if (!config_path.empty()) in.config = parse_run_config(read_text_file(config_path));
    in.split = in.config.split_for(in.dataset);
    in.comparison = in.config.resolved(in.dataset);
    return in;
}

fs::path output_dir(const Inputs& in, const std::string& override_dir) {
    fs::path dir = override_dir.empty() ? in.config.output.dir : fs::path(override_dir);
    fs::create_directories(dir);
    return dir;
}

std::string file_token(const std::string& s) {
    std::string out;
    for (unsigned char c : s) out += std::isalnum(c) || c == '-' ? static_cast<char>(std::tolower(c)) : '_';
    return out;
}

fs::path predictions_path(const fs::path& dir, const std::string& region, Method method) {
    return dir / ("predictions_" + file_token(region) + "_" + file_token(to_string(method)) + ".csv");
}

json vector_json(const VectorXd& v) {
    json out = json::array();
    for (Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

json arima_json(const ArimaModel& m) {
    json j{{"order", {m.spec.p, m.spec.d, m.spec.q}},
           {"phi", vector_json(m.phi)},
           {"theta", vector_json(m.theta)},
           {"intercept", m.intercept},
           {"sigma2", m.sigma2},
           {"loglik", m.loglik},
           {"aicc", m.aicc}};
    if (m.boxcox) j["boxcox"] = {{"lambda", m.boxcox->lambda}, {"shift", m.boxcox->shift}};
    return j;
}

MatrixXd covariate_window(const RegionData& region, YearMonth first, YearMonth last) {
    MatrixXd out(months_between(first, last) + 1, static_cast<Index>(region.covariates.size()));
    for (std::size_t j = 0; j < region.covariates.size(); ++j) {
        out.col(static_cast<Index>(j)) = region.covariates[j].window(first, last).values();
    }
    return out;
}

json fit_region(const RegionData& region, const SplitSpec& split, const ComparisonConfig& cfg, int& failures,
                int& attempts) {
    json out{{"region", region.name}};
    const TimeSeries train = region.incidence.window(region.incidence.start(), split.train_end);
    std::optional<ArimaSpec> order;
    for (Method method : cfg.methods) {
        ++attempts;
        const std::string key = to_string(method);
        try {
            validate_split(region, split, cfg.sfplr.tau);
            if (method != Method::sfplr && !order) order = select_order(train.values(), cfg.arima).spec;
            switch (method) {
                case Method::arima: out[key] = arima_json(fit_arima(train, *order, cfg.arima.fit)); break;
                case Method::arimax: {
                    const ArimaxModel m = fit_arimax(train.values(),
                                                     covariate_window(region, train.start(), split.train_end), *order,
                                                     cfg.arimax_lags, cfg.arima.fit);
                    json j = arima_json(m.base);
                    j["beta_x"] = vector_json(m.beta_x);
                    json lags = json::array();
                    for (const auto& l : m.covariate_lags) lags.push_back({{"covariate", l.covariate}, {"lag", l.lag}});
                    j["covariate_lags"] = lags;
                    out[key] = j;
                    break;
                }
                case Method::sfplr: {
                    const FunctionalSample sample = segment(train, cfg.sfplr.tau);
                    json months = json::array();
                    for (int m = 0; m < split.horizon; ++m) {
                        const TargetSpec target{TargetKind::month_value, m};
                        const SfplrData data = build_dataset(sample, region.covariates, target, cfg.sfplr.mode);
                        const SfplrModel model = fit_sfplr(data.X, data.Z, data.curves, cfg.sfplr.options, target);
                        months.push_back({{"month_index", m},
                                          {"h", model.h},
                                          {"beta", vector_json(model.beta)},
                                          {"kernel", to_string(model.kernel)},
                                          {"cv_grid", model.cv.grid},
                                          {"cv_scores", model.cv.scores}});
                    }
                    out[key] = {{"curves", sample.size()}, {"dropped", sample.dropped}, {"months", months}};
                    break;
                }
            }
        } catch (const std::exception& e) {
            ++failures;
            out[key] = {{"error", e.what()}};
        }
    }
    return out;
}

void write_predictions(const fs::path& dir, const EvaluationReport& report) {
    for (const auto& row : report.rows) {
        if (!row.ok) continue;
        write_text_file(predictions_path(dir, row.region, row.method),
                        series_csv(TimeSeries(report.test_start, row.predictions)));
    }
}

void write_plots(const fs::path& dir, const Dataset& dataset, const EvaluationReport& report) {
    for (const auto& region : dataset.regions) {
        ForecastPlot plot;
        plot.title = region.name;
        plot.history = region.incidence.window(region.incidence.start(),
                                               std::min(region.incidence.end(), report.test_start.plus(report.horizon - 1)));
        plot.test_start = report.test_start;
        for (const auto& row : report.rows) {
            if (row.region == region.name && row.ok) plot.predictions.emplace_back(to_string(row.method), row.predictions);
        }
        write_text_file(dir / ("plot_" + file_token(region.name) + ".svg"), forecast_svg(plot));
    }
}

void write_report(const fs::path& dir, const EvaluationReport& report) {
    write_text_file(dir / "report.csv", report_csv(report));
    write_text_file(dir / "report.txt", report_table(report));
    for (const auto& row : report.rows) {
        if (!row.ok) std::cerr << row.region << ' ' << to_string(row.method) << " failed: " << row.error << '\n';
    }
}

/// Rebuilds a report from prediction files written by `forecast` or `compare`.
EvaluationReport report_from_files(const Inputs& in, const fs::path& dir) {
    EvaluationReport report;
    report.test_start = in.split.train_end.plus(1);
    report.horizon = in.split.horizon;
    const YearMonth test_end = in.split.train_end.plus(in.split.horizon);
    for (const auto& region : in.dataset.regions) {
        for (Method method : in.comparison.methods) {
            MethodResult row;
            row.region = region.name;
            row.method = method;
            const fs::path path = predictions_path(dir, region.name, method);
            try {
                if (!fs::exists(path)) throw DataError("missing " + path.string());
                const TimeSeries pred = parse_series_csv(path);
                if (!pred.covers(report.test_start, test_end)) {
                    throw DataError(path.string() + " does not cover " + report.test_start.to_string() + ".." +
                                    test_end.to_string());
                }
                if (!region.incidence.covers(report.test_start, test_end)) {
                    throw DataError("observations of " + region.name + " end before " + test_end.to_string());
                }
                row.predictions = pred.window(report.test_start, test_end).values();
                row.raw_predictions = row.predictions;
                row.observed = region.incidence.window(report.test_start, test_end).values();
                std::optional<double> ref;
                if (in.comparison.nse_reference == NseReference::train_mean) {
                    ref = region.incidence.window(region.incidence.start(), in.split.train_end).values().mean();
                }
                row.nse = nse(row.predictions, row.observed, ref);
                row.rmse = rmse(row.predictions, row.observed);
                row.ok = true;
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            report.rows.push_back(std::move(row));
        }
    }
    flag_best(report);
    return report;
}

json truth_json(const SyntheticSpec& spec, const SyntheticTruth& truth) {
    json j{{"beta", vector_json(truth.beta)},
           {"m_shape", to_string(spec.m_shape)},
           {"noise_sigma", spec.noise_sigma},
           {"seed", spec.seed}};
    json m = json::object();
    for (std::size_t r = 0; r < truth.m_values.size(); ++r) {
        json rows = json::array();
        for (Index i = 0; i < truth.m_values[r].rows(); ++i) rows.push_back(vector_json(truth.m_values[r].row(i).transpose()));
        m["region_" + std::to_string(r + 1)] = rows;
    }
    j["m_values"] = m;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monthly incidence forecasting: ARIMA, ARIMAX and SFPLR"};
    app.require_subcommand(1);

    std::string manifest;
    std::string config;
    std::string out_dir;
    std::string predictions_dir;
    auto add_io = [&](CLI::App* cmd) {
        cmd->add_option("--manifest", manifest, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
        cmd->add_option("--config", config, "run configuration (JSON)")->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory (overrides output.dir)");
    };

    auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string spec_path;
    std::optional<std::uint64_t> seed;
    synth->add_option("--spec", spec_path, "synthetic spec (JSON)")->check(CLI::ExistingFile);
    synth->add_option("--seed", seed, "overrides the spec seed");
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* ingest_cmd = app.add_subcommand("ingest", "align a dataset and write it as CSVs");
    ingest_cmd->add_option("--manifest", manifest, "dataset manifest (JSON)")->required()->check(CLI::ExistingFile);
    ingest_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* fit = app.add_subcommand("fit", "fit every method on the training window");
    add_io(fit);

    auto* fc = app.add_subcommand("forecast", "write test-window predictions per region and method");
    add_io(fc);

    auto* evaluate = app.add_subcommand("evaluate", "score prediction files against observations");
    add_io(evaluate);
    evaluate->add_option("--predictions", predictions_dir, "directory holding predictions_*.csv");

    auto* compare = app.add_subcommand("compare", "fit, forecast and score in one run");
    add_io(compare);
    bool emit_plots = false;
    compare->add_flag("--emit-plots", emit_plots, "also write SVG plots");

    auto* plot = app.add_subcommand("plot", "SVG plots of observed and predicted series");
    add_io(plot);
    plot->add_option("--predictions", predictions_dir, "directory holding predictions_*.csv");

    auto* oni = app.add_subcommand("oni-from-sst", "3-month running mean of monthly SST anomalies");
    std::string input;
    std::string output;
    oni->add_option("--input", input, "anomaly CSV (date,value)")->required()->check(CLI::ExistingFile);
    oni->add_option("--output", output, "ONI CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitData;
    }

    try {
        if (*synth) {
            SyntheticSpec spec;
            if (!spec_path.empty()) spec = parse_synthetic_spec(read_text_file(spec_path));
            if (seed) spec.seed = *seed;
            const SyntheticDataset data = generate_synthetic(spec);
            const fs::path path = write_aligned(data.data, out_dir);
            write_text_file(fs::path(out_dir) / "truth.json", truth_json(spec, data.truth).dump(2) + "\n");
            std::cout << path.string() << '\n';
            return kExitOk;
        }
        if (*ingest_cmd) {
            const IngestResult r = ingest(parse_manifest(manifest));
            for (const auto& action : r.actions) std::cerr << action << '\n';
            std::cout << write_aligned(r.dataset, out_dir).string() << '\n';
            return kExitOk;
        }
        if (*oni) {
            write_text_file(output, series_csv(running_mean_3(parse_series_csv(input))));
            return kExitOk;
        }

        const Inputs in = load_inputs(manifest, config);
        const fs::path dir = output_dir(in, out_dir);

        if (*fit) {
            int failures = 0;
            int attempts = 0;
            json models{{"train_end", in.split.train_end.to_string()}, {"horizon", in.split.horizon}};
            models["regions"] = json::array();
            for (const auto& region : in.dataset.regions) {
                models["regions"].push_back(fit_region(region, in.split, in.comparison, failures, attempts));
            }
            write_text_file(dir / "models.json", models.dump(2) + "\n");
            return attempts > 0 && failures == attempts ? kExitFit : kExitOk;
        }
        if (*fc || *compare) {
            const EvaluationReport report = run_comparison(in.dataset, in.split, in.comparison);
            write_predictions(dir, report);
            if (*compare) {
                write_report(dir, report);
                if (emit_plots || in.config.output.emit_plots) write_plots(dir, in.dataset, report);
                std::cout << report_table(report);
            } else {
                for (const auto& row : report.rows) {
                    if (!row.ok) std::cerr << row.region << ' ' << to_string(row.method) << " failed: " << row.error << '\n';
                }
            }
            return report.all_failed() ? kExitFit : kExitOk;
        }
        const fs::path pred_dir = predictions_dir.empty() ? dir : fs::path(predictions_dir);
        const EvaluationReport report = report_from_files(in, pred_dir);
        if (*evaluate) {
            write_report(dir, report);
            std::cout << report_table(report);
            return report.all_failed() ? kExitData : kExitOk;
        }
        if (*plot) {
            write_plots(dir, in.dataset, report);
            return kExitOk;
        }
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    } catch (const FitError& e) {
        std::cerr << "fit error: " << e.what() << '\n';
        return kExitFit;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return kExitOk;
}
