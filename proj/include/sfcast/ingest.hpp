#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sfcast/evalbench.hpp"
#include "sfcast/series.hpp"

namespace sfcast {

/// Parses `date,value` CSV text (dates YYYY-MM, any row order, empty value = missing) into a
/// gapless series spanning the earliest to the latest date. Errors name `source` and line.
[[nodiscard]] TimeSeries parse_series_csv_text(const std::string& text, const std::string& source);
[[nodiscard]] TimeSeries parse_series_csv(const std::filesystem::path& path);

/// `date,value` CSV, one row per month, missing values as empty fields.
[[nodiscard]] std::string series_csv(const TimeSeries& series);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Cases per 100,000 population.
[[nodiscard]] double incidence_per_100k(double cases, double population);

struct RegionEntry {
    std::string name;
    std::filesystem::path incidence_file;
    double population = 100000.0;
};

struct CovariateEntry {
    std::string name;
    std::filesystem::path file;                                  // shared by every region
    std::map<std::string, std::filesystem::path> region_files;  // or one file per region
    MissingPolicy missing_policy = MissingPolicy::interpolate_linear;

    // Derived binary covariate: 1 when covariate `derive_from` is at or above the threshold.
    std::optional<std::string> derive_from;
    std::optional<double> threshold;
    std::map<std::string, double> region_thresholds;
};

struct DatasetManifest {
    std::vector<RegionEntry> regions;
    std::vector<CovariateEntry> covariates;
    std::optional<YearMonth> calendar_start;
    std::optional<YearMonth> calendar_end;
    MissingPolicy incidence_policy = MissingPolicy::fill_zero;
    std::filesystem::path base_dir;  // relative file paths resolve against this
};

/// Reads the JSON manifest; relative paths resolve against the manifest's directory.
[[nodiscard]] DatasetManifest parse_manifest(const std::filesystem::path& path);
[[nodiscard]] DatasetManifest parse_manifest_text(const std::string& text, const std::filesystem::path& base_dir);
[[nodiscard]] std::string manifest_json(const DatasetManifest& manifest);

struct IngestResult {
    Dataset dataset;
    YearMonth first{};
    YearMonth last{};
    std::vector<std::string> actions;  // policy applications and truncations, for the log
};

/// Loads every file, truncates to the common window (clipped to the manifest calendar),
/// resolves missing values per policy and converts counts to incidence per 100k.
/// Throws DataError on parse failures, an empty overlap or unresolvable gaps.
[[nodiscard]] IngestResult ingest(const DatasetManifest& manifest);

/// Writes the aligned dataset as CSVs plus a manifest (population 100000, so incidence
/// passes through unchanged) that ingest() maps back to the same dataset.
/// Returns the manifest path.
std::filesystem::path write_aligned(const Dataset& dataset, const std::filesystem::path& dir);

/// 3-month centred running mean of a monthly anomaly series (the ONI construction); the
/// first and last months, lacking a neighbour, are missing.
[[nodiscard]] TimeSeries running_mean_3(const TimeSeries& anomalies);

}  // namespace sfcast
