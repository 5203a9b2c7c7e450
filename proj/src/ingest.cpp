#include "sfcast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sfcast/errors.hpp"

namespace sfcast {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

std::string file_stem_for(const std::string& name) {
    std::string out = name;
    for (char& c : out) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
    }
    return out;
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() || base.empty() ? p : base / p; }

std::string policy_name(MissingPolicy policy) { return to_string(policy); }

}  // namespace

// ---------------------------------------------------------------------------
// Series CSV

TimeSeries parse_series_csv_text(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto where = [&]() { return source + ":" + std::to_string(line_no) + ": "; };

    bool header_seen = false;
    std::map<long, double> rows;  // ordinal -> value (NaN for missing)
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (!header_seen) {
            if (t != "date,value") throw DataError(where() + "expected header 'date,value'");
            header_seen = true;
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string::npos || t.find(',', comma + 1) != std::string::npos) {
            throw DataError(where() + "expected two fields");
        }
        YearMonth ym;
        try {
            ym = YearMonth::parse(trim(std::string_view(t).substr(0, comma)));
        } catch (const DataError& e) {
            throw DataError(where() + e.what());
        }
        const std::string field = trim(std::string_view(t).substr(comma + 1));
        double value = TimeSeries::missing();
        if (!field.empty()) {
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
            if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
                throw DataError(where() + "non-numeric value '" + field + "'");
            }
        }
        if (!rows.emplace(ym.ordinal(), value).second) {
            throw DataError(where() + "duplicate month " + ym.to_string());
        }
    }
    if (!header_seen) throw DataError(source + ": empty file");
    if (rows.empty()) throw DataError(source + ": no data rows");

    const long first = rows.begin()->first;
    const long last = rows.rbegin()->first;
    VectorXd values = VectorXd::Constant(last - first + 1, TimeSeries::missing());
    for (const auto& [ordinal, value] : rows) values[ordinal - first] = value;
    return TimeSeries(YearMonth::from_ordinal(first), std::move(values));
}

TimeSeries parse_series_csv(const fs::path& path) { return parse_series_csv_text(read_text_file(path), path.string()); }

std::string series_csv(const TimeSeries& series) {
    std::string out = "date,value\n";
    for (Index k = 0; k < series.size(); ++k) {
        out += series.month_at(k).to_string();
        out += ',';
        if (!series.is_missing(k)) out += format_double(series[k]);
        out += '\n';
    }
    return out;
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("failed writing " + path.string());
}

double incidence_per_100k(double cases, double population) {
    if (!(population > 0.0)) throw DataError("population must be positive");
    return cases * (100000.0 / population);
}

// ---------------------------------------------------------------------------
// Manifest

DatasetManifest parse_manifest_text(const std::string& text, const fs::path& base_dir) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
    DatasetManifest m;
    m.base_dir = base_dir;
    try {
        if (j.contains("calendar")) {
            const auto& cal = j.at("calendar");
            if (cal.contains("start")) m.calendar_start = YearMonth::parse(cal.at("start").get<std::string>());
            if (cal.contains("end")) m.calendar_end = YearMonth::parse(cal.at("end").get<std::string>());
        }
        if (j.contains("incidence_missing_policy")) {
            m.incidence_policy = parse_missing_policy(j.at("incidence_missing_policy").get<std::string>());
        }
        std::set<std::string> names;
        for (const auto& r : j.at("regions")) {
            RegionEntry e;
            e.name = r.at("name").get<std::string>();
            if (e.name.empty() || e.name.find_first_of(",\"\n") != std::string::npos) {
                throw DataError("manifest: region name '" + e.name + "' must be non-empty without commas or quotes");
            }
            if (!names.insert(e.name).second) throw DataError("manifest: duplicate region '" + e.name + "'");
            e.incidence_file = r.at("incidence_file").get<std::string>();
            e.population = r.value("population", 100000.0);
            if (!(e.population > 0.0)) throw DataError("manifest: population of '" + e.name + "' must be positive");
            m.regions.push_back(std::move(e));
        }
        if (m.regions.empty()) throw DataError("manifest: no regions");
        if (j.contains("covariates")) {
            for (const auto& c : j.at("covariates")) {
                CovariateEntry e;
                e.name = c.at("name").get<std::string>();
                if (c.contains("missing_policy")) e.missing_policy = parse_missing_policy(c.at("missing_policy").get<std::string>());
                if (c.contains("derive")) {
                    if (c.at("derive").get<std::string>() != "above_evac") {
                        throw DataError("manifest: unknown derivation for covariate '" + e.name + "'");
                    }
                    e.derive_from = c.at("source").get<std::string>();
                    if (c.contains("threshold")) e.threshold = c.at("threshold").get<double>();
                    if (c.contains("thresholds")) {
                        for (const auto& [region, value] : c.at("thresholds").items()) {
                            e.region_thresholds[region] = value.get<double>();
                        }
                    }
                } else if (c.contains("files")) {
                    for (const auto& [region, path] : c.at("files").items()) e.region_files[region] = path.get<std::string>();
                } else {
                    e.file = c.at("file").get<std::string>();
                }
                m.covariates.push_back(std::move(e));
            }
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("manifest: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("manifest: ") + e.what());
    }
    return m;
}

DatasetManifest parse_manifest(const fs::path& path) {
    return parse_manifest_text(read_text_file(path), path.parent_path());
}

std::string manifest_json(const DatasetManifest& m) {
    json j;
    if (m.calendar_start || m.calendar_end) {
        j["calendar"] = json::object();
        if (m.calendar_start) j["calendar"]["start"] = m.calendar_start->to_string();
        if (m.calendar_end) j["calendar"]["end"] = m.calendar_end->to_string();
    }
    j["incidence_missing_policy"] = policy_name(m.incidence_policy);
    j["regions"] = json::array();
    for (const auto& r : m.regions) {
        j["regions"].push_back({{"name", r.name}, {"incidence_file", r.incidence_file.generic_string()},
                                {"population", r.population}});
    }
    j["covariates"] = json::array();
    for (const auto& c : m.covariates) {
        json e{{"name", c.name}, {"missing_policy", policy_name(c.missing_policy)}};
        if (c.derive_from) {
            e["derive"] = "above_evac";
            e["source"] = *c.derive_from;
            if (c.threshold) e["threshold"] = *c.threshold;
            if (!c.region_thresholds.empty()) e["thresholds"] = c.region_thresholds;
        } else if (!c.region_files.empty()) {
            json files = json::object();
            for (const auto& [region, path] : c.region_files) files[region] = path.generic_string();
            e["files"] = files;
        } else {
            e["file"] = c.file.generic_string();
        }
        j["covariates"].push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Ingestion

IngestResult ingest(const DatasetManifest& manifest) {
    IngestResult result;
    const std::size_t n_regions = manifest.regions.size();
    const std::size_t n_cov = manifest.covariates.size();

    std::map<fs::path, TimeSeries> cache;
    auto load = [&](const fs::path& p) -> const TimeSeries& {
        const fs::path full = resolve(manifest.base_dir, p);
        auto it = cache.find(full);
        if (it == cache.end()) it = cache.emplace(full, parse_series_csv(full)).first;
        return it->second;
    };

    std::vector<TimeSeries> incidence(n_regions);
    std::vector<std::vector<std::optional<TimeSeries>>> raw_cov(n_regions, std::vector<std::optional<TimeSeries>>(n_cov));
    std::optional<YearMonth> first = manifest.calendar_start;
    std::optional<YearMonth> last = manifest.calendar_end;
    auto narrow = [&](const TimeSeries& s) {
        first = first ? std::max(*first, s.start()) : s.start();
        last = last ? std::min(*last, s.end()) : s.end();
    };

    for (std::size_t r = 0; r < n_regions; ++r) {
        const auto& region = manifest.regions[r];
        incidence[r] = load(region.incidence_file);
        for (Index k = 0; k < incidence[r].size(); ++k) {
            if (!incidence[r].is_missing(k) && incidence[r][k] < 0.0) {
                throw DataError(region.incidence_file.string() + ": negative case count at " +
                                incidence[r].month_at(k).to_string());
            }
        }
        narrow(incidence[r]);
        for (std::size_t c = 0; c < n_cov; ++c) {
            const auto& cov = manifest.covariates[c];
            if (cov.derive_from) continue;
            fs::path file = cov.file;
            if (!cov.region_files.empty()) {
                const auto it = cov.region_files.find(region.name);
                if (it == cov.region_files.end()) {
                    throw DataError("covariate '" + cov.name + "' has no file for region '" + region.name + "'");
                }
                file = it->second;
            }
            raw_cov[r][c] = load(file);
            narrow(*raw_cov[r][c]);
        }
    }
    if (!first || !last || *last < *first) throw DataError("input series have no common overlapping window");
    result.first = *first;
    result.last = *last;
    result.actions.push_back("aligned window " + first->to_string() + ".." + last->to_string());

    for (const auto& c : manifest.covariates) result.dataset.covariate_names.push_back(c.name);

    for (std::size_t r = 0; r < n_regions; ++r) {
        const auto& entry = manifest.regions[r];
        RegionData region;
        region.name = entry.name;

        auto resolved = resolve_missing(incidence[r].reindexed(*first, *last), manifest.incidence_policy);
        if (resolved.filled > 0) {
            result.actions.push_back(entry.name + ": " + std::to_string(resolved.filled) + " missing incidence months (" +
                                     policy_name(manifest.incidence_policy) + ")");
        }
        VectorXd per100k = resolved.series.values();
        const double factor = 100000.0 / entry.population;
        per100k *= factor;
        region.incidence = TimeSeries(*first, std::move(per100k));

        region.covariates.resize(n_cov);
        for (std::size_t c = 0; c < n_cov; ++c) {
            const auto& cov = manifest.covariates[c];
            if (cov.derive_from) continue;
            auto res = resolve_missing(raw_cov[r][c]->reindexed(*first, *last), cov.missing_policy);
            if (res.filled > 0) {
                result.actions.push_back(entry.name + ": " + std::to_string(res.filled) + " missing values of '" + cov.name +
                                         "' (" + policy_name(cov.missing_policy) + ")");
            }
            region.covariates[c] = std::move(res.series);
        }
        for (std::size_t c = 0; c < n_cov; ++c) {
            const auto& cov = manifest.covariates[c];
            if (!cov.derive_from) continue;
            const auto src = std::find(result.dataset.covariate_names.begin(), result.dataset.covariate_names.end(),
                                       *cov.derive_from);
            const auto src_idx = static_cast<std::size_t>(src - result.dataset.covariate_names.begin());
            if (src == result.dataset.covariate_names.end() || manifest.covariates[src_idx].derive_from) {
                throw DataError("derived covariate '" + cov.name + "' needs a loaded source '" + *cov.derive_from + "'");
            }
            std::optional<double> threshold = cov.threshold;
            if (const auto it = cov.region_thresholds.find(entry.name); it != cov.region_thresholds.end()) {
                threshold = it->second;
            }
            if (!threshold) throw DataError("derived covariate '" + cov.name + "' has no threshold for '" + entry.name + "'");
            const VectorXd& level = region.covariates[src_idx].values();
            region.covariates[c] = TimeSeries(*first, (level.array() >= *threshold).cast<double>().matrix());
        }
        result.dataset.regions.push_back(std::move(region));
    }
    return result;
}

fs::path write_aligned(const Dataset& dataset, const fs::path& dir) {
    fs::create_directories(dir);
    DatasetManifest m;
    m.incidence_policy = MissingPolicy::fail;
    if (!dataset.regions.empty()) {
        m.calendar_start = dataset.regions.front().incidence.start();
        m.calendar_end = dataset.regions.front().incidence.end();
    }
    for (const auto& name : dataset.covariate_names) {
        CovariateEntry e;
        e.name = name;
        e.missing_policy = MissingPolicy::fail;
        m.covariates.push_back(std::move(e));
    }
    for (const auto& region : dataset.regions) {
        const std::string stem = file_stem_for(region.name);
        const fs::path inc = "incidence_" + stem + ".csv";
        write_text_file(dir / inc, series_csv(region.incidence));
        m.regions.push_back({region.name, inc, 100000.0});
        for (std::size_t c = 0; c < dataset.covariate_names.size(); ++c) {
            const fs::path cov = "covariate_" + file_stem_for(dataset.covariate_names[c]) + "_" + stem + ".csv";
            write_text_file(dir / cov, series_csv(region.covariates[c]));
            m.covariates[c].region_files[region.name] = cov;
        }
    }
    const fs::path manifest_path = dir / "manifest.json";
    write_text_file(manifest_path, manifest_json(m));
    return manifest_path;
}

TimeSeries running_mean_3(const TimeSeries& anomalies) {
    const Index n = anomalies.size();
    VectorXd out = VectorXd::Constant(n, TimeSeries::missing());
    for (Index k = 1; k + 1 < n; ++k) {
        out[k] = (anomalies[k - 1] + anomalies[k] + anomalies[k + 1]) / 3.0;  // NaN propagates
    }
    return TimeSeries(anomalies.start(), std::move(out));
}

}  // namespace sfcast
