// Result tables, CSV/JSON writers, and the run manifest for the kcsm CLI.
#pragma once

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "kcsm/errors.hpp"
#include "kcsm/version.hpp"

namespace cli {

using Value = std::variant<int64_t, double, std::string, bool>;
using ParamMap = std::map<std::string, std::string>;

struct RunResult {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
    std::string estimator = "exact"; ///< "exact" or "monte_carlo"
    uint64_t samples = 0;            ///< 0 for exact results
};

inline std::string format_real(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::string to_csv_field(const Value& v) {
    if (std::holds_alternative<int64_t>(v)) return std::to_string(std::get<int64_t>(v));
    if (std::holds_alternative<double>(v)) return format_real(std::get<double>(v));
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v) ? "true" : "false";
    return std::get<std::string>(v);
}

inline nlohmann::json to_json_value(const Value& v) {
    if (std::holds_alternative<int64_t>(v)) return std::get<int64_t>(v);
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<bool>(v)) return std::get<bool>(v);
    return std::get<std::string>(v);
}

/// Write results.csv or results.json plus manifest.json into out_dir.
/// Every row carries the seed and estimator provenance columns.
inline void write_outputs(const RunResult& res, const std::string& subcommand,
                          const ParamMap& params, const std::string& out_dir,
                          const std::string& format, uint64_t seed, int threads,
                          double wall_ms) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    RunResult full = res;
    full.columns.insert(full.columns.end(), {"seed", "estimator", "samples"});
    for (auto& row : full.rows) {
        row.emplace_back(static_cast<int64_t>(seed));
        row.emplace_back(res.estimator);
        row.emplace_back(static_cast<int64_t>(res.samples));
    }

    if (format == "csv") {
        std::ofstream out(fs::path(out_dir) / "results.csv", std::ios::binary);
        for (size_t c = 0; c < full.columns.size(); ++c)
            out << (c ? "," : "") << full.columns[c];
        out << "\n";
        for (const auto& row : full.rows) {
            for (size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << to_csv_field(row[c]);
            out << "\n";
        }
    } else if (format == "json") {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& row : full.rows) {
            nlohmann::json obj;
            for (size_t c = 0; c < row.size(); ++c) obj[full.columns[c]] = to_json_value(row[c]);
            arr.push_back(obj);
        }
        std::ofstream out(fs::path(out_dir) / "results.json", std::ios::binary);
        out << arr.dump(2) << "\n";
    } else {
        throw kcsm::ValidationError("unknown output format: " + format);
    }

    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%FT%TZ", std::gmtime(&t));

    nlohmann::json manifest;
    manifest["tool"] = "kcsm";
    manifest["version"] = kcsm::version;
    manifest["subcommand"] = subcommand;
    nlohmann::json jp;
    for (const auto& [k, v] : params) jp[k] = v;
    manifest["params"] = jp;
    manifest["seed"] = seed;
    manifest["threads"] = threads;
    manifest["format"] = format;
    manifest["finished_at"] = stamp;
    manifest["wall_ms"] = wall_ms;
    manifest["results"] = {{"rows", full.rows.size()},
                           {"estimator", res.estimator},
                           {"samples", res.samples}};
    std::ofstream out(fs::path(out_dir) / "manifest.json", std::ios::binary);
    out << manifest.dump(2) << "\n";
}

} // namespace cli
