#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "chainplace/errors.hpp"
#include "chainplace/experiments.hpp"

namespace chainplace {

inline constexpr const char* kRecordsVersionLine = "# chainplace-records v1";
inline constexpr const char* kRecordsHeader =
    "group_id,load_level,run_index,seed,begin_device,category,status,"
    "completion_overall_ms,completion_marginal_ms,"
    "e_overall_of_overall_j,e_overall_of_marginal_j,"
    "e_marginal_of_overall_j,e_marginal_of_marginal_j,"
    "reldiff_overall_pct,reldiff_marginal_pct,"
    "util_mean_overall,util_mean_marginal,"
    "solver_ms_overall,solver_ms_marginal";

namespace detail {

/// Shortest round-trip decimal form; locale-independent by construction.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline std::string format_opt(const std::optional<double>& v) {
    return v.has_value() ? format_double(*v) : "NA";
}

inline double parse_double(const std::string& s, const std::string& context) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(context + ": bad number '" + s + "'");
    return v;
}

inline std::optional<double> parse_opt(const std::string& s, const std::string& context) {
    if (s == "NA") return std::nullopt;
    return parse_double(s, context);
}

inline long parse_long(const std::string& s, const std::string& context) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(context + ": bad integer '" + s + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& context) {
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(context + ": bad unsigned integer '" + s + "'");
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

} // namespace detail

inline void write_records_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kRecordsVersionLine << '\n' << kRecordsHeader << '\n';
    for (const auto& r : records) {
        if (r.group_id.find(',') != std::string::npos)
            throw std::invalid_argument("group id must not contain a comma");
        const bool feasible = r.outcome_overall.status == SolveStatus::Feasible;
        auto opt = [&](double v) {
            return feasible ? std::optional<double>(v) : std::nullopt;
        };
        out << r.group_id << ',' << r.load_level << ',' << r.run_index << ',' << r.seed << ','
            << r.begin_device << ',' << to_string(r.category) << ','
            << to_string(r.outcome_overall.status) << ','
            << detail::format_opt(opt(r.outcome_overall.evaluation.completion_ms)) << ','
            << detail::format_opt(opt(r.outcome_marginal.evaluation.completion_ms)) << ','
            << detail::format_opt(opt(r.outcome_overall.evaluation.energy_overall_j)) << ','
            << detail::format_opt(opt(r.outcome_marginal.evaluation.energy_overall_j)) << ','
            << detail::format_opt(opt(r.outcome_overall.evaluation.energy_marginal_j)) << ','
            << detail::format_opt(opt(r.outcome_marginal.evaluation.energy_marginal_j)) << ','
            << detail::format_opt(r.reldiff_overall_pct) << ','
            << detail::format_opt(r.reldiff_marginal_pct) << ','
            << detail::format_opt(r.util_mean_overall) << ','
            << detail::format_opt(r.util_mean_marginal) << ','
            << detail::format_double(r.outcome_overall.solver_time_ms) << ','
            << detail::format_double(r.outcome_marginal.solver_time_ms) << '\n';
    }
}

/// One parsed CSV row; numeric outcome fields are absent for infeasible
/// runs, comparison fields for non-Different ones.
struct CsvRecord {
    std::string group_id;
    int load_level = 0;
    int run_index = 0;
    std::uint64_t seed = 0;
    DeviceId begin_device = 0;
    std::string category;
    std::string status;
    std::optional<double> completion_overall_ms, completion_marginal_ms;
    std::optional<double> e_overall_of_overall_j, e_overall_of_marginal_j;
    std::optional<double> e_marginal_of_overall_j, e_marginal_of_marginal_j;
    std::optional<double> reldiff_overall_pct, reldiff_marginal_pct;
    std::optional<double> util_mean_overall, util_mean_marginal;
    double solver_ms_overall = 0.0, solver_ms_marginal = 0.0;
};

inline std::vector<CsvRecord> read_records_csv(std::istream& in, const std::string& source) {
    std::string line;
    if (!std::getline(in, line))
        throw ConfigError(source + ": empty records file");
    if (line != kRecordsVersionLine)
        throw ConfigError(source + ": unsupported records version '" + line + "'");
    if (!std::getline(in, line) || line != kRecordsHeader)
        throw ConfigError(source + ": records header mismatch");

    std::vector<CsvRecord> rows;
    std::size_t lineno = 2;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const std::string ctx = source + ":" + std::to_string(lineno);
        const auto f = detail::split_csv_line(line);
        if (f.size() != 19)
            throw ConfigError(ctx + ": expected 19 fields, found " + std::to_string(f.size()));
        CsvRecord r;
        r.group_id = f[0];
        r.load_level = static_cast<int>(detail::parse_long(f[1], ctx));
        r.run_index = static_cast<int>(detail::parse_long(f[2], ctx));
        r.seed = detail::parse_u64(f[3], ctx);
        r.begin_device = static_cast<DeviceId>(detail::parse_long(f[4], ctx));
        r.category = f[5];
        r.status = f[6];
        r.completion_overall_ms = detail::parse_opt(f[7], ctx);
        r.completion_marginal_ms = detail::parse_opt(f[8], ctx);
        r.e_overall_of_overall_j = detail::parse_opt(f[9], ctx);
        r.e_overall_of_marginal_j = detail::parse_opt(f[10], ctx);
        r.e_marginal_of_overall_j = detail::parse_opt(f[11], ctx);
        r.e_marginal_of_marginal_j = detail::parse_opt(f[12], ctx);
        r.reldiff_overall_pct = detail::parse_opt(f[13], ctx);
        r.reldiff_marginal_pct = detail::parse_opt(f[14], ctx);
        r.util_mean_overall = detail::parse_opt(f[15], ctx);
        r.util_mean_marginal = detail::parse_opt(f[16], ctx);
        r.solver_ms_overall = detail::parse_double(f[17], ctx);
        r.solver_ms_marginal = detail::parse_double(f[18], ctx);
        rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<CsvRecord> read_records_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open records file " + path);
    return read_records_csv(in, path);
}

} // namespace chainplace
