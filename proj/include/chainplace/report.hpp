#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "chainplace/records.hpp"

namespace chainplace {

/// Per-group metadata carried by an experiment's summary file, enough for
/// the report stage to work from record files alone.
struct GroupMeta {
    std::string group_id;
    int instances_per_function = 2;
    bool begin_random = false;
    bool colocate = false;
    std::string device_kind; // fixed | normal
    double device_std = 0.0;
    std::string link_kind = "none"; // none | fixed | normal
    std::string records_file;
};

/// Recounts categories from parsed record rows, one row per load level.
inline std::vector<CategorizationRow> categorization_from_csv(
    const std::vector<CsvRecord>& records) {
    std::map<int, CategorizationRow> by_level;
    for (const auto& r : records) {
        auto& row = by_level[r.load_level];
        row.level = r.load_level;
        if (r.category == "infeasible") ++row.infeasible;
        else if (r.category == "same") ++row.same;
        else if (r.category == "different") ++row.different;
        else throw ConfigError("unknown category '" + r.category + "' in records");
    }
    std::vector<CategorizationRow> rows;
    rows.reserve(by_level.size());
    for (auto& [level, row] : by_level) rows.push_back(row);
    return rows;
}

inline void write_categorization_csv(std::ostream& out,
                                     const std::vector<CategorizationRow>& rows) {
    out << "level,infeasible,same,different\n";
    for (const auto& r : rows)
        out << r.level << ',' << r.infeasible << ',' << r.same << ',' << r.different << '\n';
}

/// One line of the percentile table: relative differences of
/// Different-category runs pooled across all load levels of the group
/// with the given instance availability. Absent values mean the pool was
/// empty.
struct PercentileRow {
    int availability = 0;
    std::string metric; // overall | marginal
    std::optional<double> p10, p90;
};

/// Whether a group belongs in the percentile table: the normally
/// distributed (std 10) device-load rows without link load or forced
/// co-location, split by begin-device mode.
inline bool percentile_eligible(const GroupMeta& meta, bool random_begin) {
    return meta.device_kind == "normal" && meta.device_std == 10.0 &&
           meta.link_kind == "none" && !meta.colocate && meta.begin_random == random_begin;
}

inline std::vector<PercentileRow> percentile_rows(
    const std::vector<std::pair<GroupMeta, std::vector<CsvRecord>>>& groups, bool random_begin) {
    std::vector<std::pair<GroupMeta, std::vector<CsvRecord>>> eligible;
    for (const auto& g : groups)
        if (percentile_eligible(g.first, random_begin)) eligible.push_back(g);
    std::sort(eligible.begin(), eligible.end(), [](const auto& a, const auto& b) {
        return a.first.instances_per_function < b.first.instances_per_function;
    });

    std::vector<PercentileRow> rows;
    for (const auto& [meta, records] : eligible) {
        std::vector<double> pool_overall, pool_marginal;
        for (const auto& r : records) {
            if (r.category != "different") continue;
            pool_overall.push_back(r.reldiff_overall_pct.value());
            pool_marginal.push_back(r.reldiff_marginal_pct.value());
        }
        for (const char* metric : {"overall", "marginal"}) {
            PercentileRow row;
            row.availability = meta.instances_per_function;
            row.metric = metric;
            const auto& pool =
                std::string(metric) == "overall" ? pool_overall : pool_marginal;
            if (!pool.empty()) {
                row.p10 = percentile(pool, 10.0);
                row.p90 = percentile(pool, 90.0);
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

inline void write_percentiles_csv(std::ostream& out, const std::vector<PercentileRow>& rows) {
    out << "availability,metric,p10,p90\n";
    for (const auto& r : rows)
        out << r.availability << ',' << r.metric << ',' << detail::format_opt(r.p10) << ','
            << detail::format_opt(r.p90) << '\n';
}

/// Per-run mean pre-placement utilization of the chosen devices, the raw
/// data behind the utilization distributions.
inline void write_utilization_csv(std::ostream& out, const std::vector<CsvRecord>& records) {
    out << "level,run_index,util_mean_overall,util_mean_marginal\n";
    for (const auto& r : records)
        out << r.load_level << ',' << r.run_index << ',' << detail::format_opt(r.util_mean_overall)
            << ',' << detail::format_opt(r.util_mean_marginal) << '\n';
}

/// Per-run completion times under both objectives.
inline void write_completion_csv(std::ostream& out, const std::vector<CsvRecord>& records) {
    out << "level,run_index,completion_overall_ms,completion_marginal_ms\n";
    for (const auto& r : records)
        out << r.load_level << ',' << r.run_index << ','
            << detail::format_opt(r.completion_overall_ms) << ','
            << detail::format_opt(r.completion_marginal_ms) << '\n';
}

} // namespace chainplace
