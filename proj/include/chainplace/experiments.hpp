#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "chainplace/rng.hpp"
#include "chainplace/solver.hpp"

namespace chainplace {

/// The standard load sweep: mean (or fixed level) 0..100 percent in steps
/// of 10.
inline std::vector<int> standard_load_levels() {
    std::vector<int> levels;
    for (int l = 0; l <= 100; l += 10) levels.push_back(l);
    return levels;
}

/// How per-entity utilization percentages are drawn. Fixed uses mean_pct
/// as the level for every entity and consumes no randomness; Normal draws
/// one sample per entity; None means zero load.
struct LoadDraw {
    enum class Kind { Fixed, Normal, None };
    Kind kind = Kind::None;
    double mean_pct = 0.0;
    double std_pct = 0.0;

    static LoadDraw fixed(double level_pct) { return {Kind::Fixed, level_pct, 0.0}; }
    static LoadDraw normal(double mean_pct, double std_pct) {
        return {Kind::Normal, mean_pct, std_pct};
    }
    static LoadDraw none() { return {Kind::None, 0.0, 0.0}; }

    /// The same draw with its level/mean replaced by a sweep level.
    LoadDraw at_level(double level_pct) const {
        LoadDraw d = *this;
        if (d.kind != Kind::None) d.mean_pct = level_pct;
        return d;
    }

    void validate() const {
        if (kind != Kind::None && std_pct < 0.0)
            throw std::invalid_argument("load stddev must be >= 0");
    }
};

namespace detail {

inline double draw_pct(const LoadDraw& spec, Rng& rng) {
    double v = 0.0;
    switch (spec.kind) {
    case LoadDraw::Kind::None: return 0.0;
    case LoadDraw::Kind::Fixed: v = spec.mean_pct; break;
    case LoadDraw::Kind::Normal: v = normal_draw(rng, spec.mean_pct, spec.std_pct); break;
    }
    return std::min(100.0, std::max(0.0, v));
}

} // namespace detail

/// Draws one utilization per device, then one per link, in topology index
/// order, clamped to [0,100] percent and stored as fractions. Continues an
/// existing generator so callers can chain further draws reproducibly.
inline LoadState generate_load(const Topology& topo, const LoadDraw& device_spec,
                               const LoadDraw& link_spec, Rng& rng) {
    device_spec.validate();
    link_spec.validate();
    LoadState s;
    s.device_u.reserve(topo.devices().size());
    s.link_u.reserve(topo.links().size());
    for (std::size_t i = 0; i < topo.devices().size(); ++i)
        s.device_u.push_back(detail::draw_pct(device_spec, rng) / 100.0);
    for (std::size_t i = 0; i < topo.links().size(); ++i)
        s.link_u.push_back(detail::draw_pct(link_spec, rng) / 100.0);
    return s;
}

inline LoadState generate_load(const Topology& topo, const LoadDraw& device_spec,
                               const LoadDraw& link_spec, std::uint64_t seed) {
    Rng rng(seed);
    return generate_load(topo, device_spec, link_spec, rng);
}

/// One row of the evaluation protocol: a load recipe, an instance count,
/// and how the begin device is chosen. The device (and link, when normal)
/// levels sweep over load_levels.
struct GroupSpec {
    enum class BeginMode { Fixed, RandomPerRun };

    std::string group_id;
    LoadDraw device_load;
    LoadDraw link_load = LoadDraw::none();
    int instances_per_function = 2;
    BeginMode begin_mode = BeginMode::Fixed;
    DeviceId begin_device = 0;
    bool colocate_all_on_begin = false;
    int runs_per_cell = 40;
    std::vector<int> load_levels = standard_load_levels();

    void validate(const Topology& topo, const DeploymentPlan& plan) const {
        if (group_id.empty()) throw std::invalid_argument("group id must not be empty");
        device_load.validate();
        link_load.validate();
        if (device_load.kind == LoadDraw::Kind::None)
            throw std::invalid_argument("group " + group_id + ": device load kind none");
        if (instances_per_function < 1)
            throw std::invalid_argument("group " + group_id + ": instances per function < 1");
        for (const auto& devs : plan.instances_of)
            if (static_cast<std::size_t>(instances_per_function) > devs.size())
                throw std::invalid_argument("group " + group_id +
                                            ": deployment plan has too few instances");
        if (runs_per_cell < 1)
            throw std::invalid_argument("group " + group_id + ": runs_per_cell < 1");
        if (load_levels.empty())
            throw std::invalid_argument("group " + group_id + ": no load levels");
        for (int l : load_levels)
            if (l < 0 || l > 100)
                throw std::invalid_argument("group " + group_id + ": load level outside [0,100]");
        if (begin_mode == BeginMode::Fixed && !topo.has_device(begin_device))
            throw std::invalid_argument("group " + group_id + ": begin device not in topology");
        if (colocate_all_on_begin) {
            if (begin_mode != BeginMode::Fixed)
                throw std::invalid_argument("group " + group_id +
                                            ": co-location requires a fixed begin device");
            const auto hosts = restrict_plan(plan).devices_hosting_all();
            if (std::find(hosts.begin(), hosts.end(), begin_device) == hosts.end())
                throw std::invalid_argument("group " + group_id + ": begin device " +
                                            std::to_string(begin_device) +
                                            " does not host every function");
        }
    }

    /// The plan actually offered to the solver: the first
    /// instances_per_function entries of each function's instance list.
    DeploymentPlan restrict_plan(const DeploymentPlan& plan) const {
        DeploymentPlan p;
        p.instances_of.reserve(plan.instances_of.size());
        for (const auto& devs : plan.instances_of) {
            const auto k = static_cast<std::size_t>(instances_per_function);
            p.instances_of.emplace_back(devs.begin(), devs.begin() + std::min(k, devs.size()));
        }
        return p;
    }
};

/// Everything recorded about one run: the shared load seed, both optima,
/// and derived comparison fields. Relative differences are present only
/// for Different runs, utilization means only for feasible ones.
struct RunRecord {
    std::string group_id;
    int load_level = 0;
    int run_index = 0;
    std::uint64_t seed = 0;
    DeviceId begin_device = 0;
    PlacementOutcome outcome_overall;
    PlacementOutcome outcome_marginal;
    Category category = Category::Infeasible;
    std::optional<double> reldiff_overall_pct;
    std::optional<double> reldiff_marginal_pct;
    std::optional<double> util_mean_overall;
    std::optional<double> util_mean_marginal;
};

/// Percentage increase of an alternative objective value over the optimal
/// one.
inline double relative_difference(double value_alt, double value_opt) {
    if (value_opt <= 0.0) throw std::domain_error("relative difference needs a positive optimum");
    return 100.0 * (value_alt - value_opt) / value_opt;
}

/// Nearest-rank percentile: the ceil(q/100 * n)-th smallest value.
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty list");
    if (!(q > 0.0 && q <= 100.0)) throw std::invalid_argument("percentile rank outside (0,100]");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(q / 100.0 * static_cast<double>(values.size())));
    rank = std::max<std::size_t>(1, std::min(rank, values.size()));
    return values[rank - 1];
}

namespace detail {

inline RunRecord execute_run(const GroupSpec& spec, const Topology& topo, const PathTable& paths,
                             const ServiceChain& chain, double deadline_ms,
                             const DeploymentPlan& group_plan, MarginalSemantics semantics,
                             std::uint64_t base_seed, int level, int run_index) {
    RunRecord rec;
    rec.group_id = spec.group_id;
    rec.load_level = level;
    rec.run_index = run_index;
    rec.seed = derive_seed(base_seed, spec.group_id, static_cast<std::uint64_t>(level),
                           static_cast<std::uint64_t>(run_index));

    Rng rng(rec.seed);
    const LoadState load = generate_load(topo, spec.device_load.at_level(level),
                                         spec.link_load.at_level(level), rng);
    if (spec.begin_mode == GroupSpec::BeginMode::RandomPerRun)
        rec.begin_device =
            topo.devices()[uniform_index(rng, topo.devices().size())].id;
    else
        rec.begin_device = spec.begin_device;

    Request request;
    request.chain = chain;
    request.begin_device = rec.begin_device;
    request.end_device = rec.begin_device; // the issuer waits for the result
    request.deadline_ms = deadline_ms;

    const InstanceGraph graph(topo, paths, request, group_plan, load, semantics);
    rec.outcome_overall = solve_exact(graph, Objective::Overall);
    rec.outcome_marginal = solve_exact(graph, Objective::Marginal);
    rec.category = categorize(rec.outcome_overall, rec.outcome_marginal);

    if (rec.outcome_overall.status == SolveStatus::Feasible) {
        rec.util_mean_overall =
            mean_chosen_utilization(topo, load, rec.outcome_overall.placement);
        rec.util_mean_marginal =
            mean_chosen_utilization(topo, load, rec.outcome_marginal.placement);
    }
    if (rec.category == Category::Different) {
        rec.reldiff_overall_pct =
            relative_difference(rec.outcome_marginal.evaluation.energy_overall_j,
                                rec.outcome_overall.evaluation.energy_overall_j);
        rec.reldiff_marginal_pct =
            relative_difference(rec.outcome_overall.evaluation.energy_marginal_j,
                                rec.outcome_marginal.evaluation.energy_marginal_j);
    }
    return rec;
}

} // namespace detail

/// Runs a whole group: runs_per_cell seeded runs per load level, both
/// objectives sharing one load draw per run. Records come back ordered by
/// (level, run index) and are bit-identical for any worker count.
inline std::vector<RunRecord> run_group(const GroupSpec& spec, const Topology& topo,
                                        const PathTable& paths, const ServiceChain& chain,
                                        double deadline_ms, const DeploymentPlan& plan,
                                        MarginalSemantics semantics, std::uint64_t base_seed,
                                        unsigned jobs = 1) {
    spec.validate(topo, plan);
    chain.validate();
    const DeploymentPlan group_plan = spec.restrict_plan(plan);
    group_plan.validate(topo, chain.num_functions());

    struct Cell {
        int level;
        int run_index;
    };
    std::vector<Cell> cells;
    for (int level : spec.load_levels)
        for (int r = 0; r < spec.runs_per_cell; ++r) cells.push_back({level, r});

    std::vector<RunRecord> records(cells.size());
    if (jobs == 0) jobs = 1;
    jobs = std::min<unsigned>(jobs, cells.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            try {
                records[i] = detail::execute_run(spec, topo, paths, chain, deadline_ms,
                                                 group_plan, semantics, base_seed,
                                                 cells[i].level, cells[i].run_index);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    if (jobs <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(jobs);
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return records;
}

/// Per-level category counts for one group.
struct CategorizationRow {
    int level = 0;
    int infeasible = 0;
    int same = 0;
    int different = 0;
};

/// Aggregates used by the report writers: per-group categorization and
/// the relative differences of Different runs pooled across all levels.
struct ReportTables {
    std::map<std::string, std::vector<CategorizationRow>> categorization;
    std::map<std::string, std::vector<double>> reldiff_overall;
    std::map<std::string, std::vector<double>> reldiff_marginal;
};

inline ReportTables aggregate(const std::vector<RunRecord>& records) {
    ReportTables t;
    std::map<std::string, std::map<int, CategorizationRow>> cat;
    for (const auto& rec : records) {
        auto& row = cat[rec.group_id][rec.load_level];
        row.level = rec.load_level;
        switch (rec.category) {
        case Category::Infeasible: ++row.infeasible; break;
        case Category::Same: ++row.same; break;
        case Category::Different: ++row.different; break;
        }
        if (rec.category == Category::Different) {
            t.reldiff_overall[rec.group_id].push_back(*rec.reldiff_overall_pct);
            t.reldiff_marginal[rec.group_id].push_back(*rec.reldiff_marginal_pct);
        }
    }
    for (auto& [group, rows] : cat) {
        auto& out = t.categorization[group];
        for (auto& [level, row] : rows) out.push_back(row);
    }
    return t;
}

} // namespace chainplace
