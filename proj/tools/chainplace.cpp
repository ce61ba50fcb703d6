#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chainplace/config.hpp"
#include "chainplace/records.hpp"
#include "chainplace/report.hpp"
#include "chainplace/validation.hpp"

namespace {

namespace fs = std::filesystem;
using namespace chainplace;

ScenarioConfig load_scenario(const std::string& path) {
    return path.empty() ? default_scenario() : parse_scenario(path);
}

std::vector<GroupSpec> select_groups(const ScenarioConfig& scenario,
                                     const std::vector<std::string>& wanted) {
    if (wanted.empty()) return scenario.groups;
    std::vector<GroupSpec> out;
    for (const std::string& id : wanted) {
        bool found = false;
        for (const auto& g : scenario.groups)
            if (g.group_id == id) {
                out.push_back(g);
                found = true;
                break;
            }
        if (!found) throw ConfigError("scenario defines no group '" + id + "'");
    }
    return out;
}

/// Writes through a temp file so readers never observe partial content.
void write_file_atomic(const fs::path& path, const std::string& content,
                       std::vector<fs::path>& written) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
    written.push_back(path);
}

void remove_outputs(const std::vector<fs::path>& written) {
    std::error_code ec;
    for (const auto& p : written) fs::remove(p, ec);
}

struct SolveArgs {
    std::string scenario;
    std::string objective = "overall";
    std::uint64_t seed = 1;
    int load_level = 50;
    double load_std = 10.0;
    int link_load_level = 0;
    double link_load_std = 0.0;
    int instances = 2;
    std::optional<int> begin;
};

int cmd_solve(const SolveArgs& args) {
    const ScenarioConfig scenario = load_scenario(args.scenario);
    const Objective objective = objective_from_string(args.objective);

    GroupSpec spec;
    spec.group_id = "solve";
    spec.device_load = args.load_std > 0.0 ? LoadDraw::normal(args.load_level, args.load_std)
                                           : LoadDraw::fixed(args.load_level);
    spec.link_load = args.link_load_std > 0.0
                         ? LoadDraw::normal(args.link_load_level, args.link_load_std)
                     : args.link_load_level > 0 ? LoadDraw::fixed(args.link_load_level)
                                                : LoadDraw::none();
    spec.instances_per_function = args.instances;
    spec.begin_device = args.begin.value_or(kDefaultBeginDevice);
    spec.validate(scenario.topology, scenario.plan);

    const PathTable paths(scenario.topology);
    Rng rng(args.seed);
    const LoadState load = generate_load(scenario.topology, spec.device_load, spec.link_load, rng);

    Request request;
    request.chain = scenario.service.chain;
    request.begin_device = spec.begin_device;
    request.end_device = spec.begin_device;
    request.deadline_ms = scenario.service.deadline_ms;

    const InstanceGraph graph(scenario.topology, paths, request,
                              spec.restrict_plan(scenario.plan), load, scenario.semantics);
    const PlacementOutcome outcome = solve_exact(graph, objective);

    std::cout << "status: " << to_string(outcome.status) << '\n'
              << "objective: " << to_string(outcome.objective) << '\n'
              << "seed: " << args.seed << '\n'
              << "begin_device: " << request.begin_device << '\n';
    if (outcome.status == SolveStatus::Feasible) {
        std::cout << "placement:";
        for (DeviceId dev : outcome.placement.device_of) std::cout << ' ' << dev;
        std::cout << '\n'
                  << "completion_ms: " << detail::format_double(outcome.evaluation.completion_ms)
                  << '\n'
                  << "energy_overall_j: "
                  << detail::format_double(outcome.evaluation.energy_overall_j) << '\n'
                  << "energy_marginal_j: "
                  << detail::format_double(outcome.evaluation.energy_marginal_j) << '\n';
    } else {
        std::cout << "cause: " << outcome.evaluation.infeasible_cause << '\n';
    }
    std::cout << "solver_time_ms: " << detail::format_double(outcome.solver_time_ms) << '\n';
    return outcome.status == SolveStatus::Feasible ? 0 : 2;
}

struct ExperimentArgs {
    std::string scenario;
    std::vector<std::string> groups;
    std::string out;
    unsigned jobs = 1;
};

int cmd_experiment(const ExperimentArgs& args) {
    const ScenarioConfig scenario = load_scenario(args.scenario);
    const std::vector<GroupSpec> groups = select_groups(scenario, args.groups);
    const fs::path out_dir = args.out.empty() ? fs::path(scenario.out_dir) : fs::path(args.out);
    fs::create_directories(out_dir);

    const PathTable paths(scenario.topology);
    std::vector<fs::path> written;
    try {
        nlohmann::json summary;
        summary["version"] = 1;
        summary["base_seed"] = scenario.base_seed;
        summary["groups"] = nlohmann::json::array();
        for (const auto& spec : groups) {
            const std::vector<RunRecord> records =
                run_group(spec, scenario.topology, paths, scenario.service.chain,
                          scenario.service.deadline_ms, scenario.plan, scenario.semantics,
                          scenario.base_seed, args.jobs);
            std::ostringstream csv;
            write_records_csv(csv, records);
            const std::string file = "records_" + spec.group_id + ".csv";
            write_file_atomic(out_dir / file, csv.str(), written);

            int infeasible = 0, same = 0, different = 0;
            for (const auto& r : records) {
                if (r.category == Category::Infeasible) ++infeasible;
                else if (r.category == Category::Same) ++same;
                else ++different;
            }
            std::cout << spec.group_id << ": " << records.size() << " runs, " << infeasible
                      << " infeasible, " << same << " same, " << different << " different -> "
                      << (out_dir / file).string() << '\n';

            nlohmann::json meta;
            meta["group_id"] = spec.group_id;
            meta["instances_per_function"] = spec.instances_per_function;
            meta["begin_random"] = spec.begin_mode == GroupSpec::BeginMode::RandomPerRun;
            meta["colocate"] = spec.colocate_all_on_begin;
            meta["device_kind"] =
                spec.device_load.kind == LoadDraw::Kind::Fixed ? "fixed" : "normal";
            meta["device_std"] = spec.device_load.std_pct;
            meta["link_kind"] = spec.link_load.kind == LoadDraw::Kind::None    ? "none"
                                : spec.link_load.kind == LoadDraw::Kind::Fixed ? "fixed"
                                                                               : "normal";
            meta["records_file"] = file;
            meta["runs_per_cell"] = spec.runs_per_cell;
            summary["groups"].push_back(meta);
        }
        write_file_atomic(out_dir / "summary.json", summary.dump(2) + "\n", written);
    } catch (...) {
        remove_outputs(written);
        throw;
    }
    return 0;
}

struct VerifyArgs {
    std::string scenario;
    std::vector<std::string> groups;
    std::uint64_t oracle_cap = kDefaultOracleCap;
    unsigned jobs = 1;
};

int cmd_verify(const VerifyArgs& args) {
    const ScenarioConfig scenario = load_scenario(args.scenario);
    const std::vector<GroupSpec> groups = select_groups(scenario, args.groups);
    const PathTable paths(scenario.topology);

    std::uint64_t solves = 0;
    std::vector<std::string> mismatches;
    for (const auto& spec : groups) {
        spec.validate(scenario.topology, scenario.plan);
        const DeploymentPlan plan = spec.restrict_plan(scenario.plan);

        struct Cell {
            int level;
            int run;
        };
        std::vector<Cell> cells;
        for (int level : spec.load_levels)
            for (int r = 0; r < spec.runs_per_cell; ++r) cells.push_back({level, r});

        std::vector<std::vector<std::string>> cell_mismatches(cells.size());
        std::atomic<std::size_t> next{0};
        std::exception_ptr first_error;
        std::mutex error_mutex;
        auto worker = [&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= cells.size()) return;
                try {
                    const std::uint64_t seed =
                        derive_seed(scenario.base_seed, spec.group_id,
                                    static_cast<std::uint64_t>(cells[i].level),
                                    static_cast<std::uint64_t>(cells[i].run));
                    Rng rng(seed);
                    const LoadState load =
                        generate_load(scenario.topology, spec.device_load.at_level(cells[i].level),
                                      spec.link_load.at_level(cells[i].level), rng);
                    DeviceId begin = spec.begin_device;
                    if (spec.begin_mode == GroupSpec::BeginMode::RandomPerRun)
                        begin = scenario.topology
                                    .devices()[uniform_index(rng, scenario.topology.devices().size())]
                                    .id;
                    Request request;
                    request.chain = scenario.service.chain;
                    request.begin_device = begin;
                    request.end_device = begin;
                    request.deadline_ms = scenario.service.deadline_ms;
                    const InstanceGraph graph(scenario.topology, paths, request, plan, load,
                                              scenario.semantics);
                    for (Objective obj : {Objective::Overall, Objective::Marginal}) {
                        const PlacementOutcome fast = solve_exact(graph, obj);
                        const PlacementOutcome slow =
                            enumerate_oracle(graph, obj, request.deadline_ms, args.oracle_cap);
                        std::ostringstream where;
                        where << spec.group_id << " level " << cells[i].level << " run "
                              << cells[i].run << " " << to_string(obj);
                        if (fast.status != slow.status) {
                            cell_mismatches[i].push_back(where.str() + ": status " +
                                                         to_string(fast.status) + " vs " +
                                                         to_string(slow.status));
                            continue;
                        }
                        if (fast.status == SolveStatus::Infeasible) continue;
                        const double ef = obj == Objective::Overall
                                              ? fast.evaluation.energy_overall_j
                                              : fast.evaluation.energy_marginal_j;
                        const double es = obj == Objective::Overall
                                              ? slow.evaluation.energy_overall_j
                                              : slow.evaluation.energy_marginal_j;
                        if (std::abs(ef - es) > kEnergyTolJ)
                            cell_mismatches[i].push_back(
                                where.str() + ": objective " + detail::format_double(ef) + " vs " +
                                detail::format_double(es));
                        else if (fast.placement.device_of != slow.placement.device_of)
                            cell_mismatches[i].push_back(where.str() + ": placements differ");
                        if (!all_pass(validate_placement(graph, fast)))
                            cell_mismatches[i].push_back(where.str() +
                                                         ": structural constraint violated");
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        };
        unsigned jobs = std::max(1u, args.jobs);
        jobs = std::min<unsigned>(jobs, cells.size());
        if (jobs <= 1) {
            worker();
        } else {
            std::vector<std::thread> pool;
            for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
            for (auto& t : pool) t.join();
        }
        if (first_error) std::rethrow_exception(first_error);
        solves += cells.size() * 2;
        for (auto& ms : cell_mismatches)
            for (auto& m : ms) mismatches.push_back(std::move(m));
    }

    for (const auto& m : mismatches) std::cout << "mismatch: " << m << '\n';
    std::cout << "checked " << solves << " solves, mismatches: " << mismatches.size() << '\n';
    return mismatches.empty() ? 0 : 3;
}

struct ReportArgs {
    std::string records_dir;
    std::string out;
};

int cmd_report(const ReportArgs& args) {
    const fs::path in_dir(args.records_dir);
    const fs::path out_dir = args.out.empty() ? in_dir : fs::path(args.out);
    fs::create_directories(out_dir);

    const fs::path summary_path = in_dir / "summary.json";
    const nlohmann::json summary = cfg::load_json_file(summary_path.string());
    if (!summary.contains("version") || summary["version"] != 1)
        throw ConfigError(summary_path.string() + ": unsupported summary version");

    std::vector<std::pair<GroupMeta, std::vector<CsvRecord>>> groups;
    for (const auto& jm : summary.at("groups")) {
        GroupMeta meta;
        meta.group_id = jm.at("group_id").get<std::string>();
        meta.instances_per_function = jm.at("instances_per_function").get<int>();
        meta.begin_random = jm.at("begin_random").get<bool>();
        meta.colocate = jm.at("colocate").get<bool>();
        meta.device_kind = jm.at("device_kind").get<std::string>();
        meta.device_std = jm.at("device_std").get<double>();
        meta.link_kind = jm.at("link_kind").get<std::string>();
        meta.records_file = jm.at("records_file").get<std::string>();
        groups.emplace_back(meta, read_records_file((in_dir / meta.records_file).string()));
    }

    std::vector<fs::path> written;
    try {
        for (const auto& [meta, records] : groups) {
            {
                std::ostringstream os;
                write_categorization_csv(os, categorization_from_csv(records));
                write_file_atomic(out_dir / ("categorization_" + meta.group_id + ".csv"), os.str(),
                                  written);
            }
            {
                std::ostringstream os;
                write_utilization_csv(os, records);
                write_file_atomic(out_dir / ("utilization_" + meta.group_id + ".csv"), os.str(),
                                  written);
            }
            {
                std::ostringstream os;
                write_completion_csv(os, records);
                write_file_atomic(out_dir / ("completion_" + meta.group_id + ".csv"), os.str(),
                                  written);
            }
        }
        {
            std::ostringstream os;
            write_percentiles_csv(os, percentile_rows(groups, false));
            write_file_atomic(out_dir / "percentiles.csv", os.str(), written);
        }
        {
            std::ostringstream os;
            write_percentiles_csv(os, percentile_rows(groups, true));
            write_file_atomic(out_dir / "percentiles_random.csv", os.str(), written);
        }
    } catch (...) {
        remove_outputs(written);
        throw;
    }
    std::cout << "wrote " << written.size() << " report files to " << out_dir.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-centric placement of microservice chains on edge devices"};
    app.require_subcommand(1);

    SolveArgs solve_args;
    CLI::App* solve = app.add_subcommand("solve", "Place one request under a drawn load");
    solve->add_option("--scenario", solve_args.scenario, "Scenario JSON (defaults to built-ins)");
    solve->add_option("--objective", solve_args.objective, "overall|marginal")
        ->check(CLI::IsMember({"overall", "marginal"}));
    solve->add_option("--seed", solve_args.seed, "Load draw seed");
    solve->add_option("--load-level", solve_args.load_level, "Device load mean/level in percent")
        ->check(CLI::Range(0, 100));
    solve->add_option("--load-std", solve_args.load_std,
                      "Device load stddev in percent (0 fixes the level)");
    solve->add_option("--link-load-level", solve_args.link_load_level,
                      "Link load mean/level in percent")
        ->check(CLI::Range(0, 100));
    solve->add_option("--link-load-std", solve_args.link_load_std, "Link load stddev in percent");
    solve->add_option("--instances", solve_args.instances, "Instances per function")
        ->check(CLI::Range(1, 6));
    solve->add_option("--begin", solve_args.begin, "Begin device id");

    ExperimentArgs exp_args;
    CLI::App* experiment = app.add_subcommand("experiment", "Run groups and write record CSVs");
    experiment->add_option("--scenario", exp_args.scenario, "Scenario JSON (defaults to built-ins)");
    experiment->add_option("--group", exp_args.groups, "Group id (repeatable; default all)");
    experiment->add_option("--out", exp_args.out, "Output directory (default scenario out_dir)");
    experiment->add_option("--jobs", exp_args.jobs, "Worker threads")->check(CLI::Range(1, 256));

    VerifyArgs verify_args;
    CLI::App* verify = app.add_subcommand("verify", "Cross-check every solve against enumeration");
    verify->add_option("--scenario", verify_args.scenario, "Scenario JSON (defaults to built-ins)");
    verify->add_option("--group", verify_args.groups, "Group id (repeatable; default all)");
    verify->add_option("--oracle-cap", verify_args.oracle_cap, "Max combinations per enumeration");
    verify->add_option("--jobs", verify_args.jobs, "Worker threads")->check(CLI::Range(1, 256));

    ReportArgs report_args;
    CLI::App* report = app.add_subcommand("report", "Aggregate record CSVs into table data");
    report->add_option("--records", report_args.records_dir, "Directory with summary.json")
        ->required();
    report->add_option("--out", report_args.out, "Output directory (default records dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*solve) return cmd_solve(solve_args);
        if (*experiment) return cmd_experiment(exp_args);
        if (*verify) return cmd_verify(verify_args);
        if (*report) return cmd_report(report_args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
