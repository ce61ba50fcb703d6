#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "chainplace/errors.hpp"
#include "chainplace/experiments.hpp"

namespace chainplace {

namespace cfg {

using nlohmann::json;

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(path + "." + key + ": missing");
    return *it;
}

inline void check_keys(const json& obj, const std::set<std::string>& allowed,
                       const std::string& path) {
    if (!obj.is_object()) throw ConfigError(path + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (allowed.count(it.key()) == 0)
            throw ConfigError(path + "." + it.key() + ": unknown key");
}

inline double get_number(const json& v, const std::string& path) {
    if (!v.is_number()) throw ConfigError(path + ": expected a number");
    return v.get<double>();
}

inline int get_int(const json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ConfigError(path + ": expected an integer");
    return v.get<int>();
}

inline std::uint64_t get_u64(const json& v, const std::string& path) {
    if (!v.is_number_unsigned() && !v.is_number_integer())
        throw ConfigError(path + ": expected a non-negative integer");
    const auto i = v.get<std::int64_t>();
    if (v.is_number_integer() && i < 0)
        throw ConfigError(path + ": expected a non-negative integer");
    return v.get<std::uint64_t>();
}

inline std::string get_string(const json& v, const std::string& path) {
    if (!v.is_string()) throw ConfigError(path + ": expected a string");
    return v.get<std::string>();
}

inline bool get_bool(const json& v, const std::string& path) {
    if (!v.is_boolean()) throw ConfigError(path + ": expected a boolean");
    return v.get<bool>();
}

} // namespace cfg

/// The service description plus the request deadline it is served under.
struct ServiceSpec {
    ServiceChain chain;
    double deadline_ms = 100.0;
};

inline Topology parse_topology(const cfg::json& j, const std::string& path = "topology") {
    using namespace cfg;
    check_keys(j, {"delay_ms_per_km", "delay_scale", "device_defaults", "devices",
                   "link_defaults", "links"}, path);

    double ms_per_km = 0.0004;
    if (j.contains("delay_ms_per_km"))
        ms_per_km = get_number(j["delay_ms_per_km"], path + ".delay_ms_per_km");
    double delay_scale = 1.0;
    if (j.contains("delay_scale")) delay_scale = get_number(j["delay_scale"], path + ".delay_scale");
    if (ms_per_km <= 0.0 || delay_scale <= 0.0)
        throw ConfigError(path + ": delay scaling must be positive");

    double def_capacity = 0.0, def_idle = 0.0, def_full = 0.0;
    int def_cores = 0;
    bool have_dev_defaults = j.contains("device_defaults");
    if (have_dev_defaults) {
        const auto& d = j["device_defaults"];
        const std::string p = path + ".device_defaults";
        check_keys(d, {"compute_capacity_mi_ms", "cores", "idle_w", "dynamic_full_load_w"}, p);
        def_capacity = get_number(require(d, "compute_capacity_mi_ms", p), p + ".compute_capacity_mi_ms");
        def_cores = get_int(require(d, "cores", p), p + ".cores");
        def_idle = get_number(require(d, "idle_w", p), p + ".idle_w");
        def_full = get_number(require(d, "dynamic_full_load_w", p), p + ".dynamic_full_load_w");
    }

    const auto& jdevices = require(j, "devices", path);
    if (!jdevices.is_array() || jdevices.empty())
        throw ConfigError(path + ".devices: expected a non-empty array");
    std::vector<EdgeDevice> devices;
    for (std::size_t i = 0; i < jdevices.size(); ++i) {
        const std::string p = path + ".devices[" + std::to_string(i) + "]";
        const auto& jd = jdevices[i];
        check_keys(jd, {"id", "name", "compute_capacity_mi_ms", "cores", "idle_w",
                        "dynamic_full_load_w", "dynamic_breakpoints_w"}, p);
        EdgeDevice d;
        d.id = get_int(require(jd, "id", p), p + ".id");
        auto field = [&](const char* key, double def, bool have_def) {
            if (jd.contains(key)) return get_number(jd[key], p + "." + key);
            if (!have_def) throw ConfigError(p + "." + key + ": missing and no device_defaults");
            return def;
        };
        d.compute_capacity_mi_ms =
            field("compute_capacity_mi_ms", def_capacity, have_dev_defaults);
        d.cores = jd.contains("cores") ? get_int(jd["cores"], p + ".cores")
                  : have_dev_defaults ? def_cores
                                      : throw ConfigError(p + ".cores: missing and no device_defaults");
        const double idle = field("idle_w", def_idle, have_dev_defaults);
        if (jd.contains("dynamic_breakpoints_w")) {
            const auto& bp = jd["dynamic_breakpoints_w"];
            if (!bp.is_array())
                throw ConfigError(p + ".dynamic_breakpoints_w: expected an array");
            d.power.idle_w = idle;
            for (std::size_t k = 0; k < bp.size(); ++k)
                d.power.dyn_breakpoints_w.push_back(
                    get_number(bp[k], p + ".dynamic_breakpoints_w[" + std::to_string(k) + "]"));
        } else {
            const double full = field("dynamic_full_load_w", def_full, have_dev_defaults);
            d.power = DevicePowerProfile::linear(idle, full, d.cores);
        }
        devices.push_back(std::move(d));
    }

    double def_bw = 0.0, def_link_idle = 0.0, def_link_dyn = 0.0;
    bool have_link_defaults = j.contains("link_defaults");
    if (have_link_defaults) {
        const auto& d = j["link_defaults"];
        const std::string p = path + ".link_defaults";
        check_keys(d, {"bandwidth_mb_ms", "idle_w", "dynamic_w"}, p);
        def_bw = get_number(require(d, "bandwidth_mb_ms", p), p + ".bandwidth_mb_ms");
        def_link_idle = get_number(require(d, "idle_w", p), p + ".idle_w");
        def_link_dyn = get_number(require(d, "dynamic_w", p), p + ".dynamic_w");
    }

    const auto& jlinks = require(j, "links", path);
    if (!jlinks.is_array()) throw ConfigError(path + ".links: expected an array");
    std::vector<NetworkLink> links;
    for (std::size_t i = 0; i < jlinks.size(); ++i) {
        const std::string p = path + ".links[" + std::to_string(i) + "]";
        const auto& jl = jlinks[i];
        check_keys(jl, {"a", "b", "distance_km", "propagation_delay_ms", "bandwidth_mb_ms",
                        "idle_w", "dynamic_w"}, p);
        NetworkLink l;
        l.a = get_int(require(jl, "a", p), p + ".a");
        l.b = get_int(require(jl, "b", p), p + ".b");
        if (jl.contains("propagation_delay_ms"))
            l.propagation_delay_ms = get_number(jl["propagation_delay_ms"], p + ".propagation_delay_ms");
        else if (jl.contains("distance_km"))
            l.propagation_delay_ms =
                get_number(jl["distance_km"], p + ".distance_km") * ms_per_km * delay_scale;
        else
            throw ConfigError(p + ": needs distance_km or propagation_delay_ms");
        auto field = [&](const char* key, double def) {
            if (jl.contains(key)) return get_number(jl[key], p + "." + key);
            if (!have_link_defaults) throw ConfigError(p + "." + key + ": missing and no link_defaults");
            return def;
        };
        l.bandwidth_mb_ms = field("bandwidth_mb_ms", def_bw);
        l.idle_w = field("idle_w", def_link_idle);
        l.dyn_w = field("dynamic_w", def_link_dyn);
        links.push_back(l);
    }

    try {
        return Topology(std::move(devices), std::move(links));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

inline ServiceSpec parse_service(const cfg::json& j, const std::string& path = "service") {
    using namespace cfg;
    check_keys(j, {"deadline_ms", "functions_mi", "dataflows_mb"}, path);
    ServiceSpec s;
    if (j.contains("deadline_ms")) s.deadline_ms = get_number(j["deadline_ms"], path + ".deadline_ms");
    const auto& jf = require(j, "functions_mi", path);
    if (!jf.is_array()) throw ConfigError(path + ".functions_mi: expected an array");
    for (std::size_t i = 0; i < jf.size(); ++i)
        s.chain.function_size_mi.push_back(
            get_number(jf[i], path + ".functions_mi[" + std::to_string(i) + "]"));
    const auto& jd = require(j, "dataflows_mb", path);
    if (!jd.is_array()) throw ConfigError(path + ".dataflows_mb: expected an array");
    for (std::size_t i = 0; i < jd.size(); ++i)
        s.chain.dataflow_mb.push_back(
            get_number(jd[i], path + ".dataflows_mb[" + std::to_string(i) + "]"));
    try {
        s.chain.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    if (s.deadline_ms <= 0.0) throw ConfigError(path + ".deadline_ms: must be > 0");
    return s;
}

inline DeploymentPlan parse_plan(const cfg::json& j, const std::string& path = "plan") {
    using namespace cfg;
    check_keys(j, {"instances"}, path);
    const auto& ji = require(j, "instances", path);
    if (!ji.is_array()) throw ConfigError(path + ".instances: expected an array of arrays");
    DeploymentPlan plan;
    for (std::size_t f = 0; f < ji.size(); ++f) {
        const std::string p = path + ".instances[" + std::to_string(f) + "]";
        if (!ji[f].is_array()) throw ConfigError(p + ": expected an array of device ids");
        std::vector<DeviceId> devs;
        for (std::size_t k = 0; k < ji[f].size(); ++k)
            devs.push_back(get_int(ji[f][k], p + "[" + std::to_string(k) + "]"));
        plan.instances_of.push_back(std::move(devs));
    }
    return plan;
}

inline LoadDraw parse_load_draw(const cfg::json& j, const std::string& path) {
    using namespace cfg;
    check_keys(j, {"kind", "level", "std"}, path);
    const std::string kind = get_string(require(j, "kind", path), path + ".kind");
    if (kind == "none") return LoadDraw::none();
    if (kind == "fixed") {
        double level = 0.0;
        if (j.contains("level")) level = get_number(j["level"], path + ".level");
        return LoadDraw::fixed(level);
    }
    if (kind == "normal") {
        const double std_pct = get_number(require(j, "std", path), path + ".std");
        double mean = 0.0;
        if (j.contains("level")) mean = get_number(j["level"], path + ".level");
        return LoadDraw::normal(mean, std_pct);
    }
    throw ConfigError(path + ".kind: expected none|fixed|normal, found '" + kind + "'");
}

inline GroupSpec parse_group(const cfg::json& j, const std::string& path) {
    using namespace cfg;
    check_keys(j, {"id", "device_load", "link_load", "instances_per_function", "begin",
                   "colocate_all_on_begin", "runs_per_cell", "load_levels"}, path);
    GroupSpec g;
    g.group_id = get_string(require(j, "id", path), path + ".id");
    g.device_load = parse_load_draw(require(j, "device_load", path), path + ".device_load");
    if (j.contains("link_load"))
        g.link_load = parse_load_draw(j["link_load"], path + ".link_load");
    if (j.contains("instances_per_function"))
        g.instances_per_function =
            get_int(j["instances_per_function"], path + ".instances_per_function");
    const auto& jb = require(j, "begin", path);
    const std::string pb = path + ".begin";
    check_keys(jb, {"mode", "device"}, pb);
    const std::string mode = get_string(require(jb, "mode", pb), pb + ".mode");
    if (mode == "fixed") {
        g.begin_mode = GroupSpec::BeginMode::Fixed;
        g.begin_device = get_int(require(jb, "device", pb), pb + ".device");
    } else if (mode == "random") {
        g.begin_mode = GroupSpec::BeginMode::RandomPerRun;
    } else {
        throw ConfigError(pb + ".mode: expected fixed|random, found '" + mode + "'");
    }
    if (j.contains("colocate_all_on_begin"))
        g.colocate_all_on_begin = get_bool(j["colocate_all_on_begin"], path + ".colocate_all_on_begin");
    if (j.contains("runs_per_cell"))
        g.runs_per_cell = get_int(j["runs_per_cell"], path + ".runs_per_cell");
    if (j.contains("load_levels")) {
        const auto& jl = j["load_levels"];
        if (!jl.is_array() || jl.empty())
            throw ConfigError(path + ".load_levels: expected a non-empty array");
        g.load_levels.clear();
        for (std::size_t i = 0; i < jl.size(); ++i)
            g.load_levels.push_back(get_int(jl[i], path + ".load_levels[" + std::to_string(i) + "]"));
    }
    return g;
}

/// Built-in twins of the bundled config files. The bundled JSON and these
/// functions must stay in lockstep; tests compare them field by field.

/// Abilene-shaped topology: 11 devices, 14 links, homogeneous hardware.
/// Distances are scaled so every propagation delay is sub-millisecond,
/// fitting devices spread across one city neighborhood.
inline Topology default_topology() {
    const double capacity = 500.0;
    const int cores = 16;
    const double idle_w = 98.0;
    const double full_w = 143.0;
    std::vector<EdgeDevice> devices;
    for (int id = 1; id <= 11; ++id) {
        EdgeDevice d;
        d.id = id;
        d.compute_capacity_mi_ms = capacity;
        d.cores = cores;
        d.power = DevicePowerProfile::linear(idle_w, full_w, cores);
        devices.push_back(std::move(d));
    }
    const double ms_per_km = 0.0004;
    struct Row {
        int a, b;
        double km;
    };
    const Row rows[] = {{1, 2, 1090}, {1, 4, 1640}, {2, 3, 500},  {2, 4, 1530}, {3, 6, 2200},
                        {4, 5, 890},  {5, 6, 1170}, {5, 8, 720},  {6, 9, 1130}, {7, 8, 265},
                        {7, 11, 1150}, {8, 9, 690}, {9, 10, 870}, {10, 11, 330}};
    std::vector<NetworkLink> links;
    for (const Row& r : rows) {
        NetworkLink l;
        l.a = r.a;
        l.b = r.b;
        l.propagation_delay_ms = r.km * ms_per_km;
        l.bandwidth_mb_ms = 500.0;
        l.idle_w = 1.0;
        l.dyn_w = 9.0;
        links.push_back(l);
    }
    return Topology(std::move(devices), std::move(links));
}

/// Four-function chain with symmetric dataflows and a 100 ms deadline.
inline ServiceSpec default_service() {
    ServiceSpec s;
    s.deadline_ms = 100.0;
    s.chain.function_size_mi = {20.0, 200.0, 200.0, 20.0};
    s.chain.dataflow_mb = {250.0, 500.0, 750.0, 500.0, 250.0};
    return s;
}

/// Instance locations per function, in availability order: the first two
/// devices are the 2-instance tier, the first four the 4-instance tier,
/// all six the 6-instance tier. The 2-instance tiers are disjoint across
/// functions; device 7 hosts every function in the 6-instance tier and
/// device 4 hosts none, so the default begin device stays instance-free.
inline DeploymentPlan default_plan() {
    DeploymentPlan p;
    p.instances_of = {
        {1, 2, 3, 6, 7, 11},
        {3, 5, 8, 9, 7, 1},
        {6, 8, 10, 2, 7, 9},
        {9, 10, 11, 5, 7, 3},
    };
    return p;
}

inline constexpr DeviceId kDefaultBeginDevice = 4;
inline constexpr DeviceId kColocationBeginDevice = 7;

/// The twelve evaluation groups: load recipes, instance availability and
/// begin-device policy.
inline std::vector<GroupSpec> default_groups() {
    std::vector<GroupSpec> gs;
    auto base = [] {
        GroupSpec g;
        g.device_load = LoadDraw::normal(0.0, 10.0);
        g.link_load = LoadDraw::none();
        g.instances_per_function = 2;
        g.begin_mode = GroupSpec::BeginMode::Fixed;
        g.begin_device = kDefaultBeginDevice;
        g.runs_per_cell = 40;
        return g;
    };

    GroupSpec g1 = base();
    g1.group_id = "g1";
    g1.link_load = LoadDraw::normal(0.0, 10.0);
    gs.push_back(g1);

    GroupSpec g2 = base();
    g2.group_id = "g2";
    gs.push_back(g2);

    GroupSpec g3 = base();
    g3.group_id = "g3";
    g3.device_load = LoadDraw::fixed(0.0);
    gs.push_back(g3);

    GroupSpec g4 = base();
    g4.group_id = "g4";
    g4.device_load = LoadDraw::normal(0.0, 30.0);
    gs.push_back(g4);

    GroupSpec g5 = base();
    g5.group_id = "g5";
    g5.instances_per_function = 4;
    gs.push_back(g5);

    GroupSpec g6 = base();
    g6.group_id = "g6";
    g6.instances_per_function = 6;
    gs.push_back(g6);

    GroupSpec g7 = base();
    g7.group_id = "g7";
    g7.instances_per_function = 6;
    g7.begin_device = kColocationBeginDevice;
    g7.colocate_all_on_begin = true;
    gs.push_back(g7);

    GroupSpec g8 = base();
    g8.group_id = "g8";
    g8.device_load = LoadDraw::fixed(0.0);
    g8.begin_mode = GroupSpec::BeginMode::RandomPerRun;
    gs.push_back(g8);

    GroupSpec g9 = base();
    g9.group_id = "g9";
    g9.begin_mode = GroupSpec::BeginMode::RandomPerRun;
    gs.push_back(g9);

    GroupSpec g10 = base();
    g10.group_id = "g10";
    g10.device_load = LoadDraw::normal(0.0, 30.0);
    g10.begin_mode = GroupSpec::BeginMode::RandomPerRun;
    gs.push_back(g10);

    GroupSpec g11 = base();
    g11.group_id = "g11";
    g11.instances_per_function = 4;
    g11.begin_mode = GroupSpec::BeginMode::RandomPerRun;
    gs.push_back(g11);

    GroupSpec g12 = base();
    g12.group_id = "g12";
    g12.instances_per_function = 6;
    g12.begin_mode = GroupSpec::BeginMode::RandomPerRun;
    gs.push_back(g12);

    return gs;
}

/// Default seed for the bundled scenario. The shipped reports and the
/// statistical regression checks are tied to this exact value; change it
/// only together with them.
inline std::uint64_t default_base_seed() { return 987180; }

/// A full experiment description: the physical model, workload, groups
/// and reproducibility seed.
struct ScenarioConfig {
    Topology topology;
    ServiceSpec service;
    DeploymentPlan plan;
    MarginalSemantics semantics = MarginalSemantics::PowerIncrement;
    std::vector<GroupSpec> groups;
    std::uint64_t base_seed = 0;
    std::string out_dir = "out";

    void cross_validate() const {
        try {
            plan.validate(topology, service.chain.num_functions());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("plan: ") + e.what());
        }
        for (const auto& g : groups) {
            try {
                g.validate(topology, plan);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(std::string("groups: ") + e.what());
            }
        }
    }
};

inline ScenarioConfig default_scenario() {
    ScenarioConfig s{default_topology(), default_service(), default_plan(),
                     MarginalSemantics::PowerIncrement, default_groups(),
                     default_base_seed(), "out"};
    s.cross_validate();
    return s;
}

inline ScenarioConfig parse_scenario(const std::string& scenario_path) {
    using namespace cfg;
    const json j = load_json_file(scenario_path);
    const std::string path = "scenario";
    check_keys(j, {"topology", "service", "plan", "marginal_semantics", "groups", "base_seed",
                   "out_dir"}, path);

    const auto dir = std::filesystem::path(scenario_path).parent_path();
    auto resolve = [&](const std::string& ref) {
        const std::filesystem::path p(ref);
        return p.is_absolute() ? p.string() : (dir / p).string();
    };

    ScenarioConfig s{
        j.contains("topology")
            ? parse_topology(load_json_file(resolve(get_string(j["topology"], path + ".topology"))))
            : default_topology(),
        j.contains("service")
            ? parse_service(load_json_file(resolve(get_string(j["service"], path + ".service"))))
            : default_service(),
        j.contains("plan")
            ? parse_plan(load_json_file(resolve(get_string(j["plan"], path + ".plan"))))
            : default_plan(),
        MarginalSemantics::PowerIncrement,
        {},
        default_base_seed(),
        "out"};

    if (j.contains("marginal_semantics")) {
        const std::string m = get_string(j["marginal_semantics"], path + ".marginal_semantics");
        if (m == "increment") s.semantics = MarginalSemantics::PowerIncrement;
        else if (m == "literal-delta") s.semantics = MarginalSemantics::LiteralDelta;
        else throw ConfigError(path + ".marginal_semantics: expected increment|literal-delta");
    }
    if (j.contains("base_seed")) s.base_seed = get_u64(j["base_seed"], path + ".base_seed");
    if (j.contains("out_dir")) s.out_dir = get_string(j["out_dir"], path + ".out_dir");

    if (j.contains("groups")) {
        const auto& jg = j["groups"];
        if (!jg.is_array() || jg.empty())
            throw ConfigError(path + ".groups: expected a non-empty array");
        for (std::size_t i = 0; i < jg.size(); ++i)
            s.groups.push_back(parse_group(jg[i], path + ".groups[" + std::to_string(i) + "]"));
    } else {
        s.groups = default_groups();
    }

    s.cross_validate();
    return s;
}

} // namespace chainplace
