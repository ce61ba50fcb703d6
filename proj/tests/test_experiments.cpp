#include "catch_amalgamated.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "chainplace/config.hpp"
#include "chainplace/experiments.hpp"

using namespace chainplace;
using Catch::Approx;

namespace {

struct Scenario {
    Topology topo = default_topology();
    PathTable paths{topo};
    ServiceChain chain = default_service().chain;
    DeploymentPlan plan = default_plan();
};

GroupSpec small_group(std::string id) {
    GroupSpec g;
    g.group_id = std::move(id);
    g.device_load = LoadDraw::normal(0.0, 10.0);
    g.link_load = LoadDraw::none();
    g.instances_per_function = 2;
    g.begin_mode = GroupSpec::BeginMode::Fixed;
    g.begin_device = 4;
    g.runs_per_cell = 3;
    g.load_levels = {0, 50};
    return g;
}

bool equal_ignoring_timing(const RunRecord& a, const RunRecord& b) {
    return a.group_id == b.group_id && a.load_level == b.load_level &&
           a.run_index == b.run_index && a.seed == b.seed && a.begin_device == b.begin_device &&
           a.category == b.category &&
           a.outcome_overall.status == b.outcome_overall.status &&
           a.outcome_overall.placement.device_of == b.outcome_overall.placement.device_of &&
           a.outcome_marginal.placement.device_of == b.outcome_marginal.placement.device_of &&
           a.outcome_overall.evaluation.energy_overall_j ==
               b.outcome_overall.evaluation.energy_overall_j &&
           a.outcome_marginal.evaluation.energy_marginal_j ==
               b.outcome_marginal.evaluation.energy_marginal_j &&
           a.reldiff_overall_pct == b.reldiff_overall_pct &&
           a.reldiff_marginal_pct == b.reldiff_marginal_pct &&
           a.util_mean_overall == b.util_mean_overall &&
           a.util_mean_marginal == b.util_mean_marginal;
}

} // namespace

TEST_CASE("standard load sweep") {
    CHECK(standard_load_levels() == std::vector<int>{0, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100});
}

TEST_CASE("seed derivation is stable and collision-averse") {
    // Frozen regression values; changing the derivation silently would
    // invalidate every shipped record file.
    CHECK(derive_seed(987180, "g3", 0, 0) == 10547155258524665068ull);
    CHECK(derive_seed(987180, "g1", 50, 7) == 5418276202226049798ull);
    CHECK(derive_seed(1, "x", 0, 0) == 11592678889400161753ull);

    std::set<std::uint64_t> seen;
    for (const char* group : {"g1", "g2", "g10"})
        for (int level = 0; level <= 100; level += 10)
            for (int run = 0; run < 40; ++run)
                seen.insert(derive_seed(987180, group, level, run));
    CHECK(seen.size() == 3u * 11u * 40u);
}

TEST_CASE("load generation") {
    const Topology topo = default_topology();

    SECTION("fixed level applies everywhere without consuming randomness") {
        Rng rng(1);
        const auto before = rng;
        const LoadState s = generate_load(topo, LoadDraw::fixed(50.0), LoadDraw::fixed(20.0), rng);
        CHECK(std::all_of(s.device_u.begin(), s.device_u.end(),
                          [](double u) { return u == 0.5; }));
        CHECK(std::all_of(s.link_u.begin(), s.link_u.end(), [](double u) { return u == 0.2; }));
        CHECK(rng == before);
    }
    SECTION("fixed zero means everything idle") {
        const LoadState s = generate_load(topo, LoadDraw::fixed(0.0), LoadDraw::none(), 7);
        CHECK(std::all_of(s.device_u.begin(), s.device_u.end(),
                          [](double u) { return u == 0.0; }));
    }
    SECTION("out-of-range levels clamp to full load") {
        const LoadState fixed = generate_load(topo, LoadDraw::fixed(110.0), LoadDraw::none(), 7);
        CHECK(std::all_of(fixed.device_u.begin(), fixed.device_u.end(),
                          [](double u) { return u == 1.0; }));
        const LoadState normal =
            generate_load(topo, LoadDraw::normal(110.0, 0.0), LoadDraw::none(), 7);
        CHECK(std::all_of(normal.device_u.begin(), normal.device_u.end(),
                          [](double u) { return u == 1.0; }));
    }
    SECTION("identical seeds give bit-identical states") {
        const LoadState a =
            generate_load(topo, LoadDraw::normal(50.0, 10.0), LoadDraw::normal(50.0, 10.0), 42);
        const LoadState b =
            generate_load(topo, LoadDraw::normal(50.0, 10.0), LoadDraw::normal(50.0, 10.0), 42);
        CHECK(a.device_u == b.device_u);
        CHECK(a.link_u == b.link_u);
        const LoadState c =
            generate_load(topo, LoadDraw::normal(50.0, 10.0), LoadDraw::normal(50.0, 10.0), 43);
        CHECK(a.device_u != c.device_u);
    }
    SECTION("draws stay inside the unit interval and validate") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            const LoadState s =
                generate_load(topo, LoadDraw::normal(95.0, 40.0), LoadDraw::normal(5.0, 40.0), seed);
            CHECK_NOTHROW(s.validate(topo));
        }
    }
    SECTION("devices draw before links in index order") {
        const LoadState s =
            generate_load(topo, LoadDraw::normal(50.0, 10.0), LoadDraw::normal(30.0, 5.0), 42);
        Rng rng(42);
        for (std::size_t i = 0; i < topo.devices().size(); ++i) {
            const double expect =
                std::min(100.0, std::max(0.0, normal_draw(rng, 50.0, 10.0))) / 100.0;
            CHECK(s.device_u[i] == expect);
        }
        for (std::size_t i = 0; i < topo.links().size(); ++i) {
            const double expect =
                std::min(100.0, std::max(0.0, normal_draw(rng, 30.0, 5.0))) / 100.0;
            CHECK(s.link_u[i] == expect);
        }
    }
    SECTION("frozen spot value under the bundled seed") {
        const LoadState s = generate_load(topo, LoadDraw::normal(50.0, 10.0), LoadDraw::none(),
                                          derive_seed(987180, "g2", 50, 0));
        CHECK(s.device_u[0] == Approx(0.49555512643439065).margin(1e-15));
    }
    SECTION("negative stddev is rejected") {
        Rng rng(1);
        CHECK_THROWS_AS(generate_load(topo, LoadDraw::normal(50.0, -1.0), LoadDraw::none(), rng),
                        std::invalid_argument);
    }
}

TEST_CASE("relative difference in percent") {
    CHECK(relative_difference(2289.0, 2240.0) == Approx(2.1875).margin(1e-12));
    CHECK(relative_difference(906.0, 850.0) == Approx(6.588235294117647).margin(1e-9));
    CHECK(relative_difference(5.0, 5.0) == 0.0);
    CHECK_THROWS_AS(relative_difference(1.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(relative_difference(1.0, -2.0), std::domain_error);
}

TEST_CASE("nearest-rank percentile") {
    const std::vector<double> decades = {10, 20, 30, 40, 50, 60, 70, 80, 90, 100};

    CHECK(percentile({5.0}, 10.0) == 5.0);
    CHECK(percentile({5.0}, 90.0) == 5.0);
    CHECK(percentile(decades, 90.0) == 90.0);
    CHECK(percentile(decades, 10.0) == 10.0);
    CHECK(percentile(decades, 100.0) == 100.0);
    CHECK(percentile(decades, 0.1) == 10.0);

    std::vector<double> shuffled = decades;
    std::shuffle(shuffled.begin(), shuffled.end(), std::mt19937(99));
    CHECK(percentile(shuffled, 90.0) == 90.0);

    CHECK_THROWS_AS(percentile({}, 50.0), std::invalid_argument);
    CHECK_THROWS_AS(percentile({1.0}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(percentile({1.0}, 100.5), std::invalid_argument);
}

TEST_CASE("group spec validation") {
    const Topology topo = default_topology();
    const DeploymentPlan plan = default_plan();
    GroupSpec g = small_group("g");
    CHECK_NOTHROW(g.validate(topo, plan));

    SECTION("instance demand beyond the plan") {
        g.instances_per_function = 7;
        CHECK_THROWS_AS(g.validate(topo, plan), std::invalid_argument);
    }
    SECTION("unknown begin device") {
        g.begin_device = 99;
        CHECK_THROWS_AS(g.validate(topo, plan), std::invalid_argument);
    }
    SECTION("device load may not be none") {
        g.device_load = LoadDraw::none();
        CHECK_THROWS_AS(g.validate(topo, plan), std::invalid_argument);
    }
    SECTION("levels outside the sweep range") {
        g.load_levels = {0, 101};
        CHECK_THROWS_AS(g.validate(topo, plan), std::invalid_argument);
    }
    SECTION("co-location needs a begin device hosting every function") {
        g.instances_per_function = 6;
        g.colocate_all_on_begin = true;
        g.begin_device = 4;
        CHECK_THROWS_AS(g.validate(topo, plan), std::invalid_argument);
        g.begin_device = 7;
        CHECK_NOTHROW(g.validate(topo, plan));
    }
    SECTION("co-location requires a fixed begin device") {
        g.instances_per_function = 6;
        g.colocate_all_on_begin = true;
        g.begin_mode = GroupSpec::BeginMode::RandomPerRun;
        CHECK_THROWS_AS(g.validate(topo, plan), std::invalid_argument);
    }
}

TEST_CASE("plan restriction keeps availability tiers nested") {
    const DeploymentPlan plan = default_plan();
    GroupSpec g = small_group("g");

    DeploymentPlan prev;
    for (int tier : {2, 4, 6}) {
        g.instances_per_function = tier;
        const DeploymentPlan cur = g.restrict_plan(plan);
        for (std::size_t f = 0; f < cur.instances_of.size(); ++f) {
            CHECK(cur.instances_of[f].size() == static_cast<std::size_t>(tier));
            if (!prev.instances_of.empty())
                CHECK(std::equal(prev.instances_of[f].begin(), prev.instances_of[f].end(),
                                 cur.instances_of[f].begin()));
        }
        prev = cur;
    }
}

TEST_CASE("running a group") {
    const Scenario s;

    SECTION("records arrive ordered with consistent derived fields") {
        const GroupSpec g = small_group("unit");
        const auto records =
            run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                      MarginalSemantics::PowerIncrement, 987180);
        REQUIRE(records.size() == 6);
        std::size_t i = 0;
        for (int level : {0, 50})
            for (int run = 0; run < 3; ++run, ++i) {
                const RunRecord& r = records[i];
                CHECK(r.group_id == "unit");
                CHECK(r.load_level == level);
                CHECK(r.run_index == run);
                CHECK(r.seed == derive_seed(987180, "unit", level, run));
                CHECK(r.begin_device == 4);
                if (r.category == Category::Different) {
                    REQUIRE(r.reldiff_overall_pct.has_value());
                    REQUIRE(r.reldiff_marginal_pct.has_value());
                    CHECK(*r.reldiff_overall_pct >= -1e-9);
                    CHECK(*r.reldiff_marginal_pct >= -1e-9);
                } else {
                    CHECK_FALSE(r.reldiff_overall_pct.has_value());
                    CHECK_FALSE(r.reldiff_marginal_pct.has_value());
                }
                if (r.category == Category::Infeasible) {
                    CHECK_FALSE(r.util_mean_overall.has_value());
                } else {
                    REQUIRE(r.util_mean_overall.has_value());
                    REQUIRE(r.util_mean_marginal.has_value());
                }
            }
    }
    SECTION("output does not depend on the worker count") {
        GroupSpec g = small_group("unit");
        g.runs_per_cell = 10;
        const auto serial = run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                                      MarginalSemantics::PowerIncrement, 987180, 1);
        const auto parallel = run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                                        MarginalSemantics::PowerIncrement, 987180, 4);
        REQUIRE(serial.size() == parallel.size());
        for (std::size_t i = 0; i < serial.size(); ++i)
            CHECK(equal_ignoring_timing(serial[i], parallel[i]));
    }
    SECTION("identical base seeds reproduce the records") {
        const GroupSpec g = small_group("unit");
        const auto a = run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                                 MarginalSemantics::PowerIncrement, 11);
        const auto b = run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                                 MarginalSemantics::PowerIncrement, 11);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(equal_ignoring_timing(a[i], b[i]));
    }
    SECTION("fixed load collapses categories per level") {
        GroupSpec g = small_group("unit");
        g.device_load = LoadDraw::fixed(0.0);
        g.runs_per_cell = 10;
        g.load_levels = {0, 50, 90, 100};
        const auto records = run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                                       MarginalSemantics::PowerIncrement, 987180);
        for (const auto& r : records) {
            if (r.load_level == 100) CHECK(r.category == Category::Infeasible);
            else CHECK(r.category == Category::Same);
        }
    }
    SECTION("random begin devices are reproducible and cover the topology") {
        GroupSpec g = small_group("unit");
        g.begin_mode = GroupSpec::BeginMode::RandomPerRun;
        g.runs_per_cell = 200;
        g.load_levels = {0};
        const auto a = run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                                 MarginalSemantics::PowerIncrement, 987180);
        std::set<DeviceId> begins;
        for (const auto& r : a) {
            CHECK(s.topo.has_device(r.begin_device));
            begins.insert(r.begin_device);
        }
        CHECK(begins.size() == s.topo.devices().size());
        const auto b = run_group(g, s.topo, s.paths, s.chain, 100.0, s.plan,
                                 MarginalSemantics::PowerIncrement, 987180);
        for (std::size_t i = 0; i < a.size(); ++i)
            CHECK(a[i].begin_device == b[i].begin_device);
    }
}

TEST_CASE("aggregation of run records") {
    auto record = [](std::string group, int level, Category cat, double rd) {
        RunRecord r;
        r.group_id = std::move(group);
        r.load_level = level;
        r.category = cat;
        if (cat == Category::Different) {
            r.reldiff_overall_pct = rd;
            r.reldiff_marginal_pct = rd * 2;
        }
        return r;
    };
    std::vector<RunRecord> records = {
        record("a", 0, Category::Same, 0),      record("a", 0, Category::Different, 5),
        record("a", 10, Category::Infeasible, 0), record("a", 10, Category::Different, 7),
        record("b", 0, Category::Same, 0),
    };

    const ReportTables t = aggregate(records);
    REQUIRE(t.categorization.at("a").size() == 2);
    CHECK(t.categorization.at("a")[0].level == 0);
    CHECK(t.categorization.at("a")[0].same == 1);
    CHECK(t.categorization.at("a")[0].different == 1);
    CHECK(t.categorization.at("a")[1].infeasible == 1);
    CHECK(t.reldiff_overall.at("a") == std::vector<double>{5, 7});
    CHECK(t.reldiff_marginal.at("a") == std::vector<double>{10, 14});
    CHECK(t.categorization.at("b")[0].same == 1);
    CHECK(t.reldiff_overall.count("b") == 0);

    SECTION("category counts ignore record order") {
        std::shuffle(records.begin(), records.end(), std::mt19937(3));
        const ReportTables u = aggregate(records);
        for (const auto& [group, rows] : t.categorization) {
            const auto& other = u.categorization.at(group);
            REQUIRE(rows.size() == other.size());
            for (std::size_t i = 0; i < rows.size(); ++i) {
                CHECK(rows[i].level == other[i].level);
                CHECK(rows[i].infeasible == other[i].infeasible);
                CHECK(rows[i].same == other[i].same);
                CHECK(rows[i].different == other[i].different);
            }
        }
    }
}
