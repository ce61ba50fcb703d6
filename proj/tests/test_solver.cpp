#include "catch_amalgamated.hpp"

#include "chainplace/config.hpp"
#include "chainplace/rng.hpp"
#include "chainplace/solver.hpp"

using namespace chainplace;
using Catch::Approx;

namespace {

EdgeDevice default_device(int id) {
    EdgeDevice d;
    d.id = id;
    d.compute_capacity_mi_ms = 500.0;
    d.cores = 16;
    d.power = DevicePowerProfile::linear(98.0, 143.0, 16);
    return d;
}

/// Devices 1 and 2 reachable from begin device 3 over identical links.
Topology fork_topology() {
    return Topology({default_device(1), default_device(2), default_device(3)},
                    {{3, 1, 1.0, 500.0, 1.0, 9.0}, {3, 2, 1.0, 500.0, 1.0, 9.0}});
}

Request single_function_request() {
    Request r;
    r.chain.function_size_mi = {200.0};
    r.chain.dataflow_mb = {500.0, 500.0};
    r.begin_device = 3;
    r.end_device = 3;
    r.deadline_ms = 100.0;
    return r;
}

DeploymentPlan tiered_plan(int instances) {
    DeploymentPlan p;
    for (const auto& devs : default_plan().instances_of)
        p.instances_of.emplace_back(devs.begin(), devs.begin() + instances);
    return p;
}

Request default_request(DeviceId begin = 4) {
    Request r;
    r.chain = default_service().chain;
    r.begin_device = begin;
    r.end_device = begin;
    r.deadline_ms = 100.0;
    return r;
}

} // namespace

TEST_CASE("the two objectives can prefer different instances") {
    const Topology topo = fork_topology();
    const PathTable paths(topo);
    DeploymentPlan plan;
    plan.instances_of = {{1, 2}};
    LoadState load = LoadState::uniform(topo, 0.0, 0.0);
    load.device_u[0] = 0.5; // device 1 is busy, device 2 idle

    const InstanceGraph g(topo, paths, single_function_request(), plan, load,
                          MarginalSemantics::PowerIncrement);
    const auto overall = solve_exact(g, Objective::Overall);
    const auto marginal = solve_exact(g, Objective::Marginal);

    REQUIRE(overall.status == SolveStatus::Feasible);
    REQUIRE(marginal.status == SolveStatus::Feasible);
    CHECK(overall.placement.device_of == std::vector<DeviceId>{2});
    CHECK(marginal.placement.device_of == std::vector<DeviceId>{1});
    CHECK(categorize(overall, marginal) == Category::Different);

    // Both routes cost 4 ms of link time (0.04 J); the idle device adds
    // 0.6844 J under either metric, the busy one 1.142 J / 0.0572 J.
    CHECK(overall.evaluation.energy_overall_j == Approx(0.7244).margin(1e-9));
    CHECK(marginal.evaluation.energy_marginal_j == Approx(0.0972).margin(1e-9));

    SECTION("cross dominance") {
        CHECK(overall.evaluation.energy_overall_j <=
              marginal.evaluation.energy_overall_j + kEnergyTolJ);
        CHECK(marginal.evaluation.energy_marginal_j <=
              overall.evaluation.energy_marginal_j + kEnergyTolJ);
    }
    SECTION("oracle agrees on both objectives") {
        for (Objective obj : {Objective::Overall, Objective::Marginal}) {
            const auto fast = solve_exact(g, obj);
            const auto slow = enumerate_oracle(g, obj);
            CHECK(slow.candidates_evaluated == 2);
            CHECK(fast.status == slow.status);
            CHECK(fast.placement.device_of == slow.placement.device_of);
        }
    }
}

TEST_CASE("exact ties resolve to the lexicographically smallest sequence") {
    const Topology topo = fork_topology();
    const PathTable paths(topo);
    DeploymentPlan plan;
    plan.instances_of = {{2, 1}}; // declaration order must not matter
    const LoadState idle = LoadState::uniform(topo, 0.0, 0.0);

    const InstanceGraph g(topo, paths, single_function_request(), plan, idle,
                          MarginalSemantics::PowerIncrement);
    for (Objective obj : {Objective::Overall, Objective::Marginal}) {
        CHECK(solve_exact(g, obj).placement.device_of == std::vector<DeviceId>{1});
        CHECK(enumerate_oracle(g, obj).placement.device_of == std::vector<DeviceId>{1});
    }
}

TEST_CASE("deadline handling") {
    const Topology topo = Topology({default_device(1), default_device(2)},
                                   {{1, 2, 1.0, 500.0, 1.0, 9.0}});
    const PathTable paths(topo);
    DeploymentPlan plan;
    plan.instances_of = {{1}, {1}, {1}, {1}};
    Request request = default_request(2);
    const LoadState idle = LoadState::uniform(topo, 0.0, 0.0);

    const InstanceGraph g(topo, paths, request, plan, idle,
                          MarginalSemantics::PowerIncrement);
    // Unique placement: 1.5 ms in, 1.5 ms out, 14.08 ms of execution.
    const auto outcome = solve_exact(g, Objective::Overall);
    REQUIRE(outcome.status == SolveStatus::Feasible);
    CHECK(outcome.evaluation.completion_ms == Approx(17.08).margin(1e-9));

    SECTION("zero deadline is infeasible, not an error") {
        const auto tight = solve_exact(g, Objective::Overall, 0.0);
        CHECK(tight.status == SolveStatus::Infeasible);
        CHECK_FALSE(tight.evaluation.infeasible_cause.empty());
        CHECK(enumerate_oracle(g, Objective::Overall, 0.0).status == SolveStatus::Infeasible);
    }
    SECTION("deadline exactly at the completion time is feasible") {
        CHECK(solve_exact(g, Objective::Overall, 17.08).status == SolveStatus::Feasible);
        CHECK(enumerate_oracle(g, Objective::Overall, 17.08).status == SolveStatus::Feasible);
    }
    SECTION("deadline just below the completion time is infeasible") {
        CHECK(solve_exact(g, Objective::Overall, 17.0).status == SolveStatus::Infeasible);
        CHECK(enumerate_oracle(g, Objective::Overall, 17.0).status == SolveStatus::Infeasible);
    }
    SECTION("single candidate per function") {
        const auto slow = enumerate_oracle(g, Objective::Marginal);
        CHECK(slow.candidates_evaluated == 1);
        CHECK(slow.placement.device_of == std::vector<DeviceId>{1, 1, 1, 1});
    }
}

TEST_CASE("homogeneous fixed load collapses the two objectives") {
    const Topology topo = default_topology();
    const PathTable paths(topo);

    for (int tier : {2, 6}) {
        const DeploymentPlan plan = tiered_plan(tier);
        for (double u : {0.0, 0.3, 0.6, 0.9}) {
            const InstanceGraph g(topo, paths, default_request(), plan,
                                  LoadState::uniform(topo, u),
                                  MarginalSemantics::PowerIncrement);
            const auto overall = solve_exact(g, Objective::Overall);
            const auto marginal = solve_exact(g, Objective::Marginal);
            REQUIRE(overall.status == SolveStatus::Feasible);
            CHECK(categorize(overall, marginal) == Category::Same);
        }
    }
}

TEST_CASE("solver matches the exhaustive oracle on random loads") {
    const Topology topo = default_topology();
    const PathTable paths(topo);
    const DeploymentPlan plan = tiered_plan(2);

    for (int level : {0, 30, 60, 90}) {
        for (int run = 0; run < 10; ++run) {
            const std::uint64_t seed = derive_seed(987180, "unit-sweep", level, run);
            const LoadState load =
                generate_load(topo, LoadDraw::normal(level, 10.0), LoadDraw::none(), seed);
            const InstanceGraph g(topo, paths, default_request(), plan, load,
                                  MarginalSemantics::PowerIncrement);

            const auto fast_o = solve_exact(g, Objective::Overall);
            const auto fast_m = solve_exact(g, Objective::Marginal);
            const auto slow_o = enumerate_oracle(g, Objective::Overall);
            const auto slow_m = enumerate_oracle(g, Objective::Marginal);

            CHECK(slow_o.candidates_evaluated == 16);
            REQUIRE(fast_o.status == slow_o.status);
            REQUIRE(fast_m.status == slow_m.status);
            CHECK(fast_o.status == fast_m.status); // feasibility is objective-free
            if (fast_o.status != SolveStatus::Feasible) continue;

            CHECK(fast_o.placement.device_of == slow_o.placement.device_of);
            CHECK(fast_m.placement.device_of == slow_m.placement.device_of);
            CHECK(fast_o.evaluation.energy_overall_j ==
                  Approx(slow_o.evaluation.energy_overall_j).margin(kEnergyTolJ));
            CHECK(fast_m.evaluation.energy_marginal_j ==
                  Approx(slow_m.evaluation.energy_marginal_j).margin(kEnergyTolJ));

            // Cross dominance and the deadline contract on every feasible run.
            CHECK(fast_o.evaluation.energy_overall_j <=
                  fast_m.evaluation.energy_overall_j + kEnergyTolJ);
            CHECK(fast_m.evaluation.energy_marginal_j <=
                  fast_o.evaluation.energy_marginal_j + kEnergyTolJ);
            CHECK(fast_o.evaluation.completion_ms <= 100.0 + kTimeTolMs);
            CHECK(fast_o.placement.device_of.size() == 4);
        }
    }
}

TEST_CASE("widening the deployment never worsens the optimum") {
    const Topology topo = default_topology();
    const PathTable paths(topo);

    for (int run = 0; run < 8; ++run) {
        const std::uint64_t seed = derive_seed(987180, "unit-mono", 50, run);
        const LoadState load =
            generate_load(topo, LoadDraw::normal(50, 30.0), LoadDraw::none(), seed);
        for (Objective obj : {Objective::Overall, Objective::Marginal}) {
            double prev = std::numeric_limits<double>::infinity();
            bool prev_feasible = false;
            for (int tier : {2, 4, 6}) {
                const InstanceGraph g(topo, paths, default_request(), tiered_plan(tier), load,
                                      MarginalSemantics::PowerIncrement);
                const auto outcome = solve_exact(g, obj);
                if (prev_feasible) REQUIRE(outcome.status == SolveStatus::Feasible);
                if (outcome.status == SolveStatus::Feasible) {
                    const double e = obj == Objective::Overall
                                         ? outcome.evaluation.energy_overall_j
                                         : outcome.evaluation.energy_marginal_j;
                    if (prev_feasible) CHECK(e <= prev + kEnergyTolJ);
                    prev = e;
                    prev_feasible = true;
                }
            }
        }
    }
}

TEST_CASE("oracle refuses oversized enumerations") {
    const Topology topo = default_topology();
    const PathTable paths(topo);
    const InstanceGraph g(topo, paths, default_request(), tiered_plan(6),
                          LoadState::uniform(topo, 0.0), MarginalSemantics::PowerIncrement);

    CHECK_THROWS_AS(enumerate_oracle(g, Objective::Overall, 100.0, 100), CapExceededError);
    CHECK_THROWS_WITH(enumerate_oracle(g, Objective::Overall, 100.0, 1295),
                      Catch::Matchers::ContainsSubstring("cap"));
    // 6^4 candidates fit a cap of exactly 1296.
    CHECK(enumerate_oracle(g, Objective::Overall, 100.0, 1296).candidates_evaluated == 1296);
}

TEST_CASE("an infeasible function empties the search") {
    const Topology topo = default_topology();
    const PathTable paths(topo);
    LoadState load = LoadState::uniform(topo, 0.0);
    load.device_u[topo.device_index(1)] = 1.0;
    load.device_u[topo.device_index(2)] = 1.0;

    const InstanceGraph g(topo, paths, default_request(), tiered_plan(2), load,
                          MarginalSemantics::PowerIncrement);
    REQUIRE_FALSE(g.infeasible_functions().empty());

    const auto fast = solve_exact(g, Objective::Overall);
    CHECK(fast.status == SolveStatus::Infeasible);
    CHECK(fast.candidates_evaluated == 0);
    CHECK(enumerate_oracle(g, Objective::Overall).status == SolveStatus::Infeasible);
}

TEST_CASE("categorization of outcome pairs") {
    PlacementOutcome a, b;
    a.status = b.status = SolveStatus::Feasible;
    a.placement.device_of = {1, 5, 6, 9};
    b.placement.device_of = {1, 5, 6, 9};

    CHECK(categorize(a, b) == Category::Same);

    SECTION("a single differing position is Different") {
        b.placement.device_of = {1, 7, 6, 9};
        CHECK(categorize(a, b) == Category::Different);
    }
    SECTION("both infeasible") {
        a.status = b.status = SolveStatus::Infeasible;
        CHECK(categorize(a, b) == Category::Infeasible);
    }
    SECTION("status disagreement is an internal error") {
        b.status = SolveStatus::Infeasible;
        CHECK_THROWS_AS(categorize(a, b), std::logic_error);
    }
    SECTION("category names") {
        CHECK(std::string(to_string(Category::Infeasible)) == "infeasible");
        CHECK(std::string(to_string(Category::Same)) == "same");
        CHECK(std::string(to_string(Category::Different)) == "different");
        CHECK(std::string(to_string(SolveStatus::Feasible)) == "feasible");
        CHECK(std::string(to_string(SolveStatus::Infeasible)) == "infeasible");
    }
}

TEST_CASE("solve defaults to the request deadline") {
    const Topology topo = default_topology();
    const PathTable paths(topo);
    const InstanceGraph g(topo, paths, default_request(), tiered_plan(2),
                          LoadState::uniform(topo, 0.0), MarginalSemantics::PowerIncrement);

    const auto implicit = solve_exact(g, Objective::Overall);
    const auto explicit_dl = solve_exact(g, Objective::Overall, 100.0);
    CHECK(implicit.status == explicit_dl.status);
    CHECK(implicit.placement.device_of == explicit_dl.placement.device_of);
    CHECK(implicit.evaluation.energy_overall_j == explicit_dl.evaluation.energy_overall_j);
}
