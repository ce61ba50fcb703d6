#include "catch_amalgamated.hpp"

#include "chainplace/config.hpp"
#include "chainplace/workload.hpp"

using namespace chainplace;

TEST_CASE("service chain structural checks") {
    ServiceChain chain;
    chain.function_size_mi = {20.0, 200.0, 200.0, 20.0};
    chain.dataflow_mb = {250.0, 500.0, 750.0, 500.0, 250.0};
    CHECK_NOTHROW(chain.validate());
    CHECK(chain.num_functions() == 4);

    SECTION("no functions") {
        chain.function_size_mi.clear();
        CHECK_THROWS_AS(chain.validate(), std::invalid_argument);
    }
    SECTION("dataflow count must be functions + 1") {
        chain.dataflow_mb.pop_back();
        CHECK_THROWS_AS(chain.validate(), std::invalid_argument);
    }
    SECTION("non-positive function size") {
        chain.function_size_mi[1] = 0.0;
        CHECK_THROWS_AS(chain.validate(), std::invalid_argument);
    }
    SECTION("negative dataflow size") {
        chain.dataflow_mb[0] = -1.0;
        CHECK_THROWS_AS(chain.validate(), std::invalid_argument);
    }
    SECTION("zero dataflow is allowed") {
        chain.dataflow_mb[2] = 0.0;
        CHECK_NOTHROW(chain.validate());
    }
}

TEST_CASE("deployment plan validation") {
    const Topology topo = default_topology();
    DeploymentPlan plan = default_plan();
    CHECK_NOTHROW(plan.validate(topo, 4));

    SECTION("must cover every function") {
        CHECK_THROWS_AS(plan.validate(topo, 5), std::invalid_argument);
    }
    SECTION("function without instances") {
        plan.instances_of[2].clear();
        CHECK_THROWS_AS(plan.validate(topo, 4), std::invalid_argument);
    }
    SECTION("duplicate device within one function") {
        plan.instances_of[0] = {1, 2, 1};
        CHECK_THROWS_AS(plan.validate(topo, 4), std::invalid_argument);
    }
    SECTION("unknown device") {
        plan.instances_of[3].push_back(99);
        CHECK_THROWS_AS(plan.validate(topo, 4), std::invalid_argument);
    }
    SECTION("same device across different functions is fine") {
        plan.instances_of[0] = {7};
        plan.instances_of[1] = {7};
        CHECK_NOTHROW(plan.validate(topo, 4));
    }
}

TEST_CASE("devices hosting every function") {
    const DeploymentPlan plan = default_plan();
    CHECK(plan.devices_hosting_all() == std::vector<DeviceId>{7});

    DeploymentPlan two_tier;
    for (const auto& devs : plan.instances_of)
        two_tier.instances_of.emplace_back(devs.begin(), devs.begin() + 2);
    CHECK(two_tier.devices_hosting_all().empty());

    DeploymentPlan empty;
    CHECK(empty.devices_hosting_all().empty());
}

TEST_CASE("placement must pick deployed instances") {
    const Topology topo = default_topology();
    DeploymentPlan plan;
    for (const auto& devs : default_plan().instances_of)
        plan.instances_of.emplace_back(devs.begin(), devs.begin() + 2);

    Placement p;
    p.device_of = {1, 3, 6, 9};
    CHECK_NOTHROW(p.validate(plan));

    SECTION("wrong length") {
        p.device_of.pop_back();
        CHECK_THROWS_AS(p.validate(plan), std::invalid_argument);
    }
    SECTION("device hosts no instance of the function") {
        p.device_of = {1, 3, 6, 11};
        CHECK_THROWS_AS(p.validate(plan), std::invalid_argument);
    }
}

TEST_CASE("request validation") {
    const Topology topo = default_topology();
    Request r;
    r.chain = default_service().chain;
    r.begin_device = 4;
    r.end_device = 4;
    r.deadline_ms = 100.0;
    CHECK_NOTHROW(r.validate(topo));

    SECTION("unknown begin device") {
        r.begin_device = 99;
        CHECK_THROWS_AS(r.validate(topo), std::invalid_argument);
    }
    SECTION("unknown end device") {
        r.end_device = -1;
        CHECK_THROWS_AS(r.validate(topo), std::invalid_argument);
    }
    SECTION("non-positive deadline") {
        r.deadline_ms = 0.0;
        CHECK_THROWS_AS(r.validate(topo), std::invalid_argument);
    }
    SECTION("chain errors propagate") {
        r.chain.dataflow_mb.pop_back();
        CHECK_THROWS_AS(r.validate(topo), std::invalid_argument);
    }
}
