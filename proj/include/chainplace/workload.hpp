#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainplace/infrastructure.hpp"

namespace chainplace {

/// An ordered microservice chain F1..Fn plus the dataflow sizes moved
/// between consecutive stages. dataflow_mb has one more entry than
/// functions: entry 0 enters F1 from the origin, the last leaves Fn
/// toward the consumer.
struct ServiceChain {
    std::vector<double> function_size_mi; // per-function compute demand
    std::vector<double> dataflow_mb;      // size functions+1

    std::size_t num_functions() const { return function_size_mi.size(); }

    void validate() const {
        if (function_size_mi.empty())
            throw std::invalid_argument("service chain has no functions");
        if (dataflow_mb.size() != function_size_mi.size() + 1)
            throw std::invalid_argument("service chain needs functions+1 dataflow entries");
        for (double s : function_size_mi)
            if (s <= 0.0) throw std::invalid_argument("function size must be > 0");
        for (double d : dataflow_mb)
            if (d < 0.0) throw std::invalid_argument("dataflow size must be >= 0");
    }
};

/// Which devices host an instance of each function. instances_of[f] lists
/// candidate devices for function f; the solver picks exactly one per
/// function. Duplicate devices within one function's list are rejected,
/// the same device may appear for several functions.
struct DeploymentPlan {
    std::vector<std::vector<DeviceId>> instances_of;

    void validate(const Topology& topo, std::size_t num_functions) const {
        if (instances_of.size() != num_functions)
            throw std::invalid_argument("deployment plan must cover every function");
        for (std::size_t f = 0; f < instances_of.size(); ++f) {
            const auto& devs = instances_of[f];
            if (devs.empty())
                throw std::invalid_argument("function " + std::to_string(f + 1) +
                                            " has no deployed instance");
            std::vector<DeviceId> sorted = devs;
            std::sort(sorted.begin(), sorted.end());
            if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
                throw std::invalid_argument("function " + std::to_string(f + 1) +
                                            " lists the same device twice");
            for (DeviceId d : devs)
                if (!topo.has_device(d))
                    throw std::invalid_argument("function " + std::to_string(f + 1) +
                                                " deployed on unknown device " + std::to_string(d));
        }
    }

    /// Devices hosting an instance of every function, ascending. Used to
    /// pick a begin device that can serve a whole chain locally.
    std::vector<DeviceId> devices_hosting_all() const {
        if (instances_of.empty()) return {};
        std::vector<DeviceId> acc = instances_of[0];
        std::sort(acc.begin(), acc.end());
        for (std::size_t f = 1; f < instances_of.size(); ++f) {
            std::vector<DeviceId> cur = instances_of[f];
            std::sort(cur.begin(), cur.end());
            std::vector<DeviceId> out;
            std::set_intersection(acc.begin(), acc.end(), cur.begin(), cur.end(),
                                  std::back_inserter(out));
            acc = std::move(out);
        }
        return acc;
    }
};

/// One placement decision: the device chosen for each function, in chain
/// order.
struct Placement {
    std::vector<DeviceId> device_of;

    void validate(const DeploymentPlan& plan) const {
        if (device_of.size() != plan.instances_of.size())
            throw std::invalid_argument("placement must assign every function");
        for (std::size_t f = 0; f < device_of.size(); ++f) {
            const auto& devs = plan.instances_of[f];
            if (std::find(devs.begin(), devs.end(), device_of[f]) == devs.end())
                throw std::invalid_argument("placement uses device " +
                                            std::to_string(device_of[f]) +
                                            " which hosts no instance of function " +
                                            std::to_string(f + 1));
        }
    }
};

/// A user request: the chain to run, where it enters and leaves the
/// network, and the completion-time deadline.
struct Request {
    ServiceChain chain;
    DeviceId begin_device = 0;
    DeviceId end_device = 0;
    double deadline_ms = 0.0;

    void validate(const Topology& topo) const {
        chain.validate();
        if (!topo.has_device(begin_device))
            throw std::invalid_argument("request begin device " + std::to_string(begin_device) +
                                        " not in topology");
        if (!topo.has_device(end_device))
            throw std::invalid_argument("request end device " + std::to_string(end_device) +
                                        " not in topology");
        if (deadline_ms <= 0.0)
            throw std::invalid_argument("request deadline must be > 0");
    }
};

} // namespace chainplace
