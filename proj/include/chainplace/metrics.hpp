#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>

#include "chainplace/infrastructure.hpp"
#include "chainplace/workload.hpp"

namespace chainplace {

/// Comparison tolerances shared by solver, oracle and validation.
inline constexpr double kEnergyTolJ = 1e-9;
inline constexpr double kTimeTolMs = 1e-9;

/// Watt * millisecond to joule. The only place this conversion lives.
inline double joules(double watts, double duration_ms) {
    return watts * duration_ms / 1000.0;
}

/// How the marginal metric charges a busy device for one more instance.
/// PowerIncrement charges the rise of the dynamic power curve between the
/// old and new utilization. LiteralDelta evaluates the curve at the bare
/// utilization delta instead; both agree on linear profiles.
enum class MarginalSemantics { PowerIncrement, LiteralDelta };

/// Utilization of a device after one more instance claims a core,
/// saturating at 1. A fully busy device cannot take the instance, so
/// asking is a logic error there.
inline double utilization_after(const Topology& topo, const LoadState& load,
                                std::size_t device_index) {
    const EdgeDevice& d = topo.devices()[device_index];
    const double u = load.device_u[device_index];
    if (u >= 1.0)
        throw std::domain_error("device " + std::to_string(d.id) +
                                " is saturated, cannot add an instance");
    return std::min(1.0, u + 1.0 / static_cast<double>(d.cores));
}

/// Time to run a function of the given size on a device under the given
/// load, or nullopt when the device has no compute left.
inline std::optional<double> execution_time_ms(const Topology& topo, const LoadState& load,
                                               std::size_t device_index, double function_mi) {
    const double cap = available_compute(topo, load, device_index);
    if (cap <= 0.0) return std::nullopt;
    return function_mi / cap;
}

inline double dynamic_power_increment(const DevicePowerProfile& profile, double u_before,
                                      double u_after, MarginalSemantics semantics) {
    if (semantics == MarginalSemantics::LiteralDelta)
        return dynamic_power(profile, u_after - u_before);
    return dynamic_power(profile, u_after) - dynamic_power(profile, u_before);
}

/// Total device draw (idle plus dynamic at the post-placement
/// utilization) over the execution window.
inline double device_energy_overall_j(const EdgeDevice& device, double u_after,
                                      double exec_time_ms) {
    return joules(device.power.idle_w + dynamic_power(device.power, u_after), exec_time_ms);
}

/// Additional draw caused by the placement. On an idle device this equals
/// the overall energy (the placement is what keeps the device on); on a
/// busy device only the dynamic-power rise is charged.
inline double device_energy_marginal_j(const EdgeDevice& device, double u_before, double u_after,
                                       double exec_time_ms, MarginalSemantics semantics) {
    if (u_before == 0.0) return device_energy_overall_j(device, u_after, exec_time_ms);
    return joules(dynamic_power_increment(device.power, u_before, u_after, semantics),
                  exec_time_ms);
}

/// Cost of moving one dataflow along a route: per-hop time is propagation
/// delay plus transfer through the hop's residual bandwidth, per-hop
/// energy is the full link draw over that time.
struct TransferMetrics {
    double time_ms = 0.0;
    double energy_j = 0.0;
};

/// nullopt when some hop has no residual bandwidth for a non-empty
/// dataflow. An empty route (producer and consumer co-located) costs
/// nothing.
inline std::optional<TransferMetrics> transfer_metrics(const Topology& topo,
                                                       const LoadState& load,
                                                       const PathDescriptor& path,
                                                       double data_mb) {
    TransferMetrics m;
    for (std::size_t li : path.hop_links) {
        const NetworkLink& l = topo.links()[li];
        double hop_ms = l.propagation_delay_ms;
        if (data_mb > 0.0) {
            const double avail = available_bandwidth(topo, load, li);
            if (avail <= 0.0) return std::nullopt;
            hop_ms += data_mb / avail;
        }
        m.time_ms += hop_ms;
        m.energy_j += joules(l.idle_w + l.dyn_w, hop_ms);
    }
    return m;
}

/// Everything the placement graph needs to know about running one function
/// instance on one device under the current load.
struct NodeMetrics {
    double exec_ms = 0.0;
    double u_after = 0.0;
    double energy_overall_j = 0.0;
    double energy_marginal_j = 0.0;
};

inline std::optional<NodeMetrics> node_metrics(const Topology& topo, const LoadState& load,
                                               std::size_t device_index, double function_mi,
                                               MarginalSemantics semantics) {
    const auto exec = execution_time_ms(topo, load, device_index, function_mi);
    if (!exec.has_value()) return std::nullopt;
    const EdgeDevice& d = topo.devices()[device_index];
    NodeMetrics m;
    m.exec_ms = *exec;
    m.u_after = utilization_after(topo, load, device_index);
    const double u_before = load.device_u[device_index];
    m.energy_overall_j = device_energy_overall_j(d, m.u_after, m.exec_ms);
    m.energy_marginal_j = device_energy_marginal_j(d, u_before, m.u_after, m.exec_ms, semantics);
    return m;
}

/// Totals for one complete placement. infeasible_cause is non-empty iff
/// feasible is false; the numeric fields are only meaningful when some
/// value was computed before the failure (deadline breaches report the
/// full totals, resource failures report zeros).
struct PlacementEvaluation {
    bool feasible = false;
    std::string infeasible_cause;
    double completion_ms = 0.0;
    double energy_overall_j = 0.0;
    double energy_marginal_j = 0.0;
};

/// Sums the request route begin -> f1 -> ... -> fn -> end: transfer time
/// and energy per dataflow, execution time and both energies per function.
/// Every function is charged against the pre-request load; functions run
/// sequentially so their resource claims never overlap.
inline PlacementEvaluation evaluate_placement(const Topology& topo, const PathTable& paths,
                                              const Request& request, const LoadState& load,
                                              const Placement& placement,
                                              MarginalSemantics semantics) {
    const std::size_t n = request.chain.num_functions();
    if (placement.device_of.size() != n)
        throw std::invalid_argument("placement does not cover the whole chain");

    PlacementEvaluation ev;
    std::vector<DeviceId> route;
    route.reserve(n + 2);
    route.push_back(request.begin_device);
    route.insert(route.end(), placement.device_of.begin(), placement.device_of.end());
    route.push_back(request.end_device);

    for (std::size_t hop = 0; hop + 1 < route.size(); ++hop) {
        const PathDescriptor& path = paths.shortest_path(route[hop], route[hop + 1]);
        const auto t = transfer_metrics(topo, load, path, request.chain.dataflow_mb[hop]);
        if (!t.has_value()) {
            ev.infeasible_cause = "no residual bandwidth on route " + std::to_string(route[hop]) +
                                  "->" + std::to_string(route[hop + 1]);
            return ev;
        }
        ev.completion_ms += t->time_ms;
        ev.energy_overall_j += t->energy_j;
        ev.energy_marginal_j += t->energy_j;
    }

    for (std::size_t f = 0; f < n; ++f) {
        const std::size_t dev = topo.device_index(placement.device_of[f]);
        const auto m =
            node_metrics(topo, load, dev, request.chain.function_size_mi[f], semantics);
        if (!m.has_value()) {
            ev.infeasible_cause = "function " + std::to_string(f + 1) +
                                  ": no compute capacity on device " +
                                  std::to_string(placement.device_of[f]);
            return ev;
        }
        ev.completion_ms += m->exec_ms;
        ev.energy_overall_j += m->energy_overall_j;
        ev.energy_marginal_j += m->energy_marginal_j;
    }

    if (ev.completion_ms > request.deadline_ms + kTimeTolMs) {
        ev.infeasible_cause = "deadline exceeded: " + std::to_string(ev.completion_ms) + " ms > " +
                              std::to_string(request.deadline_ms) + " ms";
        return ev;
    }
    ev.feasible = true;
    return ev;
}

/// Mean pre-placement utilization over the chain's chosen devices, one
/// term per function (a device hosting two functions counts twice).
inline double mean_chosen_utilization(const Topology& topo, const LoadState& load,
                                      const Placement& placement) {
    if (placement.device_of.empty())
        throw std::invalid_argument("empty placement");
    double sum = 0.0;
    for (DeviceId dev : placement.device_of)
        sum += load.device_u[topo.device_index(dev)];
    return sum / static_cast<double>(placement.device_of.size());
}

} // namespace chainplace
