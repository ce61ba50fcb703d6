#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainplace/metrics.hpp"

namespace chainplace {

/// Which energy total a solve minimizes.
enum class Objective { Overall, Marginal };

inline const char* to_string(Objective o) {
    return o == Objective::Overall ? "overall" : "marginal";
}

inline Objective objective_from_string(const std::string& s) {
    if (s == "overall") return Objective::Overall;
    if (s == "marginal") return Objective::Marginal;
    throw std::invalid_argument("unknown objective '" + s + "' (expected overall|marginal)");
}

/// One candidate node of the layered placement graph: a function instance
/// on a device, with its execution cost under the run's load. Virtual
/// begin/end nodes carry zero cost.
struct GraphNode {
    DeviceId device = 0;
    double exec_ms = 0.0;
    double u_after = 0.0;
    double energy_overall_j = 0.0;
    double energy_marginal_j = 0.0;

    double energy_j(Objective o) const {
        return o == Objective::Overall ? energy_overall_j : energy_marginal_j;
    }
};

/// Cost of the virtual link between two nodes of consecutive layers.
struct ArcCost {
    double latency_ms = 0.0;
    double energy_j = 0.0;
};

/// Layered search graph for one request under one load snapshot.
///
/// Layer 0 holds the virtual begin node, layers 1..F one node per deployed
/// (and currently feasible) instance of chain function F_t, layer F+1 the
/// virtual end node. Nodes within a layer are sorted by device id so that
/// iteration order, and with it tie-breaking, is reproducible. Arcs exist
/// between consecutive layers only and price the dataflow of that chain
/// position over the physical shortest path; arcs whose route has no
/// residual bandwidth are absent. Instances on saturated devices are
/// dropped; a chain function losing all its instances makes the whole
/// graph infeasible and is listed in infeasible_functions().
class InstanceGraph {
public:
    InstanceGraph(const Topology& topo, const PathTable& paths, const Request& request,
                  const DeploymentPlan& plan, const LoadState& load, MarginalSemantics semantics)
        : topo_(&topo), paths_(&paths), request_(request), plan_(plan), load_(load),
          semantics_(semantics) {
        request_.validate(topo);
        plan_.validate(topo, request_.chain.num_functions());
        load_.validate(topo);
        build();
    }

    const Topology& topology() const { return *topo_; }
    const PathTable& paths() const { return *paths_; }
    const Request& request() const { return request_; }
    const DeploymentPlan& plan() const { return plan_; }
    const LoadState& load() const { return load_; }
    MarginalSemantics semantics() const { return semantics_; }

    /// F + 2 layers including the virtual endpoints.
    std::size_t num_layers() const { return layers_.size(); }

    const std::vector<GraphNode>& layer(std::size_t t) const { return layers_.at(t); }

    /// Arc from node i of layer t to node j of layer t+1; absent when the
    /// dataflow cannot be carried.
    const std::optional<ArcCost>& arc(std::size_t t, std::size_t i, std::size_t j) const {
        return arcs_.at(t).at(i).at(j);
    }

    /// 1-based chain positions whose every instance is currently
    /// infeasible. Non-empty means no placement can exist.
    const std::vector<std::size_t>& infeasible_functions() const { return infeasible_functions_; }

    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& l : layers_) n += l.size();
        return n;
    }

    std::size_t arc_count() const {
        std::size_t n = 0;
        for (const auto& m : arcs_)
            for (const auto& row : m)
                for (const auto& a : row)
                    if (a.has_value()) ++n;
        return n;
    }

private:
    void build() {
        const std::size_t nf = request_.chain.num_functions();
        layers_.resize(nf + 2);

        GraphNode begin;
        begin.device = request_.begin_device;
        layers_[0] = {begin};
        GraphNode end;
        end.device = request_.end_device;
        layers_[nf + 1] = {end};

        for (std::size_t f = 0; f < nf; ++f) {
            std::vector<DeviceId> devs = plan_.instances_of[f];
            std::sort(devs.begin(), devs.end());
            auto& layer = layers_[f + 1];
            for (DeviceId dev : devs) {
                const auto m = node_metrics(*topo_, load_, topo_->device_index(dev),
                                            request_.chain.function_size_mi[f], semantics_);
                if (!m.has_value()) continue;
                GraphNode node;
                node.device = dev;
                node.exec_ms = m->exec_ms;
                node.u_after = m->u_after;
                node.energy_overall_j = m->energy_overall_j;
                node.energy_marginal_j = m->energy_marginal_j;
                layer.push_back(node);
            }
            if (layer.empty()) infeasible_functions_.push_back(f + 1);
        }

        arcs_.resize(nf + 1);
        for (std::size_t t = 0; t + 1 < layers_.size(); ++t) {
            const auto& from = layers_[t];
            const auto& to = layers_[t + 1];
            arcs_[t].assign(from.size(), std::vector<std::optional<ArcCost>>(to.size()));
            for (std::size_t i = 0; i < from.size(); ++i) {
                for (std::size_t j = 0; j < to.size(); ++j) {
                    const PathDescriptor& path =
                        paths_->shortest_path(from[i].device, to[j].device);
                    const auto m =
                        transfer_metrics(*topo_, load_, path, request_.chain.dataflow_mb[t]);
                    if (!m.has_value()) continue;
                    arcs_[t][i][j] = ArcCost{m->time_ms, m->energy_j};
                }
            }
        }
    }

    const Topology* topo_;
    const PathTable* paths_;
    Request request_;
    DeploymentPlan plan_;
    LoadState load_;
    MarginalSemantics semantics_;

    std::vector<std::vector<GraphNode>> layers_;
    std::vector<std::vector<std::vector<std::optional<ArcCost>>>> arcs_;
    std::vector<std::size_t> infeasible_functions_;
};

} // namespace chainplace
