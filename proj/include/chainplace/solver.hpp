#pragma once

#include <chrono>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "chainplace/errors.hpp"
#include "chainplace/instance_graph.hpp"

namespace chainplace {

enum class SolveStatus { Feasible, Infeasible };

inline const char* to_string(SolveStatus s) {
    return s == SolveStatus::Feasible ? "feasible" : "infeasible";
}

/// Result of one optimization: selected instance per chain function, its
/// evaluation, and bookkeeping. placement/evaluation are meaningful only
/// when status is Feasible.
struct PlacementOutcome {
    SolveStatus status = SolveStatus::Infeasible;
    Objective objective = Objective::Overall;
    Placement placement;
    PlacementEvaluation evaluation;
    double solver_time_ms = 0.0;
    std::uint64_t candidates_evaluated = 0;
};

namespace detail {

/// Per-node admissible lower bounds on the remaining path: minimal energy
/// to reach the end node and, independently, minimal latency. Either may
/// be infinite for dead nodes.
struct BoundTable {
    std::vector<std::vector<double>> energy;
    std::vector<std::vector<double>> latency;
};

inline BoundTable compute_bounds(const InstanceGraph& g, Objective obj) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    const std::size_t layers = g.num_layers();
    BoundTable b;
    b.energy.resize(layers);
    b.latency.resize(layers);
    for (std::size_t t = 0; t < layers; ++t) {
        b.energy[t].assign(g.layer(t).size(), inf);
        b.latency[t].assign(g.layer(t).size(), inf);
    }
    b.energy[layers - 1].assign(1, 0.0);
    b.latency[layers - 1].assign(1, 0.0);
    for (std::size_t t = layers - 1; t-- > 0;) {
        const auto& next = g.layer(t + 1);
        for (std::size_t i = 0; i < g.layer(t).size(); ++i) {
            for (std::size_t j = 0; j < next.size(); ++j) {
                const auto& arc = g.arc(t, i, j);
                if (!arc.has_value()) continue;
                if (b.energy[t + 1][j] < inf) {
                    const double e = arc->energy_j + next[j].energy_j(obj) + b.energy[t + 1][j];
                    if (e < b.energy[t][i]) b.energy[t][i] = e;
                }
                if (b.latency[t + 1][j] < inf) {
                    const double l = arc->latency_ms + next[j].exec_ms + b.latency[t + 1][j];
                    if (l < b.latency[t][i]) b.latency[t][i] = l;
                }
            }
        }
    }
    return b;
}

/// Depth-first branch-and-bound over the layered graph. Nodes are visited
/// in ascending device order, so completed placements appear in ascending
/// lexicographic order and the incumbent rule below keeps the smallest
/// sequence among tolerance-equal optima.
class LayeredSearch {
public:
    LayeredSearch(const InstanceGraph& g, Objective obj, double deadline_ms)
        : g_(&g), obj_(obj), deadline_ms_(deadline_ms), bounds_(compute_bounds(g, obj)) {}

    void run() {
        seq_.clear();
        descend(0, 0, 0.0, 0.0);
    }

    bool found() const { return has_best_; }
    const std::vector<DeviceId>& best_sequence() const { return best_seq_; }
    std::uint64_t leaves() const { return leaves_; }

private:
    void descend(std::size_t t, std::size_t i, double acc_e, double acc_l) {
        if (t + 1 == g_->num_layers()) {
            ++leaves_;
            offer(acc_e, seq_);
            return;
        }
        const auto& next = g_->layer(t + 1);
        const bool interior = t + 2 < g_->num_layers();
        for (std::size_t j = 0; j < next.size(); ++j) {
            const auto& arc = g_->arc(t, i, j);
            if (!arc.has_value()) continue;
            const double e = acc_e + arc->energy_j + next[j].energy_j(obj_);
            const double l = acc_l + arc->latency_ms + next[j].exec_ms;
            if (l + bounds_.latency[t + 1][j] > deadline_ms_ + kTimeTolMs) continue;
            if (has_best_ && e + bounds_.energy[t + 1][j] > best_e_ + kEnergyTolJ) continue;
            if (interior) seq_.push_back(next[j].device);
            descend(t + 1, j, e, l);
            if (interior) seq_.pop_back();
        }
    }

    void offer(double e, const std::vector<DeviceId>& seq) {
        if (!has_best_ || e < best_e_ - kEnergyTolJ) {
            has_best_ = true;
            best_e_ = e;
            best_seq_ = seq;
            return;
        }
        if (e <= best_e_ + kEnergyTolJ) {
            // min() keeps the tolerance anchor from drifting across chains
            // of near-ties.
            if (seq < best_seq_) best_seq_ = seq;
            if (e < best_e_) best_e_ = e;
        }
    }

    const InstanceGraph* g_;
    Objective obj_;
    double deadline_ms_;
    BoundTable bounds_;
    std::vector<DeviceId> seq_;
    bool has_best_ = false;
    double best_e_ = 0.0;
    std::vector<DeviceId> best_seq_;
    std::uint64_t leaves_ = 0;
};

inline PlacementOutcome finish_outcome(const InstanceGraph& g, Objective obj, double deadline_ms,
                                       SolveStatus status, std::vector<DeviceId> seq,
                                       std::uint64_t candidates,
                                       std::chrono::steady_clock::time_point t0) {
    PlacementOutcome out;
    out.status = status;
    out.objective = obj;
    out.candidates_evaluated = candidates;
    if (status == SolveStatus::Feasible) {
        out.placement.device_of = std::move(seq);
        Request request = g.request();
        request.deadline_ms = deadline_ms;
        out.evaluation = evaluate_placement(g.topology(), g.paths(), request, g.load(),
                                            out.placement, g.semantics());
        if (!out.evaluation.feasible)
            throw std::logic_error("solver returned a placement that re-evaluates as infeasible: " +
                                   out.evaluation.infeasible_cause);
    } else {
        out.evaluation.infeasible_cause = "no deadline-feasible placement";
    }
    out.solver_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return out;
}

} // namespace detail

/// Exact minimum-energy placement under the deadline, or Infeasible when
/// no instance combination meets it. Deterministic: ties on the objective
/// resolve to the lexicographically smallest device-id sequence.
inline PlacementOutcome solve_exact(const InstanceGraph& graph, Objective objective,
                                    double deadline_ms) {
    const auto t0 = std::chrono::steady_clock::now();
    if (!graph.infeasible_functions().empty())
        return detail::finish_outcome(graph, objective, deadline_ms, SolveStatus::Infeasible, {},
                                      0, t0);
    detail::LayeredSearch search(graph, objective, deadline_ms);
    search.run();
    if (!search.found())
        return detail::finish_outcome(graph, objective, deadline_ms, SolveStatus::Infeasible, {},
                                      search.leaves(), t0);
    return detail::finish_outcome(graph, objective, deadline_ms, SolveStatus::Feasible,
                                  search.best_sequence(), search.leaves(), t0);
}

inline PlacementOutcome solve_exact(const InstanceGraph& graph, Objective objective) {
    return solve_exact(graph, objective, graph.request().deadline_ms);
}

inline constexpr std::uint64_t kDefaultOracleCap = 1000000;

/// Brute-force reference: walks the full cartesian product of deployed
/// instances (in ascending device order per function) and scores each
/// combination with evaluate_placement, independently of the layered
/// search. Counts every combination, feasible or not. Throws
/// CapExceededError before enumerating when the product exceeds the cap.
inline PlacementOutcome enumerate_oracle(const InstanceGraph& graph, Objective objective,
                                         double deadline_ms,
                                         std::uint64_t cap = kDefaultOracleCap) {
    const auto t0 = std::chrono::steady_clock::now();
    const DeploymentPlan& plan = graph.plan();
    const std::size_t nf = plan.instances_of.size();

    std::uint64_t combos = 1;
    for (const auto& devs : plan.instances_of) {
        const auto sz = static_cast<std::uint64_t>(devs.size());
        if (combos > cap / sz)
            throw CapExceededError("oracle enumeration would exceed the cap of " +
                                   std::to_string(cap) + " combinations");
        combos *= sz;
    }

    std::vector<std::vector<DeviceId>> instances(nf);
    for (std::size_t f = 0; f < nf; ++f) {
        instances[f] = plan.instances_of[f];
        std::sort(instances[f].begin(), instances[f].end());
    }

    Request request = graph.request();
    request.deadline_ms = deadline_ms;

    bool has_best = false;
    double best_e = 0.0;
    std::vector<DeviceId> best_seq;

    std::vector<std::size_t> idx(nf, 0);
    Placement placement;
    placement.device_of.resize(nf);
    for (std::uint64_t n = 0; n < combos; ++n) {
        for (std::size_t f = 0; f < nf; ++f)
            placement.device_of[f] = instances[f][idx[f]];
        const PlacementEvaluation ev = evaluate_placement(
            graph.topology(), graph.paths(), request, graph.load(), placement, graph.semantics());
        if (ev.feasible) {
            const double e =
                objective == Objective::Overall ? ev.energy_overall_j : ev.energy_marginal_j;
            if (!has_best || e < best_e - kEnergyTolJ) {
                has_best = true;
                best_e = e;
                best_seq = placement.device_of;
            } else if (e < best_e) {
                best_e = e; // near-tie, earlier sequence is already lex-smaller
            }
        }
        for (std::size_t f = nf; f-- > 0;) {
            if (++idx[f] < instances[f].size()) break;
            idx[f] = 0;
        }
    }

    return detail::finish_outcome(graph, objective, deadline_ms,
                                  has_best ? SolveStatus::Feasible : SolveStatus::Infeasible,
                                  std::move(best_seq), combos, t0);
}

inline PlacementOutcome enumerate_oracle(const InstanceGraph& graph, Objective objective) {
    return enumerate_oracle(graph, objective, graph.request().deadline_ms);
}

/// How the two objectives' optima for one run relate.
enum class Category { Infeasible, Same, Different };

inline const char* to_string(Category c) {
    switch (c) {
    case Category::Infeasible: return "infeasible";
    case Category::Same: return "same";
    default: return "different";
    }
}

/// Feasibility only depends on latency and capacities, never on the
/// objective, so a status disagreement means a solver bug.
inline Category categorize(const PlacementOutcome& overall, const PlacementOutcome& marginal) {
    if (overall.status != marginal.status)
        throw std::logic_error("objective-dependent feasibility: overall is " +
                               std::string(to_string(overall.status)) + ", marginal is " +
                               std::string(to_string(marginal.status)));
    if (overall.status == SolveStatus::Infeasible) return Category::Infeasible;
    return overall.placement.device_of == marginal.placement.device_of ? Category::Same
                                                                       : Category::Different;
}

} // namespace chainplace
