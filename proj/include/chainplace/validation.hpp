#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chainplace/solver.hpp"

namespace chainplace {

/// Outcome of checking one structural constraint family against a
/// realized placement. Diagnostic only; validation never throws on a
/// failed constraint.
struct ConstraintVerdict {
    std::string family;
    bool pass = false;
    std::string detail;
};

/// A visit sequence over instance nodes, as (0-based chain position,
/// device) pairs in visiting order. Regular placements visit position
/// 0..F-1 in order; tests may hand-build degenerate sequences.
using VisitPlan = std::vector<std::pair<std::size_t, DeviceId>>;

namespace detail {

/// Arc-selection, node-selection and arc-order variables realized from a
/// visit sequence, over the node universe of all deployed instances plus
/// the virtual endpoints.
struct RealizedModel {
    // Node keys: (chain position, device) for instances; position F for
    // the begin node and F+1 for the end node (devices as in the request).
    using Node = std::pair<std::size_t, DeviceId>;

    std::size_t num_functions = 0;
    int beta = 0;
    Node begin, end;
    std::set<Node> universe;
    std::set<Node> selected;                // y = 1 (interior nodes only)
    std::map<std::pair<Node, Node>, int> arc_order; // o per selected arc; x = 1 iff present
    std::vector<std::pair<Node, Node>> path;        // arcs in visit order
};

inline RealizedModel realize(const InstanceGraph& g, const VisitPlan& visits) {
    RealizedModel m;
    m.num_functions = g.request().chain.num_functions();
    m.beta = static_cast<int>(m.num_functions) + 2;
    m.begin = {m.num_functions, g.request().begin_device};
    m.end = {m.num_functions + 1, g.request().end_device};
    m.universe.insert(m.begin);
    m.universe.insert(m.end);
    for (std::size_t f = 0; f < g.plan().instances_of.size(); ++f)
        for (DeviceId dev : g.plan().instances_of[f])
            m.universe.insert({f, dev});

    std::vector<RealizedModel::Node> seq{m.begin};
    for (const auto& [f, dev] : visits) {
        RealizedModel::Node node{f, dev};
        if (m.universe.count(node) == 0) continue; // not a deployed instance
        m.selected.insert(node);
        seq.push_back(node);
    }
    seq.push_back(m.end);

    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        m.path.emplace_back(seq[i], seq[i + 1]);
        m.arc_order[{seq[i], seq[i + 1]}] = m.beta - static_cast<int>(i) - 1;
    }
    return m;
}

inline std::string node_name(const RealizedModel& m, const RealizedModel::Node& n) {
    if (n == m.begin) return "begin";
    if (n == m.end) return "end";
    return "f" + std::to_string(n.first + 1) + "@" + std::to_string(n.second);
}

} // namespace detail

/// Checks the realized arc/node/order assignment of a visit sequence
/// against every structural constraint family of the placement model:
/// path flow balance, per-function coverage, node/path consistency,
/// cycle freedom, order-variable bookkeeping, chain order, the deadline,
/// self-loops and variable domains.
inline std::vector<ConstraintVerdict> validate_visits(const InstanceGraph& g,
                                                      const VisitPlan& visits,
                                                      double deadline_ms) {
    using Node = detail::RealizedModel::Node;
    const detail::RealizedModel m = detail::realize(g, visits);
    std::vector<ConstraintVerdict> out;
    auto report = [&out](const std::string& family, bool pass, const std::string& detail) {
        out.push_back({family, pass, detail});
    };

    std::map<Node, int> in_deg, out_deg, in_order, out_order;
    for (const auto& [arc, o] : m.arc_order) {
        out_deg[arc.first] += 1;
        in_deg[arc.second] += 1;
        out_order[arc.first] += o;
        in_order[arc.second] += o;
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (const Node& n : m.universe) {
            const int din = in_deg.count(n) ? in_deg.at(n) : 0;
            const int dout = out_deg.count(n) ? out_deg.at(n) : 0;
            int expect_extra = 0; // dout - din
            if (n == m.begin) expect_extra = 1;
            else if (n == m.end) expect_extra = -1;
            if (dout - din != expect_extra) {
                pass = false;
                detail << detail::node_name(m, n) << " in=" << din << " out=" << dout << "; ";
            }
        }
        report("flow_conservation", pass, pass ? "balanced at every node" : detail.str());
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (std::size_t f = 0; f < m.num_functions; ++f) {
            int count = 0;
            for (const Node& n : m.selected)
                if (n.first == f) ++count;
            if (count != 1) {
                pass = false;
                detail << "function " << f + 1 << " selected " << count << " times; ";
            }
        }
        report("one_instance_per_function", pass,
               pass ? "each function covered exactly once" : detail.str());
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (const Node& n : m.universe) {
            if (n == m.begin || n == m.end) continue;
            const int dout = out_deg.count(n) ? out_deg.at(n) : 0;
            const int y = m.selected.count(n) ? 1 : 0;
            if (dout != y) {
                pass = false;
                detail << detail::node_name(m, n) << " y=" << y << " out=" << dout << "; ";
            }
        }
        report("include_on_path", pass, pass ? "selected nodes lie on the path" : detail.str());
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& [n, d] : in_deg)
            if (d > 1) {
                pass = false;
                detail << detail::node_name(m, n) << " entered " << d << " times; ";
            }
        for (const auto& [n, d] : out_deg)
            if (d > 1) {
                pass = false;
                detail << detail::node_name(m, n) << " left " << d << " times; ";
            }
        report("no_cycle", pass, pass ? "no node visited twice" : detail.str());
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& [arc, o] : m.arc_order) {
            if (o > m.beta) { // x is 1 for every stored arc
                pass = false;
                detail << "order " << o << " above bound " << m.beta << "; ";
            }
        }
        report("order_link_bound", pass,
               pass ? "order positive only on selected links" : detail.str());
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (const Node& n : m.universe) {
            const int oin = in_order.count(n) ? in_order.at(n) : 0;
            const int oout = out_order.count(n) ? out_order.at(n) : 0;
            const int xout = out_deg.count(n) ? out_deg.at(n) : 0;
            if (n == m.end) continue;
            const int lhs = n == m.begin ? oin + m.beta : oin;
            if (lhs != oout + xout) {
                pass = false;
                detail << detail::node_name(m, n) << " order in=" << oin << " out=" << oout
                       << " x_out=" << xout << "; ";
            }
        }
        report("order_counting", pass,
               pass ? "order decreases by one along the path" : detail.str());
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (const Node& phi : m.universe) {
            if (phi == m.begin || phi == m.end) continue;
            for (const Node& psi : m.universe) {
                if (psi == m.begin || psi == m.end || psi == phi) continue;
                if (psi.first != phi.first + 1) continue; // consecutive chain positions only
                const int y_phi = m.selected.count(phi) ? 1 : 0;
                const int y_psi = m.selected.count(psi) ? 1 : 0;
                const int o_in_phi = in_order.count(phi) ? in_order.at(phi) : 0;
                const int o_in_psi = in_order.count(psi) ? in_order.at(psi) : 0;
                const int x_phi_psi = m.arc_order.count({phi, psi}) ? 1 : 0;
                const int x_in_psi = in_deg.count(psi) ? in_deg.at(psi) : 0;
                const int lhs = o_in_phi - x_phi_psi - m.beta * y_phi + m.beta;
                const int rhs = o_in_psi - m.beta * y_psi + m.beta * x_in_psi;
                if (lhs < rhs) {
                    pass = false;
                    detail << detail::node_name(m, phi) << " -> " << detail::node_name(m, psi)
                           << " lhs=" << lhs << " rhs=" << rhs << "; ";
                }
            }
        }
        report("chain_order", pass, pass ? "chain positions visited in order" : detail.str());
    }

    {
        double total_ms = 0.0;
        bool finite = true;
        for (const auto& [arc, o] : m.arc_order) {
            (void)o;
            // Dataflow for the i-th arc of a regular path is dataflow[i];
            // for degenerate sequences fall back to the source position.
            const std::size_t pos =
                arc.first == m.begin ? 0
                                     : std::min(arc.first.first + 1,
                                                g.request().chain.dataflow_mb.size() - 1);
            const auto& path = g.paths().shortest_path(arc.first.second, arc.second.second);
            const auto t =
                transfer_metrics(g.topology(), g.load(), path, g.request().chain.dataflow_mb[pos]);
            if (!t.has_value()) {
                finite = false;
                break;
            }
            total_ms += t->time_ms;
        }
        for (const Node& n : m.selected) {
            const auto e = execution_time_ms(g.topology(), g.load(), g.topology().device_index(n.second),
                                             g.request().chain.function_size_mi[n.first]);
            if (!e.has_value()) {
                finite = false;
                break;
            }
            total_ms += *e;
        }
        const bool pass = finite && total_ms <= deadline_ms + kTimeTolMs;
        std::ostringstream detail;
        if (!finite)
            detail << "some selected resource is saturated";
        else
            detail << total_ms << " ms vs deadline " << deadline_ms << " ms";
        report("deadline", pass, detail.str());
    }

    {
        bool pass = true;
        for (const auto& [arc, o] : m.arc_order) {
            (void)o;
            if (arc.first == arc.second) pass = false;
        }
        report("no_self_loop", pass, pass ? "no self loops" : "self loop selected");
    }

    {
        bool pass = true;
        std::ostringstream detail;
        for (const auto& [arc, o] : m.arc_order) {
            (void)arc;
            if (o < 0 || o > m.beta) {
                pass = false;
                detail << "order value " << o << " outside [0," << m.beta << "]; ";
            }
        }
        for (const Node& n : m.selected)
            if (n == m.begin || n == m.end) {
                pass = false;
                detail << "virtual endpoint carries a selection variable; ";
            }
        report("domains", pass, pass ? "all variables within domains" : detail.str());
    }

    return out;
}

/// Validates a solver outcome's placement as the canonical in-order visit
/// sequence. Intended for Feasible outcomes; every family passes for any
/// correct solver output.
inline std::vector<ConstraintVerdict> validate_placement(const InstanceGraph& g,
                                                         const PlacementOutcome& outcome) {
    VisitPlan visits;
    for (std::size_t f = 0; f < outcome.placement.device_of.size(); ++f)
        visits.emplace_back(f, outcome.placement.device_of[f]);
    return validate_visits(g, visits, g.request().deadline_ms);
}

inline bool all_pass(const std::vector<ConstraintVerdict>& verdicts) {
    for (const auto& v : verdicts)
        if (!v.pass) return false;
    return true;
}

} // namespace chainplace
