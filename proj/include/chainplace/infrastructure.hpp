#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace chainplace {

using DeviceId = int;

/// Power profile of an edge device: constant idle power plus a
/// piecewise-linear dynamic part with one breakpoint per core count
/// (dyn_breakpoints_w[j] is the dynamic power with j cores busy).
struct DevicePowerProfile {
    double idle_w = 0.0;
    std::vector<double> dyn_breakpoints_w; // size cores+1, first entry 0, non-decreasing

    /// Linear profile ramping from 0 to full_load_w across all cores.
    static DevicePowerProfile linear(double idle_w, double full_load_w, int cores) {
        DevicePowerProfile p;
        p.idle_w = idle_w;
        p.dyn_breakpoints_w.resize(static_cast<std::size_t>(cores) + 1);
        for (int j = 0; j <= cores; ++j)
            p.dyn_breakpoints_w[static_cast<std::size_t>(j)] =
                full_load_w * static_cast<double>(j) / static_cast<double>(cores);
        return p;
    }
};

struct EdgeDevice {
    DeviceId id = 0;
    double compute_capacity_mi_ms = 0.0; // full-device capacity in MI/ms
    int cores = 1;
    DevicePowerProfile power;
};

/// Undirected communication link, stored with canonical endpoint order a < b.
/// Both directions share the same delay, bandwidth and utilization.
struct NetworkLink {
    DeviceId a = 0;
    DeviceId b = 0;
    double propagation_delay_ms = 0.0;
    double bandwidth_mb_ms = 0.0; // nominal capacity in MB/ms
    double idle_w = 0.0;
    double dyn_w = 0.0;
};

/// Immutable physical graph of edge devices and links. Construction sorts
/// devices by id and links by canonical endpoint pair, validates every
/// field invariant and requires the graph to be connected. Safe to share
/// read-only across threads.
class Topology {
public:
    Topology(std::vector<EdgeDevice> devices, std::vector<NetworkLink> links)
        : devices_(std::move(devices)), links_(std::move(links)) {
        std::sort(devices_.begin(), devices_.end(),
                  [](const EdgeDevice& x, const EdgeDevice& y) { return x.id < y.id; });
        for (auto& l : links_)
            if (l.a > l.b) std::swap(l.a, l.b);
        std::sort(links_.begin(), links_.end(), [](const NetworkLink& x, const NetworkLink& y) {
            return std::pair(x.a, x.b) < std::pair(y.a, y.b);
        });
        validate();
        for (std::size_t i = 0; i < devices_.size(); ++i)
            device_index_[devices_[i].id] = i;
        for (std::size_t i = 0; i < links_.size(); ++i)
            link_index_[{links_[i].a, links_[i].b}] = i;
    }

    const std::vector<EdgeDevice>& devices() const { return devices_; }
    const std::vector<NetworkLink>& links() const { return links_; }

    bool has_device(DeviceId id) const { return device_index_.count(id) != 0; }

    std::size_t device_index(DeviceId id) const {
        auto it = device_index_.find(id);
        if (it == device_index_.end())
            throw std::out_of_range("unknown device id " + std::to_string(id));
        return it->second;
    }

    std::size_t link_index(DeviceId a, DeviceId b) const {
        if (a > b) std::swap(a, b);
        auto it = link_index_.find({a, b});
        if (it == link_index_.end())
            throw std::out_of_range("unknown link " + std::to_string(a) + "-" + std::to_string(b));
        return it->second;
    }

private:
    void validate() const {
        if (devices_.empty()) throw std::invalid_argument("topology has no devices");
        for (std::size_t i = 0; i < devices_.size(); ++i) {
            const auto& d = devices_[i];
            if (i > 0 && devices_[i - 1].id == d.id)
                throw std::invalid_argument("duplicate device id " + std::to_string(d.id));
            if (d.compute_capacity_mi_ms <= 0.0)
                throw std::invalid_argument("device " + std::to_string(d.id) +
                                            ": compute capacity must be > 0");
            if (d.cores < 1)
                throw std::invalid_argument("device " + std::to_string(d.id) + ": cores must be >= 1");
            const auto& bp = d.power.dyn_breakpoints_w;
            if (bp.size() != static_cast<std::size_t>(d.cores) + 1)
                throw std::invalid_argument("device " + std::to_string(d.id) +
                                            ": power profile needs cores+1 breakpoints");
            if (bp.front() != 0.0)
                throw std::invalid_argument("device " + std::to_string(d.id) +
                                            ": dynamic power at zero utilization must be 0");
            if (d.power.idle_w < 0.0)
                throw std::invalid_argument("device " + std::to_string(d.id) + ": idle power < 0");
            for (std::size_t j = 1; j < bp.size(); ++j)
                if (bp[j] < bp[j - 1])
                    throw std::invalid_argument("device " + std::to_string(d.id) +
                                                ": dynamic power breakpoints must be non-decreasing");
        }
        auto known = [&](DeviceId id) {
            return std::any_of(devices_.begin(), devices_.end(),
                               [&](const EdgeDevice& d) { return d.id == id; });
        };
        for (std::size_t i = 0; i < links_.size(); ++i) {
            const auto& l = links_[i];
            if (!known(l.a) || !known(l.b))
                throw std::invalid_argument("link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
                                            ": endpoint not in topology");
            if (l.a == l.b)
                throw std::invalid_argument("link " + std::to_string(l.a) + "-" + std::to_string(l.b) +
                                            ": self-loop");
            if (i > 0 && links_[i - 1].a == l.a && links_[i - 1].b == l.b)
                throw std::invalid_argument("duplicate link " + std::to_string(l.a) + "-" +
                                            std::to_string(l.b));
            if (l.propagation_delay_ms < 0.0)
                throw std::invalid_argument("link: propagation delay < 0");
            if (l.bandwidth_mb_ms <= 0.0)
                throw std::invalid_argument("link: bandwidth must be > 0");
            if (l.idle_w < 0.0 || l.dyn_w < 0.0)
                throw std::invalid_argument("link: powers must be >= 0");
        }
        if (!connected())
            throw std::invalid_argument("topology graph is not connected");
    }

    bool connected() const {
        std::vector<bool> seen(devices_.size(), false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        auto idx = [&](DeviceId id) {
            for (std::size_t i = 0; i < devices_.size(); ++i)
                if (devices_[i].id == id) return i;
            return devices_.size();
        };
        while (!stack.empty()) {
            std::size_t v = stack.back();
            stack.pop_back();
            for (const auto& l : links_) {
                std::size_t ia = idx(l.a), ib = idx(l.b);
                std::size_t other = devices_.size();
                if (ia == v) other = ib;
                else if (ib == v) other = ia;
                if (other < devices_.size() && !seen[other]) {
                    seen[other] = true;
                    stack.push_back(other);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool s) { return s; });
    }

    std::vector<EdgeDevice> devices_;
    std::vector<NetworkLink> links_;
    std::map<DeviceId, std::size_t> device_index_;
    std::map<std::pair<DeviceId, DeviceId>, std::size_t> link_index_;
};

/// Utilization snapshot at one decision point. Entries are fractions in
/// [0,1], aligned with Topology::devices() / Topology::links() order.
/// A per-run value; never shared mutably.
struct LoadState {
    std::vector<double> device_u;
    std::vector<double> link_u;

    static LoadState uniform(const Topology& topo, double device_frac, double link_frac = 0.0) {
        LoadState s;
        s.device_u.assign(topo.devices().size(), device_frac);
        s.link_u.assign(topo.links().size(), link_frac);
        s.validate(topo);
        return s;
    }

    void validate(const Topology& topo) const {
        if (device_u.size() != topo.devices().size())
            throw std::invalid_argument("load state: device entry count mismatch");
        if (link_u.size() != topo.links().size())
            throw std::invalid_argument("load state: link entry count mismatch");
        for (double u : device_u)
            if (!(u >= 0.0 && u <= 1.0))
                throw std::invalid_argument("load state: device utilization outside [0,1]");
        for (double u : link_u)
            if (!(u >= 0.0 && u <= 1.0))
                throw std::invalid_argument("load state: link utilization outside [0,1]");
    }
};

/// A physical route: ordered link hops plus the device sequence they touch.
struct PathDescriptor {
    std::vector<std::size_t> hop_links;  // indices into Topology::links()
    std::vector<DeviceId> device_seq;    // src..dst inclusive; single element when src == dst
    double total_delay_ms = 0.0;

    bool empty() const { return hop_links.empty(); }
};

/// All-pairs shortest paths by propagation delay (load never reroutes).
/// Equal-delay ties resolve to the lexicographically smallest device-id
/// sequence so routing is reproducible. Immutable after construction.
class PathTable {
public:
    explicit PathTable(const Topology& topo) : topo_(&topo) {
        build();
    }

    /// Minimum-delay route between two devices. src == dst yields an empty
    /// path with delay 0. Throws on unknown ids or unreachable pairs.
    const PathDescriptor& shortest_path(DeviceId src, DeviceId dst) const {
        std::size_t i = topo_->device_index(src);
        std::size_t j = topo_->device_index(dst);
        const auto& entry = table_[i][j];
        if (!entry.has_value())
            throw std::runtime_error("no path between device " + std::to_string(src) + " and " +
                                     std::to_string(dst));
        return *entry;
    }

    const Topology& topology() const { return *topo_; }

private:
    // Delay sums of alternate equal routes may differ in the last bits.
    static constexpr double kDelayTieTol = 1e-12;

    static bool better(double d1, const std::vector<DeviceId>& s1, double d2,
                       const std::vector<DeviceId>& s2) {
        if (d1 < d2 - kDelayTieTol) return true;
        if (d1 > d2 + kDelayTieTol) return false;
        return s1 < s2;
    }

    void build() {
        const auto& devices = topo_->devices();
        const auto& links = topo_->links();
        const std::size_t n = devices.size();
        table_.assign(n, std::vector<std::optional<PathDescriptor>>(n));

        for (std::size_t src = 0; src < n; ++src) {
            // Bellman-Ford style relaxation with explicit sequences; the
            // graphs here are small and this makes tie-breaking exact.
            std::vector<std::optional<PathDescriptor>>& row = table_[src];
            PathDescriptor self;
            self.device_seq = {devices[src].id};
            row[src] = self;
            bool changed = true;
            while (changed) {
                changed = false;
                for (std::size_t li = 0; li < links.size(); ++li) {
                    const auto& l = links[li];
                    const std::size_t ia = topo_->device_index(l.a);
                    const std::size_t ib = topo_->device_index(l.b);
                    changed |= relax(row, ia, ib, li, l.propagation_delay_ms);
                    changed |= relax(row, ib, ia, li, l.propagation_delay_ms);
                }
            }
        }
    }

    bool relax(std::vector<std::optional<PathDescriptor>>& row, std::size_t from, std::size_t to,
               std::size_t link_idx, double delay) {
        if (!row[from].has_value()) return false;
        const PathDescriptor& base = *row[from];
        const double cand_delay = base.total_delay_ms + delay;
        std::vector<DeviceId> cand_seq = base.device_seq;
        cand_seq.push_back(topo_->devices()[to].id);
        if (row[to].has_value() &&
            !better(cand_delay, cand_seq, row[to]->total_delay_ms, row[to]->device_seq))
            return false;
        PathDescriptor d;
        d.hop_links = base.hop_links;
        d.hop_links.push_back(link_idx);
        d.device_seq = std::move(cand_seq);
        d.total_delay_ms = cand_delay;
        row[to] = std::move(d);
        return true;
    }

    const Topology* topo_;
    std::vector<std::vector<std::optional<PathDescriptor>>> table_;
};

/// Bandwidth left on a link for the request being placed: (1 - u) * B.
inline double available_bandwidth(const Topology& topo, const LoadState& load,
                                  std::size_t link_index) {
    if (link_index >= topo.links().size())
        throw std::out_of_range("link index out of range");
    return (1.0 - load.link_u[link_index]) * topo.links()[link_index].bandwidth_mb_ms;
}

/// Compute capacity a newly placed function instance would get: at most one
/// core, and never more than the device's remaining headroom.
inline double available_compute(const Topology& topo, const LoadState& load,
                                std::size_t device_index) {
    if (device_index >= topo.devices().size())
        throw std::out_of_range("device index out of range");
    const EdgeDevice& d = topo.devices()[device_index];
    const double one_core = d.compute_capacity_mi_ms / static_cast<double>(d.cores);
    const double headroom = (1.0 - load.device_u[device_index]) * d.compute_capacity_mi_ms;
    return std::min(one_core, headroom);
}

/// Piecewise-linear dynamic device power at utilization u. On segment
/// j/k <= u <= (j+1)/k the value interpolates between the j-th and
/// (j+1)-th breakpoints; exact at every breakpoint.
inline double dynamic_power(const DevicePowerProfile& profile, double u) {
    if (!(u >= 0.0 && u <= 1.0))
        throw std::domain_error("utilization outside [0,1]");
    const int k = static_cast<int>(profile.dyn_breakpoints_w.size()) - 1;
    int j = static_cast<int>(std::floor(u * k));
    j = std::min(j, k - 1);
    const double pj = profile.dyn_breakpoints_w[static_cast<std::size_t>(j)];
    const double pj1 = profile.dyn_breakpoints_w[static_cast<std::size_t>(j) + 1];
    return (pj1 - pj) * k * u + ((j + 1) * pj - j * pj1);
}

} // namespace chainplace
