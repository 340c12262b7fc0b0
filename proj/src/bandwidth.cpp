#include "topoopt/bandwidth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "topoopt/errors.hpp"

namespace topoopt {

namespace {

// Floors a ratio that is often an exact integer; the relative nudge keeps
// values like 3.0 stored as 2.999...97 from collapsing to 2.
long long guarded_floor(double x) {
    return static_cast<long long>(std::floor(x + 1e-9 * (1.0 + std::abs(x))));
}

}  // namespace

Allocation allocate_edge_capacity(const BandwidthProfile& profile, int r) {
    const int n = static_cast<int>(profile.bandwidths.size());
    if (n < 2) throw std::invalid_argument("allocate_edge_capacity: need at least 2 nodes");
    for (int i = 0; i < n; ++i) {
        if (!(profile.bandwidths[i] > 0.0))
            throw std::invalid_argument("allocate_edge_capacity: bandwidth of node " +
                                        std::to_string(i) + " must be positive");
    }
    std::vector<int> caps = profile.edge_caps;
    if (caps.empty()) caps.assign(n, n - 1);
    if (static_cast<int>(caps.size()) != n)
        throw std::invalid_argument("allocate_edge_capacity: edge_caps size mismatch");
    long long cap_sum = 0;
    for (int i = 0; i < n; ++i) {
        if (caps[i] < 0 || caps[i] > n - 1)
            throw std::invalid_argument("allocate_edge_capacity: edge cap of node " +
                                        std::to_string(i) + " outside [0, n-1]");
        cap_sum += caps[i];
    }
    const long long max_edges = static_cast<long long>(n) * (n - 1) / 2;
    if (r < 0 || r > max_edges)
        throw std::invalid_argument("allocate_edge_capacity: r outside [0, n(n-1)/2]");
    if (cap_sum < 2LL * r)
        throw InfeasibleError("edge budget " + std::to_string(r) +
                              " exceeds half the edge-cap sum " + std::to_string(cap_sum));

    double b_unit = *std::min_element(profile.bandwidths.begin(), profile.bandwidths.end());
    std::vector<int> e(n);
    auto recount = [&](double unit) {
        std::vector<int> out(n);
        for (int i = 0; i < n; ++i) {
            long long q = guarded_floor(profile.bandwidths[i] / unit);
            out[i] = static_cast<int>(std::min<long long>(q, caps[i]));
        }
        return out;
    };
    e = recount(b_unit);
    long long sum_e = 0;
    for (int v : e) sum_e += v;

    while (sum_e < 2LL * r) {
        double next_unit = 0.0;
        for (int i = 0; i < n; ++i)
            next_unit = std::max(next_unit, profile.bandwidths[i] / (e[i] + 1));
        std::vector<int> grown = recount(next_unit);
        if (grown == e)
            throw InfeasibleError("edge budget " + std::to_string(r) +
                                  " unreachable: growth step made no progress");
        b_unit = next_unit;
        e = std::move(grown);
        sum_e = 0;
        for (int v : e) sum_e += v;
    }
    while (sum_e > 2LL * r) {
        int pick = 0;
        for (int i = 1; i < n; ++i)
            if (e[i] >= e[pick]) pick = i;  // ties fall to the highest index
        --e[pick];
        --sum_e;
    }
    return Allocation{b_unit, std::move(e)};
}

SparseMatrix CapacitySystem::row_matrix() const {
    std::vector<Triplet> entries;
    for (int rix = 0; rix < static_cast<int>(rows.size()); ++rix)
        for (int col : rows[rix].edge_cols) entries.push_back({rix, col, 1.0});
    return SparseMatrix::from_triplets(static_cast<int>(rows.size()), num_edges, entries);
}

std::vector<int> CapacitySystem::loads(const std::vector<char>& selected) const {
    if (static_cast<int>(selected.size()) != num_edges)
        throw std::invalid_argument("CapacitySystem::loads: selection size mismatch");
    std::vector<int> out(rows.size(), 0);
    for (int rix = 0; rix < static_cast<int>(rows.size()); ++rix)
        for (int col : rows[rix].edge_cols)
            if (selected[col]) ++out[rix];
    return out;
}

int CapacitySystem::implied_edge_total() const {
    long long total = 0;
    for (const auto& row : rows) total += row.capacity;
    if (total % 2 != 0)
        throw std::invalid_argument("CapacitySystem: capacity sum is odd, no edge total");
    return static_cast<int>(total / 2);
}

CapacitySystem node_level_constraints(int n, const std::vector<int>& degrees) {
    if (n < 2) throw std::invalid_argument("node_level_constraints: need at least 2 nodes");
    if (static_cast<int>(degrees.size()) != n)
        throw std::invalid_argument("node_level_constraints: degree list size mismatch");
    long long sum = 0;
    for (int i = 0; i < n; ++i) {
        if (degrees[i] < 0 || degrees[i] > n - 1)
            throw std::invalid_argument("node_level_constraints: degree of node " +
                                        std::to_string(i) + " outside [0, n-1]");
        sum += degrees[i];
    }
    if (sum % 2 != 0)
        throw InfeasibleError("degree sum " + std::to_string(sum) + " is odd");

    CapacitySystem sys;
    sys.n = n;
    sys.num_edges = n * (n - 1) / 2;
    sys.equality = true;
    sys.allowed.assign(sys.num_edges, 1);
    sys.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        sys.rows[i].label = "node" + std::to_string(i);
        sys.rows[i].capacity = degrees[i];
    }
    const auto pairs = enumerate_edges(n);
    for (int col = 0; col < sys.num_edges; ++col) {
        sys.rows[pairs[col].first].edge_cols.push_back(col);
        sys.rows[pairs[col].second].edge_cols.push_back(col);
    }
    return sys;
}

void ServerTree::validate() const {
    if (n_devices < 2) throw std::invalid_argument("ServerTree: need at least 2 devices");
    const int m = n_devices * (n_devices - 1) / 2;
    if (static_cast<int>(routes.size()) != m)
        throw std::invalid_argument("ServerTree: expected one route per device pair");
    for (const auto& link : links) {
        if (link.name.empty()) throw std::invalid_argument("ServerTree: unnamed link");
        if (!(link.bandwidth > 0.0))
            throw std::invalid_argument("ServerTree: link " + link.name +
                                        " needs positive bandwidth");
        if (link.capacity < 0)
            throw std::invalid_argument("ServerTree: link " + link.name +
                                        " has negative capacity");
    }
    for (int col = 0; col < m; ++col) {
        if (routes[col].empty())
            throw std::invalid_argument("ServerTree: pair column " + std::to_string(col) +
                                        " routes over no link");
        for (int lix : routes[col])
            if (lix < 0 || lix >= static_cast<int>(links.size()))
                throw std::invalid_argument("ServerTree: route references unknown link");
    }
}

ServerTree tiered8_tree(double leaf_bw, double group_bw, double root_bw) {
    ServerTree tree;
    tree.n_devices = 8;
    for (int l = 0; l < 4; ++l)
        tree.links.push_back({"leaf" + std::to_string(l), leaf_bw, 1});
    tree.links.push_back({"group0", group_bw, 4});
    tree.links.push_back({"group1", group_bw, 4});
    tree.links.push_back({"root", root_bw, 16});
    const auto pairs = enumerate_edges(8);
    tree.routes.resize(pairs.size());
    for (int col = 0; col < static_cast<int>(pairs.size()); ++col) {
        const int i = pairs[col].first;
        const int j = pairs[col].second;
        if (i / 2 == j / 2)
            tree.routes[col] = {i / 2};  // same leaf pair
        else if (i / 4 == j / 4)
            tree.routes[col] = {4 + i / 4};  // same group, different leaves
        else
            tree.routes[col] = {6};  // crosses the root
    }
    tree.validate();
    return tree;
}

CapacitySystem intra_server_constraints(const ServerTree& tree) {
    tree.validate();
    CapacitySystem sys;
    sys.n = tree.n_devices;
    sys.num_edges = tree.n_devices * (tree.n_devices - 1) / 2;
    sys.equality = false;
    sys.allowed.assign(sys.num_edges, 1);
    sys.rows.resize(tree.links.size());
    for (int lix = 0; lix < static_cast<int>(tree.links.size()); ++lix) {
        sys.rows[lix].label = tree.links[lix].name;
        sys.rows[lix].capacity = tree.links[lix].capacity;
    }
    for (int col = 0; col < sys.num_edges; ++col)
        for (int lix : tree.routes[col]) sys.rows[lix].edge_cols.push_back(col);
    return sys;
}

int BCubeSpec::n_servers() const {
    if (p < 2 || k < 1) throw std::invalid_argument("BCubeSpec: need p >= 2 and k >= 1");
    long long n = 1;
    for (int i = 0; i < k; ++i) {
        n *= p;
        if (n > 4096) throw std::invalid_argument("BCubeSpec: p^k exceeds 4096 servers");
    }
    return static_cast<int>(n);
}

CapacitySystem bcube_constraints(const BCubeSpec& spec) {
    const int n = spec.n_servers();
    if (!spec.layer_bandwidths.empty() &&
        static_cast<int>(spec.layer_bandwidths.size()) != spec.k)
        throw std::invalid_argument("BCubeSpec: expected one bandwidth per layer");

    CapacitySystem sys;
    sys.n = n;
    sys.num_edges = n * (n - 1) / 2;
    sys.equality = false;
    sys.allowed.assign(sys.num_edges, 0);
    sys.rows.resize(static_cast<size_t>(spec.k) * n);
    for (int layer = 0; layer < spec.k; ++layer)
        for (int u = 0; u < n; ++u) {
            auto& row = sys.rows[static_cast<size_t>(layer) * n + u];
            row.label = "layer" + std::to_string(layer) + "/server" + std::to_string(u);
            row.capacity = spec.p - 1;
        }

    const auto pairs = enumerate_edges(n);
    for (int col = 0; col < sys.num_edges; ++col) {
        int u = pairs[col].first, v = pairs[col].second;
        int diff_layer = -1, diffs = 0;
        int du = u, dv = v;
        for (int layer = 0; layer < spec.k; ++layer) {
            if (du % spec.p != dv % spec.p) {
                ++diffs;
                diff_layer = layer;
            }
            du /= spec.p;
            dv /= spec.p;
        }
        if (diffs != 1) continue;  // no single switch connects this pair
        sys.allowed[col] = 1;
        sys.rows[static_cast<size_t>(diff_layer) * n + u].edge_cols.push_back(col);
        sys.rows[static_cast<size_t>(diff_layer) * n + v].edge_cols.push_back(col);
    }
    return sys;
}

namespace {

std::vector<double> node_share_bandwidths(const Topology& t, const std::vector<double>& node_bw) {
    const auto deg = t.degrees();
    std::vector<double> out(t.edges.size());
    for (size_t col = 0; col < t.edges.size(); ++col) {
        const auto [i, j] = t.edges[col];
        out[col] = std::min(node_bw[i] / deg[i], node_bw[j] / deg[j]);
    }
    return out;
}

std::vector<double> capacity_share_bandwidths(const Topology& t, const CapacitySystem& sys,
                                              const std::vector<double>& row_bw) {
    std::vector<char> selected(sys.num_edges, 0);
    for (const auto& [i, j] : t.edges) selected[edge_index(sys.n, i, j)] = 1;
    for (const auto& [i, j] : t.edges)
        if (!sys.allowed[edge_index(sys.n, i, j)])
            throw std::invalid_argument("edge {" + std::to_string(i) + "," + std::to_string(j) +
                                        "} is not carried by any resource");
    const auto load = sys.loads(selected);

    std::vector<double> per_edge_min(sys.num_edges, std::numeric_limits<double>::infinity());
    for (int rix = 0; rix < static_cast<int>(sys.rows.size()); ++rix) {
        if (load[rix] == 0) continue;
        const double share = row_bw[rix] / load[rix];
        for (int col : sys.rows[rix].edge_cols)
            per_edge_min[col] = std::min(per_edge_min[col], share);
    }
    std::vector<double> out(t.edges.size());
    for (size_t e = 0; e < t.edges.size(); ++e)
        out[e] = per_edge_min[edge_index(sys.n, t.edges[e].first, t.edges[e].second)];
    return out;
}

}  // namespace

std::vector<double> edge_bandwidths(const Topology& t, const Scenario& s) {
    t.validate();
    struct Visitor {
        const Topology& t;
        std::vector<double> operator()(const HomogeneousScenario& h) const {
            if (!(h.bandwidth > 0.0))
                throw std::invalid_argument("homogeneous bandwidth must be positive");
            return node_share_bandwidths(t, std::vector<double>(t.n, h.bandwidth));
        }
        std::vector<double> operator()(const NodeScenario& nsc) const {
            if (static_cast<int>(nsc.bandwidths.size()) != t.n)
                throw std::invalid_argument("node bandwidth list size mismatch");
            for (double b : nsc.bandwidths)
                if (!(b > 0.0)) throw std::invalid_argument("node bandwidths must be positive");
            return node_share_bandwidths(t, nsc.bandwidths);
        }
        std::vector<double> operator()(const IntraScenario& isc) const {
            const auto sys = intra_server_constraints(isc.tree);
            if (t.n != sys.n) throw std::invalid_argument("topology size mismatch with server");
            std::vector<double> row_bw(sys.rows.size());
            for (size_t r = 0; r < row_bw.size(); ++r) row_bw[r] = isc.tree.links[r].bandwidth;
            return capacity_share_bandwidths(t, sys, row_bw);
        }
        std::vector<double> operator()(const BCubeScenario& bsc) const {
            const auto sys = bcube_constraints(bsc.spec);
            if (t.n != sys.n) throw std::invalid_argument("topology size mismatch with bcube");
            std::vector<double> row_bw(sys.rows.size());
            for (int layer = 0; layer < bsc.spec.k; ++layer) {
                const double b = bsc.spec.layer_bandwidths.empty()
                                     ? kDefaultBandwidth
                                     : bsc.spec.layer_bandwidths[layer];
                if (!(b > 0.0)) throw std::invalid_argument("layer bandwidths must be positive");
                for (int u = 0; u < sys.n; ++u) row_bw[static_cast<size_t>(layer) * sys.n + u] = b;
            }
            return capacity_share_bandwidths(t, sys, row_bw);
        }
        std::vector<double> operator()(const FixedScenario&) const {
            throw std::invalid_argument("fixed-time scenario carries no bandwidth model");
        }
    };
    return std::visit(Visitor{t}, s);
}

double min_edge_bandwidth(const Topology& t, const Scenario& s) {
    if (t.edges.empty()) throw std::invalid_argument("min_edge_bandwidth: topology has no edges");
    const auto bw = edge_bandwidths(t, s);
    return *std::min_element(bw.begin(), bw.end());
}

double iter_time(double b_avail, double b_min, double t_comm) {
    if (!(b_avail > 0.0) || !(b_min > 0.0) || !(t_comm > 0.0))
        throw std::invalid_argument("iter_time: arguments must be positive");
    return (b_avail / b_min) * t_comm;
}

double epoch_time(double b_avail, double b_min, double t_comm, double t_comp, int c_iter) {
    if (t_comp < 0.0) throw std::invalid_argument("epoch_time: negative compute time");
    if (c_iter < 1) throw std::invalid_argument("epoch_time: need at least one step per epoch");
    return (iter_time(b_avail, b_min, t_comm) + t_comp) * c_iter;
}

double iter_time(const TimeModel& model, double b_min) {
    return iter_time(model.b_avail, b_min, model.t_comm);
}

double epoch_time(const TimeModel& model, double b_min) {
    return epoch_time(model.b_avail, b_min, model.t_comm, model.t_comp, model.c_iter);
}

namespace {

using nlohmann::json;

ServerTree tree_from_json(const json& j) {
    if (j.contains("preset")) {
        const std::string preset = j.at("preset").get<std::string>();
        if (preset != "tiered8")
            throw std::invalid_argument("unknown server preset: " + preset);
        const double leaf = j.value("leaf_bandwidth", kDefaultBandwidth / 2.0);
        const double group = j.value("group_bandwidth", kDefaultBandwidth / 2.0);
        const double root = j.value("root_bandwidth", kDefaultBandwidth);
        return tiered8_tree(leaf, group, root);
    }
    ServerTree tree;
    if (!j.contains("devices") || !j.contains("links") || !j.contains("routes"))
        throw std::invalid_argument("server tree config needs devices, links, routes");
    tree.n_devices = j.at("devices").get<int>();
    std::unordered_map<std::string, int> by_name;
    for (const auto& lj : j.at("links")) {
        ServerLink link;
        link.name = lj.at("name").get<std::string>();
        link.bandwidth = lj.at("bandwidth").get<double>();
        link.capacity = lj.at("capacity").get<int>();
        if (!by_name.emplace(link.name, static_cast<int>(tree.links.size())).second)
            throw std::invalid_argument("duplicate link name: " + link.name);
        tree.links.push_back(std::move(link));
    }
    const int m = tree.n_devices * (tree.n_devices - 1) / 2;
    tree.routes.assign(m, {});
    for (const auto& rj : j.at("routes")) {
        const auto& pair = rj.at("pair");
        if (!pair.is_array() || pair.size() != 2)
            throw std::invalid_argument("route pair must be [i, j]");
        const int col = edge_index(tree.n_devices, pair[0].get<int>(), pair[1].get<int>());
        if (!tree.routes[col].empty())
            throw std::invalid_argument("duplicate route for one device pair");
        for (const auto& name : rj.at("links")) {
            auto it = by_name.find(name.get<std::string>());
            if (it == by_name.end())
                throw std::invalid_argument("route references unknown link: " +
                                            name.get<std::string>());
            tree.routes[col].push_back(it->second);
        }
    }
    tree.validate();
    return tree;
}

}  // namespace

Scenario scenario_from_json(const std::string& text) {
    json j = json::parse(text);
    if (!j.contains("mode")) throw std::invalid_argument("scenario config needs a mode");
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "homogeneous") {
        HomogeneousScenario s;
        s.bandwidth = j.value("bandwidth", kDefaultBandwidth);
        return s;
    }
    if (mode == "node") {
        if (!j.contains("bandwidths"))
            throw std::invalid_argument("node scenario needs bandwidths");
        NodeScenario s;
        s.bandwidths = j.at("bandwidths").get<std::vector<double>>();
        return s;
    }
    if (mode == "intra") {
        if (!j.contains("tree")) throw std::invalid_argument("intra scenario needs a tree");
        return IntraScenario{tree_from_json(j.at("tree"))};
    }
    if (mode == "bcube") {
        BCubeSpec spec;
        spec.p = j.value("p", 0);
        spec.k = j.value("k", 0);
        if (j.contains("layer_bandwidths"))
            spec.layer_bandwidths = j.at("layer_bandwidths").get<std::vector<double>>();
        spec.n_servers();  // validates p, k
        return BCubeScenario{spec};
    }
    if (mode == "fixed") {
        if (!j.contains("t_iter_ms"))
            throw std::invalid_argument("fixed scenario needs t_iter_ms");
        FixedScenario s;
        s.t_iter_ms = j.at("t_iter_ms").get<double>();
        if (!(s.t_iter_ms > 0.0)) throw std::invalid_argument("t_iter_ms must be positive");
        return s;
    }
    throw std::invalid_argument("unknown scenario mode: " + mode);
}

}  // namespace topoopt
