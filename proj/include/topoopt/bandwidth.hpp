#pragma once

#include <string>
#include <variant>
#include <vector>

#include "topoopt/sparse.hpp"
#include "topoopt/topology.hpp"

namespace topoopt {

inline constexpr double kDefaultBandwidth = 9.76;  // GB/s per device
inline constexpr double kDefaultCommTime = 5.01;   // ms per synchronization round
inline constexpr double kDefaultCompTime = 15.21;  // ms per local step

struct BandwidthProfile {
    std::vector<double> bandwidths;  // per node, positive
    std::vector<int> edge_caps;      // per node; empty means n-1 for all
};

struct Allocation {
    double b_unit = 0.0;
    std::vector<int> edges_per_node;
};

// Splits an edge budget r across nodes proportionally to bandwidth: grows a
// per-node edge count under a shared unit bandwidth until half the count sum
// reaches r, then trims the largest counts (ties to the highest index) until
// it equals r exactly. Ratios are floored with a 1e-9 relative guard so
// exact quotients survive roundoff. Raises InfeasibleError when caps make r
// unreachable or when a growth step cannot make progress.
Allocation allocate_edge_capacity(const BandwidthProfile& profile, int r);

// One capacity row: the edge columns it covers and its budget.
struct CapacityRow {
    std::string label;
    std::vector<int> edge_cols;  // indices into enumerate_edges(n)
    int capacity = 0;
};

struct CapacitySystem {
    int n = 0;          // devices
    int num_edges = 0;  // n(n-1)/2 columns
    bool equality = false;  // rows hold with equality (degree-style) or as upper bounds
    std::vector<CapacityRow> rows;
    std::vector<char> allowed;  // per edge column; 0 marks pairs no resource can carry

    SparseMatrix row_matrix() const;  // rows x num_edges, binary
    std::vector<int> loads(const std::vector<char>& selected) const;
    int implied_edge_total() const;  // sum(capacity)/2 for equality systems
};

// Row per node marking its incident pairs; capacities are the target
// degrees. Degree sum must be even (handshake) and each degree < n.
CapacitySystem node_level_constraints(int n, const std::vector<int>& degrees);

struct ServerLink {
    std::string name;
    double bandwidth = 0.0;
    int capacity = 0;
};

// Shared-medium model of one multi-device server: every unordered device
// pair routes over a fixed set of links.
struct ServerTree {
    int n_devices = 0;
    std::vector<ServerLink> links;
    std::vector<std::vector<int>> routes;  // per edge column, link indices

    void validate() const;
};

// Three-tier 8-device server: four leaf pairs, two 4-device groups, one
// root. Pair traffic is accounted on the highest tier it crosses, so leaf
// slots are 1, group slots 4, root slots 16 (every pair has one slot).
ServerTree tiered8_tree(double leaf_bw, double group_bw, double root_bw);

// Row per link marking every pair whose route traverses it.
CapacitySystem intra_server_constraints(const ServerTree& tree);

struct BCubeSpec {
    int p = 0;  // switch radix
    int k = 0;  // layers; n = p^k servers
    std::vector<double> layer_bandwidths;  // empty means kDefaultBandwidth per layer

    int n_servers() const;
};

// Row per server port per layer (layer-major). A pair is assignable iff the
// base-p addresses differ in exactly one digit; its column has ones at both
// endpoints' ports of that layer. Port capacity is p-1.
CapacitySystem bcube_constraints(const BCubeSpec& spec);

struct HomogeneousScenario {
    double bandwidth = kDefaultBandwidth;
};
struct NodeScenario {
    std::vector<double> bandwidths;
};
struct IntraScenario {
    ServerTree tree;
};
struct BCubeScenario {
    BCubeSpec spec;
};
// Fixed per-iteration time, for replaying published timing protocols.
struct FixedScenario {
    double t_iter_ms = 0.0;
};

using Scenario =
    std::variant<HomogeneousScenario, NodeScenario, IntraScenario, BCubeScenario, FixedScenario>;

// Bandwidth each edge sees once every node/link shares its capacity among
// the edges mapped to it. Throws on an edge the scenario cannot carry.
std::vector<double> edge_bandwidths(const Topology& t, const Scenario& s);
// min over edges; throws on an empty edge set or a FixedScenario.
double min_edge_bandwidth(const Topology& t, const Scenario& s);

// Wall-clock scaling constants for one deployment.
struct TimeModel {
    double b_avail = kDefaultBandwidth;
    double t_comm = kDefaultCommTime;
    double t_comp = kDefaultCompTime;
    int c_iter = 1;  // iterations per epoch
};

double iter_time(double b_avail, double b_min, double t_comm);
double epoch_time(double b_avail, double b_min, double t_comm, double t_comp, int c_iter);
double iter_time(const TimeModel& model, double b_min);
double epoch_time(const TimeModel& model, double b_min);

// {"mode": "homogeneous"|"node"|"intra"|"bcube"|"fixed", ...}
Scenario scenario_from_json(const std::string& text);

}  // namespace topoopt
