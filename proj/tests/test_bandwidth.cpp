#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "oracles.hpp"
#include "topoopt/bandwidth.hpp"
#include "topoopt/errors.hpp"
#include "topoopt/rng.hpp"
#include "topoopt/topology.hpp"

using namespace topoopt;

namespace {

// Bandwidths drawn from the 1/64 grid: exactly representable in doubles and
// in the rational oracle, with quotient gaps far above the rounding guard,
// so both pipelines must agree bit for bit.
std::vector<double> grid_profile(int n, Rng& rng) {
    std::vector<double> b(n);
    for (double& v : b) v = static_cast<double>(1 + rng.below(1280)) / 64.0;
    return b;
}

Topology complete_uniform(int n, double w) {
    Topology t;
    t.n = n;
    t.edges = enumerate_edges(n);
    t.weights.assign(t.edges.size(), w);
    return t;
}

}  // namespace

TEST_CASE("two-tier profile splits the edge budget proportionally") {
    BandwidthProfile p;
    p.bandwidths.assign(8, 9.76);
    p.bandwidths.insert(p.bandwidths.end(), 8, 3.25);

    Allocation a16 = allocate_edge_capacity(p, 16);
    CHECK(a16.b_unit == doctest::Approx(3.25));
    for (int i = 0; i < 8; ++i) CHECK(a16.edges_per_node[i] == 3);
    for (int i = 8; i < 16; ++i) CHECK(a16.edges_per_node[i] == 1);

    Allocation a32 = allocate_edge_capacity(p, 32);
    CHECK(a32.b_unit == doctest::Approx(1.625));
    for (int i = 0; i < 8; ++i) CHECK(a32.edges_per_node[i] == 6);
    for (int i = 8; i < 16; ++i) CHECK(a32.edges_per_node[i] == 2);
}

TEST_CASE("uniform profile gives every node the same count") {
    BandwidthProfile p;
    p.bandwidths.assign(4, 1.0);
    Allocation a = allocate_edge_capacity(p, 6);
    CHECK(a.b_unit == doctest::Approx(1.0 / 3.0));
    for (int e : a.edges_per_node) CHECK(e == 3);
}

TEST_CASE("allocation agrees with the exact rational oracle on grid profiles") {
    Rng rng(51);
    int checked = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(31));
        BandwidthProfile p;
        p.bandwidths = grid_profile(n, rng);
        if (rng.uniform() < 0.5) {
            p.edge_caps.resize(n);
            for (int& c : p.edge_caps) c = static_cast<int>(rng.below(n));
        }
        const int max_r = n * (n - 1) / 2;
        const int r = static_cast<int>(rng.below(max_r)) + 1;

        std::vector<oracles::Fraction> fb;
        for (double v : p.bandwidths) fb.push_back(oracles::Fraction::from_double(v));
        std::vector<int> caps = p.edge_caps;
        oracles::AllocResult want = oracles::allocate_rational(fb, caps, r);

        if (want.outcome == oracles::AllocOutcome::infeasible_caps ||
            want.outcome == oracles::AllocOutcome::stalled) {
            CHECK_THROWS_AS(allocate_edge_capacity(p, r), InfeasibleError);
            continue;
        }
        Allocation got = allocate_edge_capacity(p, r);
        CHECK(got.b_unit == want.b_unit.to_double());  // bitwise
        REQUIRE(got.edges_per_node.size() == want.e.size());
        for (size_t i = 0; i < want.e.size(); ++i) CHECK(got.edges_per_node[i] == want.e[i]);
        ++checked;
    }
    CHECK(checked > 100);  // most random instances must be feasible
}

TEST_CASE("allocation invariants hold on random feasible instances") {
    Rng rng(52);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = 3 + static_cast<int>(rng.below(20));
        BandwidthProfile p;
        p.bandwidths = grid_profile(n, rng);
        const int r = 1 + static_cast<int>(rng.below(n * (n - 1) / 2));
        Allocation a;
        try {
            a = allocate_edge_capacity(p, r);
        } catch (const InfeasibleError&) {
            continue;
        }
        CHECK(std::accumulate(a.edges_per_node.begin(), a.edges_per_node.end(), 0) == 2 * r);
        for (int i = 0; i < n; ++i) {
            CHECK(a.edges_per_node[i] >= 0);
            CHECK(a.edges_per_node[i] <= n - 1);
            // No node is promised more aggregate unit bandwidth than it has.
            CHECK(a.edges_per_node[i] * a.b_unit <= p.bandwidths[i] * (1.0 + 1e-9));
        }
        CHECK(a.b_unit > 0.0);
    }
}

TEST_CASE("scaling all bandwidths by a power of two scales b_unit exactly") {
    Rng rng(53);
    BandwidthProfile p;
    p.bandwidths = grid_profile(12, rng);
    Allocation base = allocate_edge_capacity(p, 20);
    BandwidthProfile scaled = p;
    for (double& v : scaled.bandwidths) v *= 4.0;
    Allocation big = allocate_edge_capacity(scaled, 20);
    CHECK(big.b_unit == 4.0 * base.b_unit);
    CHECK(big.edges_per_node == base.edges_per_node);
}

TEST_CASE("edge caps that cannot reach the budget are infeasible") {
    BandwidthProfile p;
    p.bandwidths.assign(4, 1.0);
    p.edge_caps.assign(4, 1);
    CHECK_THROWS_AS(allocate_edge_capacity(p, 3), InfeasibleError);
    try {
        allocate_edge_capacity(p, 3);
    } catch (const InfeasibleError& e) {
        CHECK(std::string(e.what()).find("edge budget") != std::string::npos);
    }
}

TEST_CASE("allocation argument validation") {
    BandwidthProfile p;
    p.bandwidths = {1.0};
    CHECK_THROWS_AS(allocate_edge_capacity(p, 0), std::invalid_argument);  // n < 2

    p.bandwidths = {1.0, -2.0};
    CHECK_THROWS_AS(allocate_edge_capacity(p, 1), std::invalid_argument);

    p.bandwidths = {1.0, 2.0};
    p.edge_caps = {1};
    CHECK_THROWS_AS(allocate_edge_capacity(p, 1), std::invalid_argument);  // size mismatch

    p.edge_caps = {1, 5};
    CHECK_THROWS_AS(allocate_edge_capacity(p, 1), std::invalid_argument);  // cap > n-1

    p.edge_caps.clear();
    CHECK_THROWS_AS(allocate_edge_capacity(p, 2), std::invalid_argument);  // r > n(n-1)/2
    CHECK_THROWS_AS(allocate_edge_capacity(p, -1), std::invalid_argument);
}

TEST_CASE("node-level constraint system marks incident pairs") {
    CapacitySystem sys = node_level_constraints(3, {2, 2, 2});
    CHECK(sys.equality);
    CHECK(sys.n == 3);
    CHECK(sys.num_edges == 3);
    CHECK(sys.implied_edge_total() == 3);
    REQUIRE(sys.rows.size() == 3);
    Matrix m = sys.row_matrix().to_dense();
    // columns: (0,1), (0,2), (1,2)
    CHECK(m(0, 0) == 1.0);  CHECK(m(0, 1) == 1.0);  CHECK(m(0, 2) == 0.0);
    CHECK(m(1, 0) == 1.0);  CHECK(m(1, 1) == 0.0);  CHECK(m(1, 2) == 1.0);
    CHECK(m(2, 0) == 0.0);  CHECK(m(2, 1) == 1.0);  CHECK(m(2, 2) == 1.0);
    for (const auto& row : sys.rows) CHECK(row.capacity == 2);
    for (char c : sys.allowed) CHECK(c == 1);

    CapacitySystem two = node_level_constraints(2, {1, 1});
    CHECK(two.num_edges == 1);
    CHECK(two.implied_edge_total() == 1);
    CHECK(two.row_matrix().to_dense()(0, 0) == 1.0);
    CHECK(two.row_matrix().to_dense()(1, 0) == 1.0);
}

TEST_CASE("node-level constraints reject impossible degree lists") {
    CHECK_THROWS_AS(node_level_constraints(3, {1, 1, 1}), InfeasibleError);  // odd sum
    CHECK_THROWS_AS(node_level_constraints(3, {3, 1, 0}), std::invalid_argument);  // d >= n
    CHECK_THROWS_AS(node_level_constraints(3, {2, 2}), std::invalid_argument);  // size
}

TEST_CASE("loads counts selected columns per row") {
    CapacitySystem sys = node_level_constraints(4, {2, 2, 2, 2});
    std::vector<char> sel(6, 0);
    sel[edge_index(4, 0, 1)] = 1;
    sel[edge_index(4, 2, 3)] = 1;
    auto l = sys.loads(sel);
    CHECK(l == std::vector<int>{1, 1, 1, 1});
    sel[edge_index(4, 0, 2)] = 1;
    l = sys.loads(sel);
    CHECK(l == std::vector<int>{2, 1, 2, 1});
    CHECK_THROWS_AS(sys.loads(std::vector<char>(5, 0)), std::invalid_argument);
}

TEST_CASE("tiered 8-device server accounts each pair on its top tier") {
    ServerTree tree = tiered8_tree(4.88, 4.88, 9.76);
    tree.validate();
    CHECK(tree.n_devices == 8);
    REQUIRE(tree.links.size() == 7);

    CapacitySystem sys = intra_server_constraints(tree);
    CHECK_FALSE(sys.equality);
    CHECK(sys.n == 8);
    CHECK(sys.num_edges == 28);
    std::vector<int> caps;
    for (const auto& row : sys.rows) caps.push_back(row.capacity);
    CHECK(caps == std::vector<int>{1, 1, 1, 1, 4, 4, 16});
    // Every pair routes over exactly one link, so the slots partition all 28.
    int total = 0;
    for (const auto& row : sys.rows) total += static_cast<int>(row.edge_cols.size());
    CHECK(total == 28);
    for (char c : sys.allowed) CHECK(c == 1);

    // Leaf pairs sit on leaf rows.
    CHECK(sys.rows[0].edge_cols == std::vector<int>{edge_index(8, 0, 1)});
    CHECK(sys.rows[3].edge_cols == std::vector<int>{edge_index(8, 6, 7)});
    // A cross-group pair lands on the root row.
    const auto& root_cols = sys.rows[6].edge_cols;
    CHECK(std::find(root_cols.begin(), root_cols.end(), edge_index(8, 0, 4)) != root_cols.end());
    CHECK(root_cols.size() == 16);
}

TEST_CASE("explicit multi-link routes charge every traversed link") {
    // Two leaf switches under one root, full physical paths spelled out:
    // same-leaf pairs use their leaf link only; cross pairs use both leaves
    // and the root.
    ServerTree tree;
    tree.n_devices = 4;
    tree.links = {{"leaf_a", 4.0, 2}, {"leaf_b", 4.0, 2}, {"root", 8.0, 4}};
    tree.routes.resize(6);
    tree.routes[edge_index(4, 0, 1)] = {0};
    tree.routes[edge_index(4, 2, 3)] = {1};
    for (int i : {0, 1})
        for (int j : {2, 3}) tree.routes[edge_index(4, i, j)] = {0, 1, 2};
    tree.validate();

    CapacitySystem sys = intra_server_constraints(tree);
    CHECK(sys.num_edges == 6);
    REQUIRE(sys.rows.size() == 3);
    CHECK(sys.rows[0].edge_cols.size() == 5);  // leaf_a: (0,1) + 4 cross pairs
    CHECK(sys.rows[1].edge_cols.size() == 5);
    CHECK(sys.rows[2].edge_cols.size() == 4);  // root: cross pairs only
    CHECK(sys.rows[0].capacity == 2);
    CHECK(sys.rows[2].capacity == 4);

    std::vector<char> sel(6, 0);
    sel[edge_index(4, 0, 2)] = 1;
    auto l = sys.loads(sel);
    CHECK(l == std::vector<int>{1, 1, 1});
}

TEST_CASE("trivial two-device server") {
    ServerTree tree;
    tree.n_devices = 2;
    tree.links = {{"wire", 1.0, 1}};
    tree.routes = {{0}};
    tree.validate();
    CapacitySystem sys = intra_server_constraints(tree);
    CHECK(sys.num_edges == 1);
    REQUIRE(sys.rows.size() == 1);
    CHECK(sys.rows[0].edge_cols == std::vector<int>{0});
}

TEST_CASE("server tree validation rejects malformed input") {
    ServerTree tree;
    tree.n_devices = 2;
    tree.links = {{"wire", 1.0, 1}};
    tree.routes = {};  // wrong length
    CHECK_THROWS_AS(tree.validate(), std::invalid_argument);
    tree.routes = {{}};  // empty route
    CHECK_THROWS_AS(tree.validate(), std::invalid_argument);
    tree.routes = {{3}};  // unknown link
    CHECK_THROWS_AS(tree.validate(), std::invalid_argument);
    tree.routes = {{0}};
    tree.links[0].bandwidth = 0.0;
    CHECK_THROWS_AS(tree.validate(), std::invalid_argument);
}

TEST_CASE("bcube constraint geometry") {
    BCubeSpec spec{4, 2, {}};
    CHECK(spec.n_servers() == 16);
    CapacitySystem sys = bcube_constraints(spec);
    CHECK_FALSE(sys.equality);
    CHECK(sys.n == 16);
    CHECK(sys.num_edges == 120);
    REQUIRE(sys.rows.size() == 32);  // one port per server per layer
    for (const auto& row : sys.rows) CHECK(row.capacity == 3);

    // A pair is allowed iff the addresses differ in exactly one base-4 digit.
    int allowed_count = 0;
    const auto pairs = enumerate_edges(16);
    for (int c = 0; c < 120; ++c) {
        const auto [i, j] = pairs[c];
        const int d0 = (i % 4 != j % 4), d1 = (i / 4 != j / 4);
        CHECK(static_cast<bool>(sys.allowed[c]) == (d0 + d1 == 1));
        allowed_count += sys.allowed[c];
    }
    CHECK(allowed_count == 48);  // 16 * 3 * 2 / 2

    // Each allowed column has exactly two ones, on the two endpoints' ports
    // of the layer whose digit differs.
    Matrix m = sys.row_matrix().to_dense();
    for (int c = 0; c < 120; ++c) {
        int ones = 0;
        for (int rix = 0; rix < 32; ++rix) ones += m(rix, c) != 0.0;
        if (!sys.allowed[c]) {
            CHECK(ones == 0);
            continue;
        }
        CHECK(ones == 2);
        const auto [i, j] = pairs[c];
        const int layer = (i % 4 != j % 4) ? 0 : 1;
        CHECK(m(layer * 16 + i, c) == 1.0);
        CHECK(m(layer * 16 + j, c) == 1.0);
    }
}

TEST_CASE("degenerate bcubes") {
    CapacitySystem tiny = bcube_constraints({2, 1, {}});
    CHECK(tiny.n == 2);
    CHECK(tiny.num_edges == 1);
    REQUIRE(tiny.rows.size() == 2);
    for (const auto& row : tiny.rows) CHECK(row.capacity == 1);
    CHECK(tiny.allowed[0] == 1);
    auto l = tiny.loads(std::vector<char>{1});
    CHECK(l == std::vector<int>{1, 1});

    CapacitySystem tri = bcube_constraints({3, 1, {}});
    CHECK(tri.n == 3);
    REQUIRE(tri.rows.size() == 3);
    for (const auto& row : tri.rows) CHECK(row.capacity == 2);
    for (char c : tri.allowed) CHECK(c == 1);

    CHECK_THROWS_AS(bcube_constraints({1, 1, {}}), std::invalid_argument);
    CHECK_THROWS_AS(bcube_constraints({2, 1, {1.0, 2.0}}), std::invalid_argument);
}

TEST_CASE("homogeneous edge bandwidth is node bandwidth over degree") {
    Topology k5 = complete_uniform(5, 0.2);
    Scenario s = HomogeneousScenario{9.76};
    for (double v : edge_bandwidths(k5, s)) CHECK(v == doctest::Approx(9.76 / 4.0));
    CHECK(min_edge_bandwidth(k5, s) == doctest::Approx(2.44));

    Topology wire;
    wire.n = 2;
    wire.edges = {{0, 1}};
    wire.weights = {0.5};
    CHECK(min_edge_bandwidth(wire, s) == doctest::Approx(9.76));
}

TEST_CASE("node scenario bottlenecks on the slower endpoint") {
    Topology path;
    path.n = 3;
    path.edges = {{0, 1}, {1, 2}};
    path.weights = {0.1, 0.1};
    Scenario s = NodeScenario{{8.0, 4.0, 1.0}};
    auto eb = edge_bandwidths(path, s);
    // node 1 splits 4.0 across its two edges -> 2.0 on both sides
    CHECK(eb[0] == doctest::Approx(2.0));
    CHECK(eb[1] == doctest::Approx(1.0));  // node 2 is the bottleneck
    CHECK(min_edge_bandwidth(path, s) == doctest::Approx(1.0));
}

TEST_CASE("intra-server scenario divides link bandwidth by its load") {
    Topology t = generate_benchmark(BenchmarkKind::exponential, 8);
    Scenario s = IntraScenario{tiered8_tree(9.76, 9.76, 9.76)};
    // Ten of the twenty edges cross the two 4-device groups, so the root
    // link is split ten ways.
    CHECK(min_edge_bandwidth(t, s) == doctest::Approx(0.976));
}

TEST_CASE("scenario rejects edges it cannot carry") {
    Topology t;
    t.n = 16;
    t.edges = {{0, 5}};  // differs in both bcube digits
    t.weights = {0.1};
    Scenario s = BCubeScenario{{4, 2, {}}};
    CHECK_THROWS_AS(edge_bandwidths(t, s), std::invalid_argument);

    Topology ok;
    ok.n = 16;
    ok.edges = {{0, 1}, {0, 4}};
    ok.weights = {0.1, 0.1};
    auto eb = edge_bandwidths(ok, s);
    CHECK(eb.size() == 2);
    for (double v : eb) CHECK(v > 0.0);
}

TEST_CASE("fixed scenario has no edge bandwidths") {
    Topology t = complete_uniform(3, 0.2);
    CHECK_THROWS_AS(min_edge_bandwidth(t, Scenario{FixedScenario{20.0}}), std::invalid_argument);
    Topology empty;
    empty.n = 3;
    CHECK_THROWS_AS(min_edge_bandwidth(empty, Scenario{HomogeneousScenario{1.0}}),
                    std::invalid_argument);
}

TEST_CASE("iteration time reproduces the published operating point exactly") {
    // 9.76 is exactly four times 2.44 in binary too, so the quotient is
    // exactly 4.0 and the product rounds to the decimal-exact 20.04.
    CHECK(iter_time(9.76, 2.44, 5.01) == 20.04);
    CHECK(iter_time(9.76, 9.76, 5.01) == 5.01);
    CHECK(iter_time(9.76, 4.88, 5.01) == 10.02);
}

TEST_CASE("iteration time scales inversely with bottleneck bandwidth") {
    Rng rng(54);
    for (int trial = 0; trial < 50; ++trial) {
        const double b = 0.5 + 16.0 * rng.uniform();
        const double bm = 0.01 + rng.uniform();
        const double tc = 0.1 + 10.0 * rng.uniform();
        CHECK(iter_time(b, 2.0 * bm, tc) == iter_time(b, bm, tc) / 2.0);
        CHECK(iter_time(b, bm, 2.0 * tc) == 2.0 * iter_time(b, bm, tc));
    }
}

TEST_CASE("epoch time adds compute and multiplies by steps") {
    const double one = epoch_time(9.76, 2.44, 5.01, 15.21, 1);
    CHECK(one == doctest::Approx(35.25).epsilon(1e-15));
    CHECK(epoch_time(9.76, 2.44, 5.01, 15.21, 100) == doctest::Approx(100.0 * one));
    CHECK(epoch_time(9.76, 2.44, 5.01, 0.0, 1) == 20.04);
    CHECK_THROWS_AS(epoch_time(9.76, 2.44, 5.01, -1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(epoch_time(9.76, 2.44, 5.01, 15.21, 0), std::invalid_argument);
    CHECK_THROWS_AS(iter_time(9.76, 0.0, 5.01), std::invalid_argument);
}

TEST_CASE("time model overloads forward to the scalar forms") {
    TimeModel m;  // defaults: 9.76, 5.01, 15.21, 1 step
    CHECK(iter_time(m, 2.44) == iter_time(9.76, 2.44, 5.01));
    CHECK(epoch_time(m, 2.44) == epoch_time(9.76, 2.44, 5.01, 15.21, 1));
    m.c_iter = 7;
    m.t_comp = 1.0;
    CHECK(epoch_time(m, 9.76) == doctest::Approx(7.0 * 6.01));
}

TEST_CASE("scenario json parsing covers every mode and rejects unknowns") {
    Scenario s = scenario_from_json(R"({"mode": "homogeneous", "bandwidth": 3.0})");
    CHECK(std::get<HomogeneousScenario>(s).bandwidth == 3.0);

    s = scenario_from_json(R"({"mode": "node", "bandwidths": [1.0, 2.0]})");
    CHECK(std::get<NodeScenario>(s).bandwidths == std::vector<double>{1.0, 2.0});

    s = scenario_from_json(R"({"mode": "fixed", "t_iter_ms": 20.04})");
    CHECK(std::get<FixedScenario>(s).t_iter_ms == 20.04);

    s = scenario_from_json(R"({"mode": "bcube", "p": 2, "k": 1})");
    CHECK(std::get<BCubeScenario>(s).spec.p == 2);

    s = scenario_from_json(R"({"mode": "intra", "tree": {"preset": "tiered8"}})");
    CHECK(std::get<IntraScenario>(s).tree.n_devices == 8);

    CHECK_THROWS_AS(scenario_from_json(R"({"mode": "quantum"})"), std::invalid_argument);
}
