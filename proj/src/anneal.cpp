#include "topoopt/anneal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>

#include "topoopt/errors.hpp"
#include "topoopt/rng.hpp"

namespace topoopt {

void AnnealConfig::validate() const {
    if (!(t0 > 0.0)) throw std::invalid_argument("AnnealConfig: t0 must be positive");
    if (!(cooling > 0.0 && cooling < 1.0))
        throw std::invalid_argument("AnnealConfig: cooling must lie in (0, 1)");
    if (steps < 1) throw std::invalid_argument("AnnealConfig: steps must be >= 1");
    if (moves_per_temp < 0)
        throw std::invalid_argument("AnnealConfig: moves_per_temp must be >= 0");
}

namespace {

Edge norm_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double mean_path_length(int n, const std::vector<Edge>& edges) {
    if (n <= 1) return 0.0;
    std::vector<std::vector<int>> adj(n);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    long long total = 0;
    std::vector<int> dist(n);
    std::queue<int> frontier;
    for (int s = 0; s < n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[s] = 0;
        frontier.push(s);
        int seen = 1;
        while (!frontier.empty()) {
            const int u = frontier.front();
            frontier.pop();
            for (int v : adj[u])
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    ++seen;
                    frontier.push(v);
                }
        }
        if (seen < n) return std::numeric_limits<double>::infinity();
        for (int v = 0; v < n; ++v) total += dist[v];
    }
    return static_cast<double>(total) / (static_cast<double>(n) * (n - 1));
}

std::vector<Edge> havel_hakimi(const std::vector<int>& degrees) {
    const int n = static_cast<int>(degrees.size());
    std::vector<std::pair<int, int>> rem(n);  // (remaining degree, node)
    for (int i = 0; i < n; ++i) rem[i] = {degrees[i], i};
    std::vector<Edge> edges;
    for (;;) {
        std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
            return a.first != b.first ? a.first > b.first : a.second < b.second;
        });
        const int d = rem[0].first;
        if (d == 0) break;
        if (d >= n || d > static_cast<int>(rem.size()) - 1)
            throw InfeasibleError("degree sequence is not graphical");
        const int u = rem[0].second;
        rem[0].first = 0;
        for (int k = 1; k <= d; ++k) {
            if (rem[k].first <= 0) throw InfeasibleError("degree sequence is not graphical");
            --rem[k].first;
            edges.push_back(norm_edge(u, rem[k].second));
        }
    }
    return edges;
}

std::vector<int> component_ids(int n, const std::vector<Edge>& edges) {
    std::vector<std::vector<int>> adj(n);
    for (const auto& [i, j] : edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    std::vector<int> comp(n, -1);
    int next = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[s] >= 0) continue;
        comp[s] = next;
        std::queue<int> frontier;
        frontier.push(s);
        while (!frontier.empty()) {
            const int u = frontier.front();
            frontier.pop();
            for (int v : adj[u])
                if (comp[v] < 0) {
                    comp[v] = next;
                    frontier.push(v);
                }
        }
        ++next;
    }
    return comp;
}

bool still_connected_without(int n, const std::vector<Edge>& edges, size_t skip) {
    const int a = edges[skip].first;
    std::vector<std::vector<int>> adj(n);
    for (size_t e = 0; e < edges.size(); ++e) {
        if (e == skip) continue;
        adj[edges[e].first].push_back(edges[e].second);
        adj[edges[e].second].push_back(edges[e].first);
    }
    std::vector<char> seen(n, 0);
    seen[a] = 1;
    std::queue<int> frontier;
    frontier.push(a);
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop();
        for (int v : adj[u])
            if (!seen[v]) {
                seen[v] = 1;
                frontier.push(v);
            }
    }
    return seen[edges[skip].second] != 0;
}

// Merges components with degree-preserving swaps: a non-bridge edge of one
// component swapped against any edge of another ties both pieces to the
// donor. Such an edge exists whenever the degree sum can support a
// connected graph, which the callers check up front.
void connect_components(int n, std::vector<Edge>& edges) {
    for (;;) {
        const auto comp = component_ids(n, edges);
        int ncomp = 0;
        for (int c : comp) ncomp = std::max(ncomp, c + 1);
        if (ncomp <= 1) return;

        size_t donor = edges.size();
        for (size_t e = 0; e < edges.size(); ++e)
            if (still_connected_without(n, edges, e)) {
                donor = e;
                break;
            }
        if (donor == edges.size())
            throw InfeasibleError("degree sequence admits no connected realization");
        const int donor_comp = comp[edges[donor].first];
        size_t other = edges.size();
        for (size_t e = 0; e < edges.size(); ++e)
            if (comp[edges[e].first] != donor_comp) {
                other = e;
                break;
            }
        if (other == edges.size())
            throw InfeasibleError("degree sequence admits no connected realization");
        const auto [a, b] = edges[donor];
        const auto [c, d] = edges[other];
        edges[donor] = norm_edge(a, c);
        edges[other] = norm_edge(b, d);
    }
}

Topology finish(int n, std::vector<Edge> edges) {
    std::sort(edges.begin(), edges.end());
    std::vector<int> deg(n, 0);
    for (const auto& [i, j] : edges) {
        ++deg[i];
        ++deg[j];
    }
    const int d_max = edges.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
    Topology t;
    t.n = n;
    t.edges = std::move(edges);
    t.weights.assign(t.edges.size(), 1.0 / (d_max + 1));
    t.validate();
    return t;
}

// FeasibleFn(removed1, removed2, added1, added2) -> acceptable; ApplyFn
// commits bookkeeping after a move is accepted.
template <typename FeasibleFn, typename ApplyFn>
void run_schedule(int n, std::vector<Edge>& edges, const AnnealConfig& cfg,
                  FeasibleFn feasible, ApplyFn apply) {
    if (edges.size() < 2) return;
    Rng rng(cfg.seed);
    std::set<Edge> present(edges.begin(), edges.end());
    double energy = mean_path_length(n, edges);
    std::vector<Edge> best = edges;
    double best_energy = energy;

    const int moves = cfg.moves_per_temp > 0 ? cfg.moves_per_temp : n;
    double temp = cfg.t0;
    const size_t m = edges.size();
    for (int step = 0; step < cfg.steps; ++step, temp *= cfg.cooling) {
        for (int mv = 0; mv < moves; ++mv) {
            const size_t i1 = rng.below(m);
            size_t i2 = rng.below(m - 1);
            if (i2 >= i1) ++i2;
            const auto [a, b] = edges[i1];
            const auto [c, d] = edges[i2];
            if (a == c || a == d || b == c || b == d) continue;
            const bool cross = rng.below(2) != 0;
            const Edge n1 = norm_edge(a, cross ? d : c);
            const Edge n2 = norm_edge(b, cross ? c : d);
            if (present.count(n1) || present.count(n2)) continue;
            if (!feasible(edges[i1], edges[i2], n1, n2)) continue;

            const Edge o1 = edges[i1], o2 = edges[i2];
            edges[i1] = n1;
            edges[i2] = n2;
            const double cand = mean_path_length(n, edges);
            const double delta = cand - energy;
            bool accept = delta <= 0.0;
            if (!accept && std::isfinite(delta)) accept = rng.uniform() < std::exp(-delta / temp);
            if (accept) {
                present.erase(o1);
                present.erase(o2);
                present.insert(n1);
                present.insert(n2);
                apply(o1, o2, n1, n2);
                energy = cand;
                if (energy < best_energy) {
                    best_energy = energy;
                    best = edges;
                }
            } else {
                edges[i1] = o1;
                edges[i2] = o2;
            }
        }
    }
    edges = std::move(best);
}

}  // namespace

Topology anneal_degree_topology(const std::vector<int>& degrees, const AnnealConfig& cfg) {
    cfg.validate();
    const int n = static_cast<int>(degrees.size());
    if (n < 1) throw std::invalid_argument("anneal_degree_topology: empty degree sequence");
    long long sum = 0;
    for (int i = 0; i < n; ++i) {
        if (degrees[i] < 0 || degrees[i] > n - 1)
            throw std::invalid_argument("anneal_degree_topology: degree of node " +
                                        std::to_string(i) + " outside [0, n-1]");
        sum += degrees[i];
    }
    if (n == 1) return finish(1, {});
    if (sum % 2 != 0) throw InfeasibleError("degree sum is odd");
    for (int i = 0; i < n; ++i)
        if (degrees[i] == 0)
            throw InfeasibleError("node " + std::to_string(i) +
                                  " has degree 0, graph cannot be connected");
    if (sum < 2LL * (n - 1))
        throw InfeasibleError("degree sum " + std::to_string(sum) +
                              " cannot span a connected graph on " + std::to_string(n) +
                              " nodes");

    auto edges = havel_hakimi(degrees);
    connect_components(n, edges);
    run_schedule(
        n, edges, cfg, [](const Edge&, const Edge&, const Edge&, const Edge&) { return true; },
        [](const Edge&, const Edge&, const Edge&, const Edge&) {});
    return finish(n, std::move(edges));
}

Topology anneal_capacity_topology(const CapacitySystem& sys, int r, const AnnealConfig& cfg) {
    cfg.validate();
    const int n = sys.n;
    if (n < 2) throw std::invalid_argument("anneal_capacity_topology: need at least 2 nodes");
    if (r < 0 || r > sys.num_edges)
        throw std::invalid_argument("anneal_capacity_topology: r outside [0, |E|]");
    if (r < n - 1)
        throw InfeasibleError("edge budget " + std::to_string(r) +
                              " below the n-1 edges a connected graph needs");

    std::vector<std::vector<int>> col_rows(sys.num_edges);
    for (int rix = 0; rix < static_cast<int>(sys.rows.size()); ++rix)
        for (int col : sys.rows[rix].edge_cols) col_rows[col].push_back(rix);

    const auto pairs = enumerate_edges(n);
    std::vector<int> load(sys.rows.size(), 0);
    std::vector<char> selected(sys.num_edges, 0);
    auto fits = [&](int col) {
        if (!sys.allowed[col]) return false;
        for (int rix : col_rows[col])
            if (load[rix] + 1 > sys.rows[rix].capacity) return false;
        return true;
    };
    auto pressure = [&](int col) {  // worst row load the column would reach
        int worst = 0;
        for (int rix : col_rows[col]) worst = std::max(worst, load[rix] + 1);
        return worst;
    };
    auto take = [&](int col) {
        selected[col] = 1;
        for (int rix : col_rows[col]) ++load[rix];
    };

    // Spanning tree first, then fill to r, always grabbing the column that
    // keeps its busiest row lowest.
    std::vector<int> comp(n);
    for (int i = 0; i < n; ++i) comp[i] = i;
    auto comp_find = [&](int x) {
        while (comp[x] != x) x = comp[x] = comp[comp[x]];
        return x;
    };
    std::vector<Edge> edges;
    for (int picked = 0; picked < n - 1; ++picked) {
        int best_col = -1, best_key = 0;
        for (int col = 0; col < sys.num_edges; ++col) {
            if (selected[col] || !fits(col)) continue;
            if (comp_find(pairs[col].first) == comp_find(pairs[col].second)) continue;
            const int key = pressure(col);
            if (best_col < 0 || key < best_key) {
                best_col = col;
                best_key = key;
            }
        }
        if (best_col < 0)
            throw InfeasibleError("capacity rows leave no connected graph on the allowed pairs");
        take(best_col);
        comp[comp_find(pairs[best_col].first)] = comp_find(pairs[best_col].second);
        edges.push_back(pairs[best_col]);
    }
    while (static_cast<int>(edges.size()) < r) {
        int best_col = -1, best_key = 0;
        for (int col = 0; col < sys.num_edges; ++col) {
            if (selected[col] || !fits(col)) continue;
            const int key = pressure(col);
            if (best_col < 0 || key < best_key) {
                best_col = col;
                best_key = key;
            }
        }
        if (best_col < 0)
            throw InfeasibleError("capacity rows cannot host " + std::to_string(r) + " edges");
        take(best_col);
        edges.push_back(pairs[best_col]);
    }

    auto move_deltas = [&](const Edge& r1, const Edge& r2, const Edge& a1, const Edge& a2,
                           std::vector<std::pair<int, int>>& deltas) {
        deltas.clear();
        auto bump = [&](int col, int d) {
            for (int rix : col_rows[col]) {
                bool found = false;
                for (auto& [row, acc] : deltas)
                    if (row == rix) {
                        acc += d;
                        found = true;
                        break;
                    }
                if (!found) deltas.push_back({rix, d});
            }
        };
        bump(edge_index(n, r1.first, r1.second), -1);
        bump(edge_index(n, r2.first, r2.second), -1);
        bump(edge_index(n, a1.first, a1.second), +1);
        bump(edge_index(n, a2.first, a2.second), +1);
    };
    std::vector<std::pair<int, int>> deltas;
    run_schedule(
        n, edges, cfg,
        [&](const Edge& r1, const Edge& r2, const Edge& a1, const Edge& a2) {
            const int c1 = edge_index(n, a1.first, a1.second);
            const int c2 = edge_index(n, a2.first, a2.second);
            if (!sys.allowed[c1] || !sys.allowed[c2]) return false;
            move_deltas(r1, r2, a1, a2, deltas);
            for (const auto& [rix, d] : deltas)
                if (load[rix] + d > sys.rows[rix].capacity) return false;
            return true;
        },
        [&](const Edge& r1, const Edge& r2, const Edge& a1, const Edge& a2) {
            move_deltas(r1, r2, a1, a2, deltas);
            for (const auto& [rix, d] : deltas) load[rix] += d;
            selected[edge_index(n, r1.first, r1.second)] = 0;
            selected[edge_index(n, r2.first, r2.second)] = 0;
            selected[edge_index(n, a1.first, a1.second)] = 1;
            selected[edge_index(n, a2.first, a2.second)] = 1;
        });
    return finish(n, std::move(edges));
}

Topology anneal_topology(const CapacitySystem& sys, std::optional<int> r,
                         const AnnealConfig& cfg) {
    if (sys.equality) {
        std::vector<int> degrees(sys.rows.size());
        for (size_t i = 0; i < sys.rows.size(); ++i) degrees[i] = sys.rows[i].capacity;
        if (static_cast<int>(degrees.size()) != sys.n)
            throw std::invalid_argument("anneal_topology: equality system is not node-level");
        const int implied = sys.implied_edge_total();
        if (r && *r != implied)
            throw std::invalid_argument("anneal_topology: r conflicts with the degree sum");
        return anneal_degree_topology(degrees, cfg);
    }
    if (!r) throw std::invalid_argument("anneal_topology: capacity mode needs an explicit r");
    return anneal_capacity_topology(sys, *r, cfg);
}

}  // namespace topoopt
