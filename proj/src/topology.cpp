#include "topoopt/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "topoopt/eig.hpp"

namespace topoopt {

void Topology::normalize_and_validate() {
    if (weights.size() != edges.size())
        throw std::invalid_argument("topology: weights length differs from edge count");
    std::vector<size_t> order(edges.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return edges[a] < edges[b]; });
    std::vector<Edge> es;
    std::vector<double> ws;
    es.reserve(edges.size());
    ws.reserve(edges.size());
    for (size_t k : order) {
        es.push_back(edges[k]);
        ws.push_back(weights[k]);
    }
    edges = std::move(es);
    weights = std::move(ws);
    validate();
}

void Topology::validate() const {
    if (n < 1) throw std::invalid_argument("topology: n must be positive");
    if (weights.size() != edges.size())
        throw std::invalid_argument("topology: weights length differs from edge count");
    for (size_t k = 0; k < edges.size(); ++k) {
        const auto [i, j] = edges[k];
        if (i < 0 || j < 0 || i >= n || j >= n)
            throw std::invalid_argument("topology: edge endpoint out of range");
        if (i >= j) throw std::invalid_argument("topology: edge endpoints must satisfy i < j");
        if (k > 0 && !(edges[k - 1] < edges[k]))
            throw std::invalid_argument("topology: edges must be sorted without duplicates");
        if (!(weights[k] >= 0.0)) throw std::invalid_argument("topology: negative or NaN weight");
    }
}

std::vector<int> Topology::degrees() const {
    std::vector<int> d(n, 0);
    for (const auto& [i, j] : edges) {
        ++d[i];
        ++d[j];
    }
    return d;
}

bool Topology::has_uniform_weights(double tol) const {
    if (weights.empty()) return true;
    for (double w : weights)
        if (std::abs(w - weights[0]) > tol) return false;
    return true;
}

std::vector<Edge> enumerate_edges(int n) {
    if (n < 2) throw std::invalid_argument("enumerate_edges: need at least two nodes");
    std::vector<Edge> out;
    out.reserve(static_cast<size_t>(n) * (n - 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) out.emplace_back(i, j);
    return out;
}

int edge_index(int n, int i, int j) {
    if (i == j) throw std::invalid_argument("edge_index: self loop");
    if (i > j) std::swap(i, j);
    if (i < 0 || j >= n) throw std::invalid_argument("edge_index: endpoint out of range");
    // Pairs with first endpoint < i occupy a prefix of the lexicographic list.
    return i * n - i * (i + 1) / 2 + (j - i - 1);
}

Matrix incidence_matrix(const Topology& t) {
    t.validate();
    Matrix a(t.n, static_cast<int>(t.edges.size()), 0.0);
    for (size_t k = 0; k < t.edges.size(); ++k) {
        a(t.edges[k].first, static_cast<int>(k)) = 1.0;
        a(t.edges[k].second, static_cast<int>(k)) = -1.0;
    }
    return a;
}

Matrix laplacian(const Topology& t) {
    t.validate();
    Matrix l(t.n, t.n, 0.0);
    for (size_t k = 0; k < t.edges.size(); ++k) {
        const auto [i, j] = t.edges[k];
        const double w = t.weights[k];
        l(i, i) += w;
        l(j, j) += w;
        l(i, j) -= w;
        l(j, i) -= w;
    }
    return l;
}

Matrix gossip_matrix(const Topology& t) {
    Matrix l = laplacian(t);
    for (int i = 0; i < t.n; ++i) {
        if (l(i, i) > 1.0 + 1e-12) {
            throw std::invalid_argument(
                "gossip_matrix: weighted degree " + std::to_string(l(i, i)) + " at node " +
                std::to_string(i) + " exceeds 1; the self-weight would be negative");
        }
    }
    Matrix w = Matrix::identity(t.n);
    for (int i = 0; i < t.n; ++i)
        for (int j = 0; j < t.n; ++j) w(i, j) -= l(i, j);
    return w;
}

SpectralReport spectral_report(const Matrix& w) {
    if (w.rows() != w.cols()) throw std::invalid_argument("spectral_report: matrix not square");
    if (!is_symmetric(w, 1e-8))
        throw std::invalid_argument("spectral_report: matrix asymmetric beyond 1e-8");
    EigDecomposition eg = sym_eig(w);
    const int n = w.rows();
    SpectralReport rep;
    if (n == 1) {
        rep.acf = 0.0;
        rep.lambda2 = 0.0;
        rep.lambda_n = eg.values[0];
        rep.connected = true;
        return rep;
    }
    rep.lambda2 = eg.values[n - 2];  // eigenvalue 1 sits at the top for a valid W
    rep.lambda_n = eg.values[0];
    rep.acf = std::max(std::abs(rep.lambda2), std::abs(rep.lambda_n));
    rep.connected = rep.lambda2 < 1.0 - 1e-8;
    return rep;
}

double acf(const Matrix& w) { return spectral_report(w).acf; }

void validate_gossip(const Matrix& w) {
    const int n = w.rows();
    if (n < 1 || w.cols() != n) throw std::invalid_argument("gossip matrix must be square");
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            if (std::abs(w(i, j) - w(j, i)) > 1e-8)
                throw std::invalid_argument("gossip matrix asymmetric beyond 1e-8");
            if (w(i, j) < -1e-8)
                throw std::invalid_argument("gossip matrix has an entry below -1e-8");
            row_sum += w(i, j);
        }
        if (std::abs(row_sum - 1.0) > 1e-8)
            throw std::invalid_argument("gossip matrix row " + std::to_string(i) +
                                        " does not sum to 1");
    }
}

double aspl(const Topology& t) {
    t.validate();
    if (t.n < 2) return 0.0;
    std::vector<std::vector<int>> adj(t.n);
    for (const auto& [i, j] : t.edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    long long total = 0;
    std::vector<int> dist(t.n);
    std::deque<int> queue;
    for (int s = 0; s < t.n; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        dist[s] = 0;
        queue.assign(1, s);
        int reached = 1;
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v : adj[u]) {
                if (dist[v] < 0) {
                    dist[v] = dist[u] + 1;
                    ++reached;
                    queue.push_back(v);
                }
            }
        }
        if (reached < t.n) return std::numeric_limits<double>::infinity();
        for (int v = 0; v < t.n; ++v) total += dist[v];
    }
    // Each unordered pair counted twice across source loops.
    return static_cast<double>(total) / (static_cast<double>(t.n) * (t.n - 1));
}

BenchmarkKind benchmark_kind_from_string(const std::string& name) {
    if (name == "ring") return BenchmarkKind::ring;
    if (name == "grid2d") return BenchmarkKind::grid2d;
    if (name == "torus2d") return BenchmarkKind::torus2d;
    if (name == "exponential") return BenchmarkKind::exponential;
    throw std::invalid_argument("unknown benchmark kind: " + name);
}

namespace {

Topology finish_uniform(int n, std::set<Edge> edge_set, double weight) {
    Topology t;
    t.n = n;
    t.edges.assign(edge_set.begin(), edge_set.end());
    t.weights.assign(t.edges.size(), weight);
    t.normalize_and_validate();
    return t;
}

int isqrt_exact(int n) {
    int s = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
    if (s * s != n) return -1;
    return s;
}

}  // namespace

Topology generate_benchmark(BenchmarkKind kind, int n) {
    if (n < 2) throw std::invalid_argument("generate_benchmark: need at least two nodes");
    std::set<Edge> es;
    switch (kind) {
        case BenchmarkKind::ring: {
            if (n < 3) throw std::invalid_argument("generate_benchmark: ring needs n >= 3");
            for (int i = 0; i < n; ++i) {
                int j = (i + 1) % n;
                es.insert({std::min(i, j), std::max(i, j)});
            }
            return finish_uniform(n, std::move(es), 1.0 / 3.0);  // d_max = 2
        }
        case BenchmarkKind::grid2d: {
            const int s = isqrt_exact(n);
            if (s < 2) throw std::invalid_argument("generate_benchmark: grid2d needs a perfect square n >= 4");
            for (int r = 0; r < s; ++r) {
                for (int c = 0; c < s; ++c) {
                    int u = r * s + c;
                    if (c + 1 < s) es.insert({u, u + 1});
                    if (r + 1 < s) es.insert({u, u + s});
                }
            }
            const int d_max = (s >= 3) ? 4 : 2;
            return finish_uniform(n, std::move(es), 1.0 / (d_max + 1));
        }
        case BenchmarkKind::torus2d: {
            const int s = isqrt_exact(n);
            if (s < 2) throw std::invalid_argument("generate_benchmark: torus2d needs a perfect square n >= 4");
            for (int r = 0; r < s; ++r) {
                for (int c = 0; c < s; ++c) {
                    int u = r * s + c;
                    int right = r * s + (c + 1) % s;
                    int down = ((r + 1) % s) * s + c;
                    if (u != right) es.insert({std::min(u, right), std::max(u, right)});
                    if (u != down) es.insert({std::min(u, down), std::max(u, down)});
                }
            }
            // Wraparound collapses to degree 2 on a 2x2 torus.
            const int d_max = (s >= 3) ? 4 : 2;
            return finish_uniform(n, std::move(es), 1.0 / (d_max + 1));
        }
        case BenchmarkKind::exponential: {
            int m = 0;
            for (int hop = 1; hop <= n - 1; hop *= 2) {
                for (int i = 0; i < n; ++i) {
                    int j = (i + hop) % n;
                    if (i != j) es.insert({std::min(i, j), std::max(i, j)});
                }
                ++m;
            }
            return finish_uniform(n, std::move(es), 1.0 / (2.0 * (m + 1)));
        }
    }
    throw std::invalid_argument("generate_benchmark: unreachable");
}

std::string topology_to_json(const Topology& t) {
    nlohmann::json j;
    j["n"] = t.n;
    j["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : t.edges) j["edges"].push_back({a, b});
    j["weights"] = t.weights;
    return j.dump(2) + "\n";
}

Topology topology_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    if (!j.contains("n") || !j["n"].is_number_integer())
        throw std::invalid_argument("topology json: missing integer field 'n'");
    if (!j.contains("edges") || !j["edges"].is_array())
        throw std::invalid_argument("topology json: missing array field 'edges'");
    if (!j.contains("weights") || !j["weights"].is_array())
        throw std::invalid_argument("topology json: missing array field 'weights'");
    Topology t;
    t.n = j["n"].get<int>();
    for (const auto& e : j["edges"]) {
        if (!e.is_array() || e.size() != 2)
            throw std::invalid_argument("topology json: each edge must be a pair");
        t.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
    }
    t.weights = j["weights"].get<std::vector<double>>();
    t.normalize_and_validate();
    return t;
}

std::string matrix_to_csv(const Matrix& m) {
    std::ostringstream out;
    char buf[64];
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << buf;
            if (j + 1 < m.cols()) out << ",";
        }
        out << "\n";
    }
    return out.str();
}

std::string matrix_to_triplet_csv(const Matrix& m, double drop_below) {
    std::ostringstream out;
    char buf[64];
    out << "i,j,value\n";
    for (int i = 0; i < m.rows(); ++i) {
        for (int j = 0; j < m.cols(); ++j) {
            if (std::abs(m(i, j)) <= drop_below) continue;
            std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
            out << i << "," << j << "," << buf << "\n";
        }
    }
    return out.str();
}

}  // namespace topoopt
