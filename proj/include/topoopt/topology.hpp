#pragma once

#include <string>
#include <utility>
#include <vector>

#include "topoopt/dense.hpp"

namespace topoopt {

using Edge = std::pair<int, int>;

// Undirected weighted graph over nodes 0..n-1. Edges are stored as (i, j)
// with i < j, sorted lexicographically, without duplicates; weights align
// with edges and are nonnegative.
struct Topology {
    int n = 0;
    std::vector<Edge> edges;
    std::vector<double> weights;

    // Sorts edges (carrying weights along) and then checks all invariants;
    // throws std::invalid_argument naming the first violation.
    void normalize_and_validate();
    void validate() const;

    std::vector<int> degrees() const;
    bool has_uniform_weights(double tol = 0.0) const;
};

// All node pairs (i, j), i < j, in lexicographic order. This order defines
// the edge indexing shared by every vector over the full pair set.
std::vector<Edge> enumerate_edges(int n);

// Index of pair (i, j) within enumerate_edges(n); arguments may come in
// either order.
int edge_index(int n, int i, int j);

// Oriented incidence matrix: column per edge, +1 at the lower endpoint,
// -1 at the higher one.
Matrix incidence_matrix(const Topology& t);

// Weighted Laplacian A diag(w) A^T.
Matrix laplacian(const Topology& t);

// W = I - L. Throws when any diagonal of L exceeds 1 + 1e-12 (the entry at
// that node would be negative).
Matrix gossip_matrix(const Topology& t);

struct SpectralReport {
    double acf = 1.0;      // max(|lambda_2|, |lambda_n|)
    double lambda2 = 1.0;  // second largest eigenvalue
    double lambda_n = 0.0; // smallest eigenvalue
    bool connected = false;
};

// Asymptotic convergence factor of a symmetric doubly stochastic matrix.
// Throws if w is asymmetric beyond 1e-8.
SpectralReport spectral_report(const Matrix& w);
double acf(const Matrix& w);

// Checks the averaging-matrix contract: square, symmetric within 1e-8, rows
// summing to 1 within 1e-8, entries >= -1e-8. Throws invalid_argument.
void validate_gossip(const Matrix& w);

// Mean shortest-path length over unordered node pairs, hop metric;
// +infinity when disconnected.
double aspl(const Topology& t);

enum class BenchmarkKind { ring, grid2d, torus2d, exponential };

BenchmarkKind benchmark_kind_from_string(const std::string& name);

// Reference topologies with their standard uniform weights: ring/grid/torus
// use 1/(d_max + 1); the exponential circulant (hop set {1, 2, 4, ...})
// uses 1/(2 (m + 1)) for m hops, the symmetrized form of the usual
// directed convention, which reproduces the published convergence factors.
Topology generate_benchmark(BenchmarkKind kind, int n);

// JSON object {"n": .., "edges": [[i,j],..], "weights": [..]}.
std::string topology_to_json(const Topology& t);
Topology topology_from_json(const std::string& text);

// Dense CSV (one row per line) and triplet CSV ("i,j,value" lines).
std::string matrix_to_csv(const Matrix& m);
std::string matrix_to_triplet_csv(const Matrix& m, double drop_below = 0.0);

}  // namespace topoopt
