#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "topoopt/dense.hpp"
#include "topoopt/solvers.hpp"
#include "topoopt/sparse.hpp"
#include "topoopt/topology.hpp"

namespace topoopt {

struct SolverConfig {
    double rho = 1.0;
    double epsilon = 1e-6;       // threshold on the combined squared residual
    int max_iter = 20000;
    double alpha = 2.0;          // rank-one shift making the gap constraint an LMI
    double weight_floor = 1e-6;  // extraction drops weights at or below this
    std::uint64_t seed = 0;
    double linear_tol = 1e-10;   // relative inner-solver tolerance

    void validate() const;
};

// {"rho":…, "epsilon":…, "max_iter":…, "alpha":…, "weight_floor":…,
//  "seed":…, "linear_tol":…} — any subset; missing fields keep defaults.
SolverConfig solver_config_from_json(const std::string& text);

struct TraceRow {
    int iter = 0;
    double residual = 0.0;      // sum of squared block gaps this iteration
    double lambda_tilde = 0.0;
    double acf_iterate = 1.0;   // spectral factor of the projected iterate
};

struct Solution {
    Topology topology;
    Matrix w;
    double lambda_tilde = 0.0;
    double acf_value = 1.0;
    bool converged = false;
    bool connected = false;
    bool repaired = false;  // an equality-restoring edge swap ran after convergence
    double residual = 0.0;
    int iterations = 0;
    double wall_time_ms = 0.0;
    std::string note;
    std::vector<TraceRow> trace;

    std::string trace_csv() const;  // "iter,residual,lambda_tilde,acf_iterate"
};

// Constraint data for the edge-weight design on n nodes: the state stacks
// x = (g, lambda) with two matrix slacks, a diagonal slack, and the
// equality system pinning them together; the KKT operator for the
// quadratic x-step is assembled sparse and ILU-factorized once.
struct ProblemData {
    int n = 0, m = 0, r = 0;
    double alpha = 2.0, rho = 1.0;
    int nx = 0;                // flat state length: m+1 + n^2 + n + n^2
    int neq = 0;               // equality rows: 2 n^2 + n
    int off_s = 0, off_y = 0, off_t = 0, lambda_ix = 0;
    std::vector<Edge> pairs;   // candidate edges, lexicographic
    Vec beq;                   // equality right-hand side
    SparseMatrix kkt;
    IluFactors ilu;
};

ProblemData assemble(int n, int r, double alpha, double rho);

// Y = blockwise projection of X + D/rho: edge weights clamped to >= 0 and
// thinned to the r largest (ties to the lower index), lambda clamped only,
// S to the NSD cone, y to >= 0, T to the PSD cone.
Vec project_Y(const ProblemData& pd, const Vec& x_state, const Vec& duals);

// Equality-constrained quadratic step: solves the saddle-point system with
// warm-started BiCGSTAB. kkt_warm carries the previous solution in and the
// new one out (length nx + neq). Raises LinearSolveError when the inner
// solve misses even the relaxed 1e-8 contract.
Vec update_X(const ProblemData& pd, const Vec& y_state, const Vec& duals, Vec& kkt_warm,
             double linear_tol);

void update_duals(const ProblemData& pd, const Vec& x_state, const Vec& y_state, Vec& duals);

struct Extraction {
    Topology topology;
    Matrix w;
};

// Support = weights above the floor, capped at the r largest; weights are
// scaled down uniformly if a node's total exceeds 1. Empty support raises
// DegenerateSolutionError.
Extraction extract_topology(int n, int r, const Vec& g, double weight_floor);

// Balanced-degree annealed start used when the caller supplies none.
Topology default_warm_start(int n, int r, std::uint64_t seed);

Solution solve(int n, int r, const SolverConfig& cfg,
               const std::optional<Topology>& warm_start = std::nullopt);

}  // namespace topoopt
