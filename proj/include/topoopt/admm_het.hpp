#pragma once

#include <optional>
#include <string>
#include <vector>

#include "topoopt/admm.hpp"
#include "topoopt/bandwidth.hpp"

namespace topoopt {

// Heterogeneous problem: the homogeneous state grows a binary edge-selection
// block z and a coupling slack nu with rows g - z + nu = 0, plus, for
// node-level (equality) systems, the degree rows over z. Capacity-bound
// systems keep their rows out of the equality block; the z projection
// enforces them instead, so every iterate is feasible by construction.
struct ProblemDataHet {
    int n = 0, m = 0, r = 0;
    double alpha = 2.0, rho = 1.0;
    int nx = 0, neq = 0;
    int off_s = 0, off_y = 0, off_t = 0, off_z = 0, off_nu = 0, lambda_ix = 0;
    int q = 0;  // selection equality rows (0 for capacity-bound systems)
    std::vector<Edge> pairs;
    CapacitySystem sys;
    Vec beq;
    SparseMatrix kkt;
    IluFactors ilu;
};

// r is implied by the degree rows for equality systems (and must match when
// supplied); capacity-bound systems require it.
ProblemDataHet assemble_het(const CapacitySystem& sys, std::optional<int> r, double alpha,
                            double rho);

// Exactly r ones at the r largest entries; ties keep the lower index.
Vec project_binary_z(const Vec& v, int r);

// Capacity-respecting variant: scans entries in decreasing order, taking a
// column only when it is allowed and every covering row stays within
// capacity. May return fewer than r ones when the caps dead-end.
Vec project_binary_z_capped(const Vec& v, int r, const CapacitySystem& sys);

// Blockwise projection: edge weights and lambda clamp to >= 0 (selection
// lives in z, so no cardinality thinning here), cones as in the homogeneous
// solver, z binary, nu clamped to >= 0.
Vec project_Y_het(const ProblemDataHet& pd, const Vec& x_state, const Vec& duals);

Solution solve_het(const CapacitySystem& sys, std::optional<int> r, const SolverConfig& cfg,
                   const std::optional<Topology>& warm_start = std::nullopt);

struct UtilizationRow {
    std::string label;
    int capacity = 0;
    int used = 0;
};

std::vector<UtilizationRow> utilization(const CapacitySystem& sys, const Topology& t);
std::string utilization_csv(const std::vector<UtilizationRow>& rows);

}  // namespace topoopt
