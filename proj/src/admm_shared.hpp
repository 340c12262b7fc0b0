#pragma once

// Internal glue shared by the two solvers: block layout, equality-system
// assembly, cone projections, and the feasible start.

#include <vector>

#include "topoopt/admm.hpp"
#include "topoopt/dense.hpp"
#include "topoopt/eig.hpp"
#include "topoopt/sparse.hpp"
#include "topoopt/topology.hpp"

namespace topoopt::detail {

inline constexpr double kKktShift = 1e-8;  // keeps saddle-point pivots nonzero for ILU(0)

struct Layout {
    int n = 0, m = 0;
    int lambda_ix = 0;
    int off_s = 0, off_y = 0, off_t = 0;
    int off_z = -1, off_nu = -1;  // -1: solver has no selection/slack blocks
    int nx = 0;
    int neq = 0;
};

Layout hom_layout(int n);
// q extra equality rows for the selection system (0 when selection is
// enforced inside the projection instead), plus m coupling rows.
Layout het_layout(int n, int q);

// Equality rows shared by both problems, as triplets of the constraint
// matrix: rows 0..n^2-1 tie the weighted Laplacian minus lambda*I to the
// lower slack, rows n^2..2n^2-1 tie it plus lambda*I to the upper slack,
// rows 2n^2..2n^2+n-1 tie node weight sums to the diagonal slack.
void append_hom_entries(const Layout& lo, const std::vector<Edge>& pairs,
                        std::vector<Triplet>& a);
void append_hom_beq(int n, double alpha, Vec& b);

// [[I, A^T], [A, -shift*I]] over the state and equality rows.
SparseMatrix build_kkt(const Layout& lo, const std::vector<Triplet>& a_entries);

// S -> NSD cone, y -> nonnegative, T -> PSD cone; v is X + D/rho. The x
// (and z, nu) blocks are the callers' business.
void project_cones(const Layout& lo, const Vec& v, Vec& out);

// Zeroes all but the r largest of v[0..m); ties keep the lower index.
void keep_top_r(Vec& v, int m, int r);

// Primal start that satisfies every equality exactly for the warm
// topology's uniform weights: slacks computed from the weighted Laplacian,
// lambda from the start's own spectral factor (floored at 1e-3).
Vec feasible_start(const Layout& lo, const Topology& warm, double alpha);

// Dense Laplacian of the weight vector g over the candidate pairs.
Matrix laplacian_of_g(int n, const std::vector<Edge>& pairs, const double* g);
double acf_of_g(int n, const std::vector<Edge>& pairs, const double* g);

// [y - (d + c)/rho ; beq] with c = -1 at lambda_ix.
Vec kkt_rhs(const Layout& lo, const Vec& y_state, const Vec& duals, const Vec& beq,
            double rho);

}  // namespace topoopt::detail
