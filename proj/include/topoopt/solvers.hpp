#pragma once

#include <string>
#include <vector>

#include "topoopt/sparse.hpp"

namespace topoopt {

// Incomplete LU factorization with zero fill-in, stored row-wise with the
// unit-lower and upper factors merged on the input's sparsity pattern.
struct IluFactors {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col_idx;
    std::vector<double> val;
    std::vector<int> diag_pos;  // position of the diagonal entry in each row

    // z = U^{-1} L^{-1} r
    void apply(const Vec& r, Vec& z) const;
};

// Factorizes on the pattern of a; a structurally or numerically zero pivot
// raises PivotError with the offending row.
IluFactors ilu0(const SparseMatrix& a);

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;  // recomputed ||b - A x|| at exit
    std::string note;
};

// Preconditioned BiCGSTAB. x carries the initial guess in and the solution
// out. Convergence is ||b - A x|| <= tol * ||b||; the reported residual is
// recomputed from scratch, not the recursive estimate. One restart is
// attempted on scalar breakdown; a second breakdown reports non-convergence.
// precond may be null. b = 0 short-circuits to x = 0 at zero iterations.
SolveReport bicgstab(const SparseMatrix& a, const Vec& b, Vec& x, const IluFactors* precond,
                     double tol = 1e-10, int max_iter = -1);

}  // namespace topoopt
