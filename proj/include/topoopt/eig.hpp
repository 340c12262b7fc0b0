#pragma once

#include <vector>

#include "topoopt/dense.hpp"

namespace topoopt {

struct EigDecomposition {
    std::vector<double> values;  // ascending
    Matrix vectors;              // column k pairs with values[k]; orthonormal
};

// Eigendecomposition of a symmetric matrix by Householder tridiagonalization
// followed by QL with implicit shifts. The input is symmetrized first, so
// roundoff-level asymmetry is tolerated.
EigDecomposition sym_eig(const Matrix& s);

// Nearest negative-semidefinite matrix in Frobenius norm.
Matrix project_nsd(const Matrix& s);
// Nearest positive-semidefinite matrix in Frobenius norm.
Matrix project_psd(const Matrix& s);

}  // namespace topoopt
