#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "topoopt/dense.hpp"
#include "topoopt/eig.hpp"
#include "topoopt/rng.hpp"

using namespace topoopt;

namespace {

Matrix random_symmetric(int n, Rng& rng) {
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) a(i, j) = a(j, i) = rng.normal();
    return a;
}

}  // namespace

TEST_CASE("sym_eig matches the Jacobi oracle on random symmetric matrices") {
    Rng rng(31);
    for (int trial = 0; trial < 12; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(24));
        Matrix a = random_symmetric(n, rng);
        EigDecomposition d = sym_eig(a);
        Vec oracle = oracles::jacobi_eigenvalues(a);
        REQUIRE(static_cast<int>(d.values.size()) == n);
        REQUIRE(std::is_sorted(d.values.begin(), d.values.end()));
        for (int i = 0; i < n; ++i)
            CHECK(d.values[i] == doctest::Approx(oracle[i]).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("eigenvectors reconstruct the matrix and are orthonormal") {
    Rng rng(32);
    const int n = 10;
    Matrix a = random_symmetric(n, rng);
    EigDecomposition d = sym_eig(a);

    // V diag(values) V^T == A
    Matrix vl(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) vl(i, k) = d.vectors(i, k) * d.values[k];
    Matrix rebuilt = matmul(vl, transpose(d.vectors));
    CHECK(max_abs_diff(rebuilt, a) < 1e-10);

    Matrix gram = matmul(transpose(d.vectors), d.vectors);
    CHECK(max_abs_diff(gram, Matrix::identity(n)) < 1e-12);
}

TEST_CASE("known spectra: diagonal, rank-one, and the 2x2 rotation-invariant") {
    Matrix diag(3, 3);
    diag(0, 0) = 2.0;  diag(1, 1) = -3.0;  diag(2, 2) = 0.5;
    EigDecomposition d = sym_eig(diag);
    CHECK(d.values[0] == doctest::Approx(-3.0));
    CHECK(d.values[1] == doctest::Approx(0.5));
    CHECK(d.values[2] == doctest::Approx(2.0));

    // all-ones 4x4: eigenvalues {0, 0, 0, 4}
    Matrix ones(4, 4, 1.0);
    d = sym_eig(ones);
    CHECK(d.values[0] == doctest::Approx(0.0).scale(1.0));
    CHECK(d.values[2] == doctest::Approx(0.0).scale(1.0));
    CHECK(d.values[3] == doctest::Approx(4.0));

    // [[a, b], [b, a]] has eigenvalues a -+ b
    Matrix two(2, 2);
    two(0, 0) = two(1, 1) = 1.0;
    two(0, 1) = two(1, 0) = 0.25;
    d = sym_eig(two);
    CHECK(d.values[0] == doctest::Approx(0.75));
    CHECK(d.values[1] == doctest::Approx(1.25));
}

TEST_CASE("project_nsd zeroes positive modes only") {
    Matrix diag(2, 2);
    diag(0, 0) = 2.0;
    diag(1, 1) = -3.0;
    Matrix p = project_nsd(diag);
    CHECK(p(0, 0) == doctest::Approx(0.0).scale(1.0));
    CHECK(p(1, 1) == doctest::Approx(-3.0));
    CHECK(std::abs(p(0, 1)) < 1e-12);
}

TEST_CASE("cone projections are idempotent, non-expansive, and sign-correct") {
    Rng rng(33);
    for (int trial = 0; trial < 8; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(10));
        Matrix a = random_symmetric(n, rng);

        Matrix p = project_psd(a);
        Matrix m = project_nsd(a);

        // All eigenvalues land on the right side of zero.
        Vec pe = oracles::jacobi_eigenvalues(p);
        Vec me = oracles::jacobi_eigenvalues(m);
        CHECK(pe.front() >= -1e-10);
        CHECK(me.back() <= 1e-10);

        // Projecting twice changes nothing.
        CHECK(max_abs_diff(project_psd(p), p) < 1e-10);
        CHECK(max_abs_diff(project_nsd(m), m) < 1e-10);

        // Distance to the cone never exceeds the norm of the input.
        Matrix dp(n, n), dm(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                dp(i, j) = a(i, j) - p(i, j);
                dm(i, j) = a(i, j) - m(i, j);
            }
        CHECK(frobenius_norm(dp) <= frobenius_norm(a) + 1e-12);
        CHECK(frobenius_norm(dm) <= frobenius_norm(a) + 1e-12);

        // PSD and NSD parts decompose a: a = psd(a) + nsd(a).
        Matrix sum(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) sum(i, j) = p(i, j) + m(i, j);
        CHECK(max_abs_diff(sum, a) < 1e-9);
    }
}

TEST_CASE("projections fix definite matrices and kill their opposites") {
    Matrix id = Matrix::identity(5);
    CHECK(max_abs_diff(project_psd(id), id) < 1e-12);
    CHECK(frobenius_norm(project_nsd(id)) < 1e-12);
}
