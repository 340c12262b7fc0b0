#include "topoopt/eig.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "topoopt/errors.hpp"

namespace topoopt {

namespace {

// Householder reduction of a symmetric matrix to tridiagonal form.
// On exit z holds the accumulated orthogonal transform, d the diagonal and
// e the subdiagonal (e[0] unused).
void tridiagonalize(Matrix& z, std::vector<double>& d, std::vector<double>& e) {
    const int n = z.rows();
    d.assign(n, 0.0);
    e.assign(n, 0.0);
    for (int i = n - 1; i > 0; --i) {
        const int l = i - 1;
        double h = 0.0, scale = 0.0;
        if (l > 0) {
            for (int k = 0; k < i; ++k) scale += std::abs(z(i, k));
            if (scale == 0.0) {
                e[i] = z(i, l);
            } else {
                for (int k = 0; k < i; ++k) {
                    z(i, k) /= scale;
                    h += z(i, k) * z(i, k);
                }
                double f = z(i, l);
                double g = (f >= 0.0) ? -std::sqrt(h) : std::sqrt(h);
                e[i] = scale * g;
                h -= f * g;
                z(i, l) = f - g;
                f = 0.0;
                for (int j = 0; j < i; ++j) {
                    z(j, i) = z(i, j) / h;
                    g = 0.0;
                    for (int k = 0; k < j + 1; ++k) g += z(j, k) * z(i, k);
                    for (int k = j + 1; k < i; ++k) g += z(k, j) * z(i, k);
                    e[j] = g / h;
                    f += e[j] * z(i, j);
                }
                const double hh = f / (h + h);
                for (int j = 0; j < i; ++j) {
                    f = z(i, j);
                    e[j] = g = e[j] - hh * f;
                    for (int k = 0; k < j + 1; ++k) z(j, k) -= f * e[k] + g * z(i, k);
                }
            }
        } else {
            e[i] = z(i, l);
        }
        d[i] = h;
    }
    d[0] = 0.0;
    e[0] = 0.0;
    for (int i = 0; i < n; ++i) {
        if (d[i] != 0.0) {
            for (int j = 0; j < i; ++j) {
                double g = 0.0;
                for (int k = 0; k < i; ++k) g += z(i, k) * z(k, j);
                for (int k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
            }
        }
        d[i] = z(i, i);
        z(i, i) = 1.0;
        for (int j = 0; j < i; ++j) z(j, i) = z(i, j) = 0.0;
    }
}

// QL with implicit shifts on the tridiagonal (d, e), rotations applied to
// the columns of z.
void ql_implicit(std::vector<double>& d, std::vector<double>& e, Matrix& z) {
    const int n = static_cast<int>(d.size());
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    const double eps = std::numeric_limits<double>::epsilon();
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::abs(d[m]) + std::abs(d[m + 1]);
                if (std::abs(e[m]) <= eps * dd) break;
            }
            if (m != l) {
                if (iter++ == 64)
                    throw std::runtime_error("sym_eig: QL iteration failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + (g >= 0.0 ? std::abs(r) : -std::abs(r)));
                double s = 1.0, c = 1.0, p = 0.0;
                int i;
                for (i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double b = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for (int k = 0; k < n; ++k) {
                        f = z(k, i + 1);
                        z(k, i + 1) = s * z(k, i) + c * f;
                        z(k, i) = c * z(k, i) - s * f;
                    }
                }
                if (r == 0.0 && i >= l) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

Matrix clamp_spectrum(const Matrix& s, bool keep_negative) {
    EigDecomposition eg = sym_eig(s);
    const int n = eg.vectors.rows();
    Matrix out(n, n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double lam = keep_negative ? std::min(eg.values[k], 0.0) : std::max(eg.values[k], 0.0);
        if (lam == 0.0) continue;
        for (int i = 0; i < n; ++i) {
            const double uik = eg.vectors(i, k);
            if (uik == 0.0) continue;
            for (int j = 0; j < n; ++j) out(i, j) += lam * uik * eg.vectors(j, k);
        }
    }
    return symmetrize(out);
}

}  // namespace

EigDecomposition sym_eig(const Matrix& s) {
    if (s.rows() != s.cols()) throw std::invalid_argument("sym_eig: matrix not square");
    const int n = s.rows();
    EigDecomposition eg;
    if (n == 0) {
        eg.vectors = Matrix(0, 0);
        return eg;
    }
    Matrix z = symmetrize(s);
    std::vector<double> d, e;
    tridiagonalize(z, d, e);
    ql_implicit(d, e, z);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return d[a] < d[b]; });
    eg.values.resize(n);
    eg.vectors = Matrix(n, n);
    for (int k = 0; k < n; ++k) {
        eg.values[k] = d[order[k]];
        for (int i = 0; i < n; ++i) eg.vectors(i, k) = z(i, order[k]);
    }
    return eg;
}

Matrix project_nsd(const Matrix& s) { return clamp_spectrum(s, true); }

Matrix project_psd(const Matrix& s) { return clamp_spectrum(s, false); }

}  // namespace topoopt
