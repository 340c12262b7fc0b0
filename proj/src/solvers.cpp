#include "topoopt/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "topoopt/errors.hpp"

namespace topoopt {

namespace {

// Row-wise copy of a CSC matrix, columns sorted ascending within each row.
struct CsrView {
    std::vector<int> row_ptr, col_idx;
    std::vector<double> val;
};

CsrView to_csr(const SparseMatrix& a) {
    CsrView r;
    const int n_rows = a.rows();
    r.row_ptr.assign(static_cast<size_t>(n_rows) + 1, 0);
    for (int ri : a.row_idx()) ++r.row_ptr[static_cast<size_t>(ri) + 1];
    for (int i = 0; i < n_rows; ++i) r.row_ptr[i + 1] += r.row_ptr[i];
    r.col_idx.resize(a.nnz());
    r.val.resize(a.nnz());
    std::vector<int> next(r.row_ptr.begin(), r.row_ptr.end() - 1);
    for (int j = 0; j < a.cols(); ++j) {
        for (int k = a.col_ptr()[j]; k < a.col_ptr()[j + 1]; ++k) {
            int pos = next[a.row_idx()[k]]++;
            r.col_idx[pos] = j;
            r.val[pos] = a.values()[k];
        }
    }
    return r;  // CSC column order makes each row's columns already ascending
}

}  // namespace

IluFactors ilu0(const SparseMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("ilu0: matrix not square");
    const int n = a.rows();
    CsrView csr = to_csr(a);

    IluFactors f;
    f.n = n;
    f.row_ptr = std::move(csr.row_ptr);
    f.col_idx = std::move(csr.col_idx);
    f.val = std::move(csr.val);
    f.diag_pos.assign(n, -1);
    for (int i = 0; i < n; ++i) {
        for (int k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) {
            if (f.col_idx[k] == i) {
                f.diag_pos[i] = k;
                break;
            }
        }
        if (f.diag_pos[i] < 0)
            throw PivotError("ilu0: structurally empty diagonal at row " + std::to_string(i), i);
    }

    // IKJ elimination restricted to the stored pattern. pos_of[j] maps a
    // column of the active row to its storage slot, -1 elsewhere.
    std::vector<int> pos_of(n, -1);
    for (int i = 0; i < n; ++i) {
        for (int k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) pos_of[f.col_idx[k]] = k;
        bool bad_pivot = false;
        int bad_row = -1;
        for (int k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) {
            const int j = f.col_idx[k];
            if (j >= i) break;
            const double piv = f.val[f.diag_pos[j]];
            if (piv == 0.0) {
                bad_pivot = true;
                bad_row = j;
                break;
            }
            const double lij = f.val[k] / piv;
            f.val[k] = lij;
            for (int kk = f.diag_pos[j] + 1; kk < f.row_ptr[j + 1]; ++kk) {
                int slot = pos_of[f.col_idx[kk]];
                if (slot >= 0) f.val[slot] -= lij * f.val[kk];
            }
        }
        if (!bad_pivot && f.val[f.diag_pos[i]] == 0.0) {
            bad_pivot = true;
            bad_row = i;
        }
        for (int k = f.row_ptr[i]; k < f.row_ptr[i + 1]; ++k) pos_of[f.col_idx[k]] = -1;
        if (bad_pivot) throw PivotError("ilu0: zero pivot at row " + std::to_string(bad_row), bad_row);
    }
    return f;
}

void IluFactors::apply(const Vec& r, Vec& z) const {
    z = r;
    for (int i = 0; i < n; ++i) {  // L z = r, unit lower
        double s = z[i];
        for (int k = row_ptr[i]; k < diag_pos[i]; ++k) s -= val[k] * z[col_idx[k]];
        z[i] = s;
    }
    for (int i = n - 1; i >= 0; --i) {  // U z = z
        double s = z[i];
        for (int k = diag_pos[i] + 1; k < row_ptr[i + 1]; ++k) s -= val[k] * z[col_idx[k]];
        z[i] = s / val[diag_pos[i]];
    }
}

SolveReport bicgstab(const SparseMatrix& a, const Vec& b, Vec& x, const IluFactors* precond,
                     double tol, int max_iter) {
    if (a.rows() != a.cols()) throw std::invalid_argument("bicgstab: matrix not square");
    const int n = a.rows();
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("bicgstab: rhs size mismatch");
    if (max_iter < 0) max_iter = 10 * n;
    if (static_cast<int>(x.size()) != n) x.assign(n, 0.0);

    SolveReport rep;
    const double bnorm = norm2(b);
    if (bnorm == 0.0) {
        x.assign(n, 0.0);
        rep.converged = true;
        return rep;
    }
    const double target = tol * bnorm;
    const double tiny = 1e-300;

    Vec r(n), rhat(n), p(n), v(n), s(n), t(n), phat(n), shat(n), work(n);

    auto true_residual = [&]() {
        a.multiply(x, work);
        double acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const double d = b[i] - work[i];
            r[i] = d;
            acc += d * d;
        }
        return std::sqrt(acc);
    };
    double rho = 1.0, alpha = 1.0, omega = 1.0;
    auto reset = [&]() {
        rhat = r;  // r already holds the fresh true residual
        rho = alpha = omega = 1.0;
        std::fill(p.begin(), p.end(), 0.0);
        std::fill(v.begin(), v.end(), 0.0);
    };
    auto precondition = [&](const Vec& in, Vec& out) {
        if (precond)
            precond->apply(in, out);
        else
            out = in;
    };

    double res = true_residual();
    if (res <= target) {
        rep.converged = true;
        rep.residual = res;
        return rep;
    }
    reset();

    int breakdowns = 0;
    int it = 0;
    while (it < max_iter) {
        ++it;
        const double rho_next = dot(rhat, r);
        if (std::abs(rho_next) < tiny || std::abs(omega) < tiny) {
            if (++breakdowns > 1) {
                rep.note = "breakdown after restart";
                break;
            }
            true_residual();
            reset();
            continue;
        }
        const double beta = (rho_next / rho) * (alpha / omega);
        rho = rho_next;
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        precondition(p, phat);
        a.multiply(phat, v);
        const double rv = dot(rhat, v);
        if (std::abs(rv) < tiny) {
            if (++breakdowns > 1) {
                rep.note = "breakdown after restart";
                break;
            }
            true_residual();
            reset();
            continue;
        }
        alpha = rho / rv;
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (norm2(s) <= target) {
            axpy(alpha, phat, x);
            if (true_residual() <= target) break;
            reset();  // recursive estimate was optimistic, keep iterating
            continue;
        }
        precondition(s, shat);
        a.multiply(shat, t);
        const double tt = dot(t, t);
        if (tt < tiny) {
            axpy(alpha, phat, x);
            if (++breakdowns > 1) {
                rep.note = "breakdown after restart";
                break;
            }
            true_residual();
            reset();
            continue;
        }
        omega = dot(t, s) / tt;
        for (int i = 0; i < n; ++i) {
            x[i] += alpha * phat[i] + omega * shat[i];
            r[i] = s[i] - omega * t[i];
        }
        if (norm2(r) <= target) {
            if (true_residual() <= target) break;
            reset();
        }
    }

    rep.iterations = it;
    rep.residual = true_residual();
    rep.converged = rep.residual <= target;
    if (!rep.converged && rep.note.empty()) rep.note = "tolerance not reached";
    return rep;
}

}  // namespace topoopt
