#include "topoopt/sparse.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace topoopt {

SparseMatrix SparseMatrix::from_triplets(int rows, int cols, const std::vector<Triplet>& entries) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("from_triplets: negative dimension");
    for (const Triplet& t : entries) {
        if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols) {
            throw std::invalid_argument("from_triplets: index (" + std::to_string(t.row) + "," +
                                        std::to_string(t.col) + ") out of range for " +
                                        std::to_string(rows) + "x" + std::to_string(cols));
        }
    }

    std::vector<int> count(static_cast<size_t>(cols) + 1, 0);
    for (const Triplet& t : entries) ++count[static_cast<size_t>(t.col) + 1];
    for (int j = 0; j < cols; ++j) count[j + 1] += count[j];

    std::vector<int> rows_tmp(entries.size());
    std::vector<double> vals_tmp(entries.size());
    {
        std::vector<int> next(count.begin(), count.end() - 1);
        for (const Triplet& t : entries) {
            int pos = next[t.col]++;
            rows_tmp[pos] = t.row;
            vals_tmp[pos] = t.value;
        }
    }

    SparseMatrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.col_ptr_.assign(static_cast<size_t>(cols) + 1, 0);
    m.row_idx_.reserve(entries.size());
    m.val_.reserve(entries.size());

    std::vector<int> order;
    for (int j = 0; j < cols; ++j) {
        int lo = count[j], hi = count[j + 1];
        order.resize(hi - lo);
        for (int k = 0; k < hi - lo; ++k) order[k] = lo + k;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return rows_tmp[a] < rows_tmp[b]; });
        const int col_begin = static_cast<int>(m.row_idx_.size());
        for (int idx : order) {
            int r = rows_tmp[idx];
            double v = vals_tmp[idx];
            if (static_cast<int>(m.row_idx_.size()) > col_begin && m.row_idx_.back() == r) {
                m.val_.back() += v;  // duplicate entry within this column
            } else {
                m.row_idx_.push_back(r);
                m.val_.push_back(v);
            }
        }
        m.col_ptr_[j + 1] = static_cast<int>(m.row_idx_.size());
    }
    return m;
}

void SparseMatrix::multiply(const Vec& x, Vec& y) const {
    if (static_cast<int>(x.size()) != cols_) throw std::invalid_argument("multiply: size mismatch");
    y.assign(rows_, 0.0);
    for (int j = 0; j < cols_; ++j) {
        const double xj = x[j];
        if (xj == 0.0) continue;
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) y[row_idx_[k]] += val_[k] * xj;
    }
}

Vec SparseMatrix::multiply(const Vec& x) const {
    Vec y;
    multiply(x, y);
    return y;
}

Matrix SparseMatrix::to_dense() const {
    Matrix d(rows_, cols_, 0.0);
    for (int j = 0; j < cols_; ++j)
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) d(row_idx_[k], j) += val_[k];
    return d;
}

void SparseMatrix::save(std::ostream& out) const {
    out << rows_ << " " << cols_ << " " << nnz() << "\n";
    char buf[64];
    for (int j = 0; j < cols_; ++j) {
        for (int k = col_ptr_[j]; k < col_ptr_[j + 1]; ++k) {
            std::snprintf(buf, sizeof(buf), "%.17g", val_[k]);
            out << row_idx_[k] << " " << j << " " << buf << "\n";
        }
    }
}

SparseMatrix SparseMatrix::load(std::istream& in) {
    int rows = 0, cols = 0, nnz = 0;
    if (!(in >> rows >> cols >> nnz)) throw std::invalid_argument("sparse load: bad header");
    std::vector<Triplet> ts;
    ts.reserve(nnz);
    for (int k = 0; k < nnz; ++k) {
        Triplet t;
        if (!(in >> t.row >> t.col >> t.value))
            throw std::invalid_argument("sparse load: truncated entry list");
        ts.push_back(t);
    }
    return from_triplets(rows, cols, ts);
}

}  // namespace topoopt
