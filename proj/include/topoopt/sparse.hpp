#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "topoopt/dense.hpp"

namespace topoopt {

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

// Compressed sparse column matrix. Column pointers are nondecreasing and
// row indices are strictly increasing within each column; duplicate
// triplets are summed on construction and explicit zeros are kept so the
// assembled pattern is stable.
class SparseMatrix {
public:
    SparseMatrix() = default;

    static SparseMatrix from_triplets(int rows, int cols, const std::vector<Triplet>& entries);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int nnz() const { return static_cast<int>(val_.size()); }

    const std::vector<int>& col_ptr() const { return col_ptr_; }
    const std::vector<int>& row_idx() const { return row_idx_; }
    const std::vector<double>& values() const { return val_; }

    // y = A x; y is resized and overwritten.
    void multiply(const Vec& x, Vec& y) const;
    Vec multiply(const Vec& x) const;

    Matrix to_dense() const;

    // Triplet text format: header "rows cols nnz", then one "i j v" line per
    // stored entry, zero-based, values with 17 significant digits.
    void save(std::ostream& out) const;
    static SparseMatrix load(std::istream& in);

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> col_ptr_{0};
    std::vector<int> row_idx_;
    std::vector<double> val_;
};

}  // namespace topoopt
