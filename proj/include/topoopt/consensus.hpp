#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topoopt/dense.hpp"

namespace topoopt {

inline constexpr int kDefaultSimDim = 128;

struct ConsensusTrace {
    std::vector<double> errors;  // length iters + 1; errors[0] is the start
    double t_iter_ms = 0.0;
    std::string label;
    std::uint64_t seed = 0;

    // "iter,time_ms,error" rows using t_iter_ms
    std::string to_csv() const;
};

// Runs averaging x <- W x from i.i.d. standard normal starts, tracking the
// Frobenius norm of the deviation from the (preserved) mean. Iterating the
// deviation directly keeps late-iteration errors meaningful: subtracting
// two O(1) quantities would drown a 1e-12 gap in cancellation noise.
ConsensusTrace simulate(const Matrix& w, int dim, int iters, std::uint64_t seed);

// t_iter * (first k with error <= threshold); +infinity when never reached.
double convergence_time(const ConsensusTrace& trace, double threshold, double t_iter);

struct CompareEntry {
    std::string label;
    Matrix w;
    double t_iter_ms = 0.0;
};

struct CompareReport {
    std::vector<ConsensusTrace> traces;   // input order
    std::vector<double> convergence_ms;   // +infinity = not reached

    std::string to_csv() const;  // "time_ms,label,error", grouped by input order
};

// Simulates every entry with the same seed and dimension; threshold is
// absolute on the error traces. threads > 1 fans the independent
// simulations out; results are identical regardless.
CompareReport compare(const std::vector<CompareEntry>& entries, int dim, int iters,
                      double threshold, std::uint64_t seed, int threads = 1);

}  // namespace topoopt
