#pragma once

#include <stdexcept>
#include <string>

namespace topoopt {

// A capacity or cardinality request that no allocation can satisfy.
struct InfeasibleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Zero (or unusably small) pivot met while factorizing.
struct PivotError : std::runtime_error {
    int index;
    PivotError(const std::string& msg, int idx) : std::runtime_error(msg), index(idx) {}
};

// Inner linear solve failed to reach its tolerance.
struct LinearSolveError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solver produced an empty or unusable support.
struct DegenerateSolutionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace topoopt
