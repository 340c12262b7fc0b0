#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "topoopt/bandwidth.hpp"
#include "topoopt/topology.hpp"

namespace topoopt {

struct AnnealConfig {
    double t0 = 1.0;
    double cooling = 0.995;   // temperature factor per step, in (0, 1)
    int steps = 200;
    int moves_per_temp = 0;   // 0 means n moves per temperature step
    std::uint64_t seed = 0;

    void validate() const;
};

// Connected graph realizing the degree sequence exactly, tuned toward small
// average shortest path length by degree-preserving double edge swaps
// (remove {a,b},{c,d}; add {a,c},{b,d}). Greedy pairing builds the start;
// component-merging swaps make it connected. Result carries uniform weight
// 1/(max degree + 1). Raises InfeasibleError when no connected realization
// exists (non-graphical, a zero degree, or fewer than n-1 edges).
Topology anneal_degree_topology(const std::vector<int>& degrees, const AnnealConfig& cfg);

// Connected r-edge graph drawn from the system's allowed pairs with every
// resource row kept within capacity; swaps that would break a row or leave
// the allowed set are rejected. Same energy and schedule as above.
Topology anneal_capacity_topology(const CapacitySystem& sys, int r, const AnnealConfig& cfg);

// Dispatch helper: equality systems anneal on their implied degree sequence,
// upper-bound systems on capacity-filtered swaps. r is required for the
// latter and must match the implied total for the former when given.
Topology anneal_topology(const CapacitySystem& sys, std::optional<int> r,
                         const AnnealConfig& cfg);

}  // namespace topoopt
