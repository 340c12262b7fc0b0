#include "topoopt/consensus.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>

#include "topoopt/rng.hpp"
#include "topoopt/textio.hpp"
#include "topoopt/topology.hpp"

namespace topoopt {

std::string ConsensusTrace::to_csv() const {
    std::string out = "iter,time_ms,error\n";
    for (size_t k = 0; k < errors.size(); ++k) {
        out += std::to_string(k);
        out += ',';
        out += g17(static_cast<double>(k) * t_iter_ms);
        out += ',';
        out += g17(errors[k]);
        out += '\n';
    }
    return out;
}

ConsensusTrace simulate(const Matrix& w, int dim, int iters, std::uint64_t seed) {
    validate_gossip(w);
    if (dim < 1) throw std::invalid_argument("simulate: dim must be >= 1");
    if (iters < 0) throw std::invalid_argument("simulate: iters must be >= 0");
    const int n = w.rows();

    Rng rng(seed);
    Matrix state(n, dim);
    for (int i = 0; i < n; ++i)
        for (int d = 0; d < dim; ++d) state(i, d) = rng.normal();

    // state holds the deviation from the per-coordinate mean. The mean is
    // invariant in exact arithmetic, but rounding in the multiply leaks a
    // little mass into that direction; the leak never contracts, so over
    // hundreds of steps it would build a noise floor near
    // eps * errors[0] / (1 - acf). The deviation's true mean is zero, so
    // re-projecting it out each step only removes rounding and keeps the
    // geometric decay honest down to the underflow limit.
    auto recenter = [&] {
        for (int d = 0; d < dim; ++d) {
            double mean = 0.0;
            for (int i = 0; i < n; ++i) mean += state(i, d);
            mean /= n;
            for (int i = 0; i < n; ++i) state(i, d) -= mean;
        }
    };
    recenter();

    ConsensusTrace trace;
    trace.seed = seed;
    trace.errors.reserve(iters + 1);
    trace.errors.push_back(frobenius_norm(state));
    for (int k = 0; k < iters; ++k) {
        state = matmul(w, state);
        recenter();
        trace.errors.push_back(frobenius_norm(state));
    }
    return trace;
}

double convergence_time(const ConsensusTrace& trace, double threshold, double t_iter) {
    if (!(threshold > 0.0)) throw std::invalid_argument("convergence_time: threshold <= 0");
    if (!(t_iter > 0.0)) throw std::invalid_argument("convergence_time: t_iter <= 0");
    for (size_t k = 0; k < trace.errors.size(); ++k)
        if (trace.errors[k] <= threshold) return static_cast<double>(k) * t_iter;
    return std::numeric_limits<double>::infinity();
}

std::string CompareReport::to_csv() const {
    std::string out = "time_ms,label,error\n";
    for (const auto& trace : traces)
        for (size_t k = 0; k < trace.errors.size(); ++k) {
            out += g17(static_cast<double>(k) * trace.t_iter_ms);
            out += ',';
            out += trace.label;
            out += ',';
            out += g17(trace.errors[k]);
            out += '\n';
        }
    return out;
}

CompareReport compare(const std::vector<CompareEntry>& entries, int dim, int iters,
                      double threshold, std::uint64_t seed, int threads) {
    CompareReport report;
    report.traces.resize(entries.size());
    report.convergence_ms.resize(entries.size());

    auto run_one = [&](size_t ix) {
        ConsensusTrace trace = simulate(entries[ix].w, dim, iters, seed);
        trace.label = entries[ix].label;
        trace.t_iter_ms = entries[ix].t_iter_ms;
        report.convergence_ms[ix] = convergence_time(trace, threshold, entries[ix].t_iter_ms);
        report.traces[ix] = std::move(trace);
    };

    const int workers =
        std::max(1, std::min<int>(threads, static_cast<int>(entries.size())));
    if (workers <= 1) {
        for (size_t ix = 0; ix < entries.size(); ++ix) run_one(ix);
        return report;
    }
    std::atomic<size_t> cursor{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (;;) {
                const size_t ix = cursor.fetch_add(1);
                if (ix >= entries.size()) return;
                run_one(ix);
            }
        });
    for (auto& th : pool) th.join();
    return report;
}

}  // namespace topoopt
