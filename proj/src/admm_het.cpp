#include "topoopt/admm_het.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include "admm_shared.hpp"
#include "topoopt/anneal.hpp"
#include "topoopt/errors.hpp"
#include "topoopt/textio.hpp"

namespace topoopt {

namespace {

void check_system(const CapacitySystem& sys) {
    if (sys.n < 2) throw std::invalid_argument("capacity system: need at least 2 nodes");
    if (sys.num_edges != sys.n * (sys.n - 1) / 2)
        throw std::invalid_argument("capacity system: column count differs from |E|");
    if (static_cast<int>(sys.allowed.size()) != sys.num_edges)
        throw std::invalid_argument("capacity system: allowed mask size differs from |E|");
    for (const auto& row : sys.rows)
        for (int col : row.edge_cols)
            if (col < 0 || col >= sys.num_edges)
                throw std::invalid_argument("capacity system: row " + row.label +
                                            " references a column outside [0, |E|)");
}

int resolve_edge_total(const CapacitySystem& sys, std::optional<int> r) {
    if (sys.equality) {
        long long total = 0;
        for (const auto& row : sys.rows) total += row.capacity;
        if (total % 2 != 0)
            throw InfeasibleError("degree sum " + std::to_string(total) + " is odd");
        const int implied = static_cast<int>(total / 2);
        if (r && *r != implied)
            throw std::invalid_argument("edge total conflicts with the degree rows");
        return implied;
    }
    if (!r) throw std::invalid_argument("capacity-bound system needs an explicit edge total");
    return *r;
}

std::vector<int> order_desc(const Vec& v, int m) {
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return v[a] != v[b] ? v[a] > v[b] : a < b; });
    return idx;
}

}  // namespace

ProblemDataHet assemble_het(const CapacitySystem& sys, std::optional<int> r, double alpha,
                            double rho) {
    check_system(sys);
    if (sys.equality && static_cast<int>(sys.rows.size()) != sys.n)
        throw std::invalid_argument("assemble_het: equality system must be one row per node");
    if (!(alpha > 0.0)) throw std::invalid_argument("assemble_het: alpha must be positive");
    if (!(rho > 0.0)) throw std::invalid_argument("assemble_het: rho must be positive");
    const int n = sys.n;
    const int m = sys.num_edges;
    const int total = resolve_edge_total(sys, r);
    if (total < 1 || total > m)
        throw std::invalid_argument("assemble_het: edge total outside [1, |E|]");

    const int q = sys.equality ? static_cast<int>(sys.rows.size()) : 0;
    const auto lo = detail::het_layout(n, q);

    ProblemDataHet pd;
    pd.n = n;
    pd.m = m;
    pd.r = total;
    pd.alpha = alpha;
    pd.rho = rho;
    pd.nx = lo.nx;
    pd.neq = lo.neq;
    pd.off_s = lo.off_s;
    pd.off_y = lo.off_y;
    pd.off_t = lo.off_t;
    pd.off_z = lo.off_z;
    pd.off_nu = lo.off_nu;
    pd.lambda_ix = lo.lambda_ix;
    pd.q = q;
    pd.pairs = enumerate_edges(n);
    pd.sys = sys;

    std::vector<Triplet> a;
    detail::append_hom_entries(lo, pd.pairs, a);
    detail::append_hom_beq(n, alpha, pd.beq);
    const int hom_rows = 2 * n * n + n;
    if (q > 0) {
        for (int rix = 0; rix < q; ++rix) {
            for (int col : sys.rows[rix].edge_cols)
                a.push_back({hom_rows + rix, lo.off_z + col, 1.0});
            pd.beq.push_back(static_cast<double>(sys.rows[rix].capacity));
        }
    }
    for (int l = 0; l < m; ++l) {
        const int row = hom_rows + q + l;
        a.push_back({row, l, 1.0});
        a.push_back({row, lo.off_z + l, -1.0});
        a.push_back({row, lo.off_nu + l, 1.0});
        pd.beq.push_back(0.0);
    }

    pd.kkt = detail::build_kkt(lo, a);
    pd.ilu = ilu0(pd.kkt);
    return pd;
}

Vec project_binary_z(const Vec& v, int r) {
    const int m = static_cast<int>(v.size());
    if (r < 0 || r > m) throw std::invalid_argument("project_binary_z: r outside [0, |E|]");
    const auto idx = order_desc(v, m);
    Vec z(m, 0.0);
    for (int k = 0; k < r; ++k) z[idx[k]] = 1.0;
    return z;
}

Vec project_binary_z_capped(const Vec& v, int r, const CapacitySystem& sys) {
    const int m = static_cast<int>(v.size());
    if (m != sys.num_edges)
        throw std::invalid_argument("project_binary_z_capped: size mismatch with system");
    if (r < 0 || r > m)
        throw std::invalid_argument("project_binary_z_capped: r outside [0, |E|]");
    std::vector<std::vector<int>> col_rows(m);
    for (int rix = 0; rix < static_cast<int>(sys.rows.size()); ++rix)
        for (int col : sys.rows[rix].edge_cols) col_rows[col].push_back(rix);

    const auto idx = order_desc(v, m);
    std::vector<int> load(sys.rows.size(), 0);
    Vec z(m, 0.0);
    int taken = 0;
    for (int col : idx) {
        if (taken == r) break;
        if (!sys.allowed[col]) continue;
        bool fits = true;
        for (int rix : col_rows[col])
            if (load[rix] + 1 > sys.rows[rix].capacity) {
                fits = false;
                break;
            }
        if (!fits) continue;
        z[col] = 1.0;
        for (int rix : col_rows[col]) ++load[rix];
        ++taken;
    }
    return z;
}

Vec project_Y_het(const ProblemDataHet& pd, const Vec& x_state, const Vec& duals) {
    const auto lo = detail::het_layout(pd.n, pd.q);
    Vec v(pd.nx);
    for (int k = 0; k < pd.nx; ++k) v[k] = x_state[k] + duals[k] / pd.rho;
    Vec y = v;
    for (int k = 0; k <= pd.m; ++k) y[k] = std::max(0.0, v[k]);
    detail::project_cones(lo, v, y);

    const Vec vz(v.begin() + pd.off_z, v.begin() + pd.off_z + pd.m);
    const Vec z = pd.sys.equality ? project_binary_z(vz, pd.r)
                                  : project_binary_z_capped(vz, pd.r, pd.sys);
    std::copy(z.begin(), z.end(), y.begin() + pd.off_z);
    for (int l = 0; l < pd.m; ++l)
        y[pd.off_nu + l] = std::max(0.0, v[pd.off_nu + l]);
    return y;
}

namespace {

// Restores the degree rows after convergence when the binary projection
// left small violations: drop the lightest edge at each over-full node,
// then add the highest-scoring allowed edge between under-full nodes.
// Returns false when a deficit cannot be paired off.
bool repair_selection(const CapacitySystem& sys, const std::vector<Edge>& pairs,
                      std::vector<char>& selected, const Vec& weights, const Vec& score,
                      bool* changed) {
    const int n = sys.n;
    std::vector<int> target(n), deg(n, 0);
    for (int i = 0; i < n; ++i) target[i] = sys.rows[i].capacity;
    for (int l = 0; l < static_cast<int>(pairs.size()); ++l)
        if (selected[l]) {
            ++deg[pairs[l].first];
            ++deg[pairs[l].second];
        }
    *changed = false;
    for (;;) {
        int node = -1;
        for (int i = 0; i < n; ++i)
            if (deg[i] > target[i] && (node < 0 || deg[i] - target[i] > deg[node] - target[node]))
                node = i;
        if (node < 0) break;
        int drop = -1;
        for (int l = 0; l < static_cast<int>(pairs.size()); ++l) {
            if (!selected[l]) continue;
            if (pairs[l].first != node && pairs[l].second != node) continue;
            if (drop < 0 || weights[l] < weights[drop]) drop = l;
        }
        if (drop < 0) return false;
        selected[drop] = 0;
        --deg[pairs[drop].first];
        --deg[pairs[drop].second];
        *changed = true;
    }
    for (;;) {
        bool deficit = false;
        for (int i = 0; i < n; ++i) deficit = deficit || deg[i] < target[i];
        if (!deficit) break;
        int add = -1;
        for (int l = 0; l < static_cast<int>(pairs.size()); ++l) {
            if (selected[l] || !sys.allowed[l]) continue;
            const auto [i, j] = pairs[l];
            if (deg[i] >= target[i] || deg[j] >= target[j]) continue;
            if (add < 0 || score[l] > score[add]) add = l;
        }
        if (add < 0) return false;
        selected[add] = 1;
        ++deg[pairs[add].first];
        ++deg[pairs[add].second];
        *changed = true;
    }
    return true;
}

}  // namespace

Solution solve_het(const CapacitySystem& sys, std::optional<int> r, const SolverConfig& cfg,
                   const std::optional<Topology>& warm_start) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    ProblemDataHet pd = assemble_het(sys, r, cfg.alpha, cfg.rho);
    const auto lo = detail::het_layout(pd.n, pd.q);
    const int n = pd.n, m = pd.m;

    AnnealConfig ac;
    ac.seed = cfg.seed;
    Topology warm = warm_start ? *warm_start : anneal_topology(sys, pd.r, ac);
    warm.validate();
    if (warm.n != n) throw std::invalid_argument("solve_het: warm start node count mismatch");
    if (static_cast<int>(warm.edges.size()) > pd.r)
        throw std::invalid_argument("solve_het: warm start has more than r edges");

    Vec x_state = detail::feasible_start(lo, warm, cfg.alpha);
    for (const auto& [i, j] : warm.edges) x_state[pd.off_z + edge_index(n, i, j)] = 1.0;
    for (int l = 0; l < m; ++l)
        x_state[pd.off_nu + l] = std::max(0.0, x_state[pd.off_z + l] - x_state[l]);
    Vec y_state = x_state;
    Vec duals(pd.nx, 0.0);
    Vec kkt_warm(pd.nx + pd.neq, 0.0);
    std::copy(x_state.begin(), x_state.end(), kkt_warm.begin());

    Solution sol;
    sol.trace.reserve(std::min(cfg.max_iter, 4096));
    double best_res = std::numeric_limits<double>::infinity();
    Vec best_y = y_state;
    Vec best_score(m, 0.0);
    int best_iter = 0;
    double res = std::numeric_limits<double>::infinity();
    bool converged = false;
    int ran = 0;

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        ran = iter;
        y_state = project_Y_het(pd, x_state, duals);

        const Vec rhs = detail::kkt_rhs(lo, y_state, duals, pd.beq, pd.rho);
        const auto rep = bicgstab(pd.kkt, rhs, kkt_warm, &pd.ilu, cfg.linear_tol);
        if (!rep.converged) {
            const double scale = std::max(norm2(rhs), 1e-30);
            if (rep.residual > 1e-8 * scale)
                throw LinearSolveError("saddle-point solve stalled: relative residual " +
                                       g17(rep.residual / scale) + " after " +
                                       std::to_string(rep.iterations) + " iterations" +
                                       (rep.note.empty() ? "" : " (" + rep.note + ")"));
        }
        x_state.assign(kkt_warm.begin(), kkt_warm.begin() + pd.nx);
        for (int k = 0; k < pd.nx; ++k) duals[k] += pd.rho * (x_state[k] - y_state[k]);

        res = 0.0;
        for (int k = 0; k < pd.nx; ++k) {
            const double d = x_state[k] - y_state[k];
            res += d * d;
        }
        sol.trace.push_back({iter, res, y_state[pd.lambda_ix],
                             detail::acf_of_g(n, pd.pairs, y_state.data())});
        if (res < best_res) {
            best_res = res;
            best_y = y_state;
            for (int l = 0; l < m; ++l)
                best_score[l] = x_state[pd.off_z + l] + duals[pd.off_z + l] / pd.rho;
            best_iter = iter;
        }
        if (res <= cfg.epsilon) {
            converged = true;
            break;
        }
    }

    Vec score(m);
    for (int l = 0; l < m; ++l) score[l] = x_state[pd.off_z + l] + duals[pd.off_z + l] / pd.rho;
    const Vec& pick = converged ? y_state : best_y;
    const Vec& pick_score = converged ? score : best_score;
    sol.converged = converged;
    sol.iterations = ran;
    sol.residual = converged ? res : best_res;
    if (!converged)
        sol.note = "stopped at max_iter; best iterate from iteration " +
                   std::to_string(best_iter);
    sol.lambda_tilde = pick[pd.lambda_ix];

    std::vector<char> selected(m, 0);
    for (int l = 0; l < m; ++l) selected[l] = pick[pd.off_z + l] > 0.5 ? 1 : 0;
    Vec weights(m);
    for (int l = 0; l < m; ++l) weights[l] = std::max(0.0, pick[l]);

    if (sys.equality) {
        bool changed = false;
        if (!repair_selection(pd.sys, pd.pairs, selected, weights, pick_score, &changed)) {
            if (!sol.note.empty()) sol.note += "; ";
            sol.note += "degree repair incomplete";
        }
        if (changed) {
            sol.repaired = true;
            if (sol.note.find("degree repair incomplete") == std::string::npos) {
                if (!sol.note.empty()) sol.note += "; ";
                sol.note += "degree rows restored by edge swap";
            }
        }
    }

    // Selected edges all survive into the topology: equality rows promise
    // exact degrees, so even near-zero weights keep their edge.
    int count = 0;
    for (int l = 0; l < m; ++l) count += selected[l];
    if (count == 0) throw DegenerateSolutionError("no edge selected");
    if (count < pd.r) {
        if (!sol.note.empty()) sol.note += "; ";
        sol.note += "capacity limits stopped selection at " + std::to_string(count) + " of " +
                    std::to_string(pd.r) + " edges";
    }
    Vec node_sum(n, 0.0);
    for (int l = 0; l < m; ++l)
        if (selected[l]) {
            node_sum[pd.pairs[l].first] += weights[l];
            node_sum[pd.pairs[l].second] += weights[l];
        }
    const double worst = *std::max_element(node_sum.begin(), node_sum.end());
    const double scale = worst > 1.0 ? 1.0 / worst : 1.0;
    sol.topology.n = n;
    for (int l = 0; l < m; ++l)
        if (selected[l]) {
            sol.topology.edges.push_back(pd.pairs[l]);
            sol.topology.weights.push_back(weights[l] * scale);
        }
    sol.topology.validate();
    sol.w = gossip_matrix(sol.topology);
    const auto rep = spectral_report(sol.w);
    sol.acf_value = rep.acf;
    sol.connected = rep.connected;

    sol.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    return sol;
}

std::vector<UtilizationRow> utilization(const CapacitySystem& sys, const Topology& t) {
    check_system(sys);
    if (t.n != sys.n) throw std::invalid_argument("utilization: node count mismatch");
    std::vector<char> selected(sys.num_edges, 0);
    for (const auto& [i, j] : t.edges) selected[edge_index(sys.n, i, j)] = 1;
    const auto loads = sys.loads(selected);
    std::vector<UtilizationRow> rows(sys.rows.size());
    for (size_t k = 0; k < sys.rows.size(); ++k)
        rows[k] = {sys.rows[k].label, sys.rows[k].capacity, loads[k]};
    return rows;
}

std::string utilization_csv(const std::vector<UtilizationRow>& rows) {
    std::string out = "resource,capacity,used\n";
    for (const auto& row : rows) {
        out += row.label;
        out += ',';
        out += std::to_string(row.capacity);
        out += ',';
        out += std::to_string(row.used);
        out += '\n';
    }
    return out;
}

}  // namespace topoopt
