#include "topoopt/admm.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>

#include <nlohmann/json.hpp>

#include "admm_shared.hpp"
#include "topoopt/anneal.hpp"
#include "topoopt/bandwidth.hpp"
#include "topoopt/eig.hpp"
#include "topoopt/errors.hpp"
#include "topoopt/textio.hpp"

namespace topoopt {

namespace detail {

Layout hom_layout(int n) {
    Layout lo;
    lo.n = n;
    lo.m = n * (n - 1) / 2;
    lo.lambda_ix = lo.m;
    lo.off_s = lo.m + 1;
    lo.off_y = lo.off_s + n * n;
    lo.off_t = lo.off_y + n;
    lo.nx = lo.off_t + n * n;
    lo.neq = 2 * n * n + n;
    return lo;
}

Layout het_layout(int n, int q) {
    Layout lo = hom_layout(n);
    lo.off_z = lo.nx;
    lo.off_nu = lo.off_z + lo.m;
    lo.nx = lo.off_nu + lo.m;
    lo.neq += q + lo.m;
    return lo;
}

void append_hom_entries(const Layout& lo, const std::vector<Edge>& pairs,
                        std::vector<Triplet>& a) {
    const int n = lo.n;
    const int n2 = n * n;
    for (int l = 0; l < lo.m; ++l) {
        const auto [i, j] = pairs[l];
        const int dii = i * n + i, djj = j * n + j;
        const int dij = j * n + i, dji = i * n + j;
        for (int blk = 0; blk < 2; ++blk) {
            const int ro = blk * n2;
            a.push_back({ro + dii, l, 1.0});
            a.push_back({ro + djj, l, 1.0});
            a.push_back({ro + dij, l, -1.0});
            a.push_back({ro + dji, l, -1.0});
        }
        a.push_back({2 * n2 + i, l, 1.0});
        a.push_back({2 * n2 + j, l, 1.0});
    }
    for (int i = 0; i < n; ++i) {
        const int d = i * n + i;
        a.push_back({d, lo.lambda_ix, -1.0});
        a.push_back({n2 + d, lo.lambda_ix, 1.0});
    }
    for (int k = 0; k < n2; ++k) a.push_back({k, lo.off_s + k, 1.0});
    for (int k = 0; k < n2; ++k) a.push_back({n2 + k, lo.off_t + k, 1.0});
    for (int i = 0; i < n; ++i) a.push_back({2 * n2 + i, lo.off_y + i, 1.0});
}

void append_hom_beq(int n, double alpha, Vec& b) {
    const int n2 = n * n;
    b.reserve(b.size() + 2 * n2 + n);
    for (int k = 0; k < n2; ++k) b.push_back(-alpha / n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) b.push_back(r == c ? 2.0 : 0.0);
    for (int i = 0; i < n; ++i) b.push_back(1.0);
}

SparseMatrix build_kkt(const Layout& lo, const std::vector<Triplet>& a_entries) {
    const int nk = lo.nx + lo.neq;
    std::vector<Triplet> t;
    t.reserve(lo.nx + lo.neq + 2 * a_entries.size());
    for (int k = 0; k < lo.nx; ++k) t.push_back({k, k, 1.0});
    for (const auto& e : a_entries) {
        t.push_back({lo.nx + e.row, e.col, e.value});
        t.push_back({e.col, lo.nx + e.row, e.value});
    }
    for (int k = 0; k < lo.neq; ++k) t.push_back({lo.nx + k, lo.nx + k, -kKktShift});
    return SparseMatrix::from_triplets(nk, nk, t);
}

void project_cones(const Layout& lo, const Vec& v, Vec& out) {
    const int n = lo.n;
    Matrix s(n, n), t(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) {
            s(r, c) = v[lo.off_s + c * n + r];
            t(r, c) = v[lo.off_t + c * n + r];
        }
    const Matrix sp = project_nsd(s);
    const Matrix tp = project_psd(t);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) {
            out[lo.off_s + c * n + r] = sp(r, c);
            out[lo.off_t + c * n + r] = tp(r, c);
        }
    for (int i = 0; i < n; ++i) out[lo.off_y + i] = std::max(0.0, v[lo.off_y + i]);
}

void keep_top_r(Vec& v, int m, int r) {
    if (r >= m) return;
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return v[a] != v[b] ? v[a] > v[b] : a < b; });
    for (int k = r; k < m; ++k) v[idx[k]] = 0.0;
}

Matrix laplacian_of_g(int n, const std::vector<Edge>& pairs, const double* g) {
    Matrix lap(n, n, 0.0);
    for (size_t l = 0; l < pairs.size(); ++l) {
        if (g[l] == 0.0) continue;
        const auto [i, j] = pairs[l];
        lap(i, i) += g[l];
        lap(j, j) += g[l];
        lap(i, j) -= g[l];
        lap(j, i) -= g[l];
    }
    return lap;
}

double acf_of_g(int n, const std::vector<Edge>& pairs, const double* g) {
    Matrix w = laplacian_of_g(n, pairs, g);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w(i, j) = (i == j ? 1.0 : 0.0) - w(i, j);
    return spectral_report(w).acf;
}

Vec feasible_start(const Layout& lo, const Topology& warm, double alpha) {
    const int n = lo.n;
    Vec x(lo.nx, 0.0);
    const auto deg = warm.degrees();
    const int dmax = deg.empty() ? 0 : *std::max_element(deg.begin(), deg.end());
    const double g0 = 1.0 / (dmax + 1);

    Matrix lap(n, n, 0.0);
    for (const auto& [i, j] : warm.edges) {
        x[edge_index(n, i, j)] = g0;
        lap(i, i) += g0;
        lap(j, j) += g0;
        lap(i, j) -= g0;
        lap(j, i) -= g0;
    }
    Matrix w(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w(i, j) = (i == j ? 1.0 : 0.0) - lap(i, j);
    const double lambda0 = std::max(1e-3, 1.0 - spectral_report(w).acf);
    x[lo.lambda_ix] = lambda0;

    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) {
            const double lrc = lap(r, c);
            const double diag = r == c ? 1.0 : 0.0;
            x[lo.off_s + c * n + r] = -(lrc + alpha / n - diag * lambda0);
            x[lo.off_t + c * n + r] = diag * (2.0 - lambda0) - lrc;
        }
    for (int i = 0; i < n; ++i) x[lo.off_y + i] = 1.0 - lap(i, i);
    return x;
}

Vec kkt_rhs(const Layout& lo, const Vec& y_state, const Vec& duals, const Vec& beq,
            double rho) {
    Vec rhs(lo.nx + lo.neq);
    for (int k = 0; k < lo.nx; ++k) rhs[k] = y_state[k] - duals[k] / rho;
    rhs[lo.lambda_ix] += 1.0 / rho;  // objective vector has its lone -1 here
    std::copy(beq.begin(), beq.end(), rhs.begin() + lo.nx);
    return rhs;
}

}  // namespace detail

void SolverConfig::validate() const {
    if (!(rho > 0.0)) throw std::invalid_argument("SolverConfig: rho must be positive");
    if (!(epsilon > 0.0)) throw std::invalid_argument("SolverConfig: epsilon must be positive");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
    if (!(alpha > 0.0)) throw std::invalid_argument("SolverConfig: alpha must be positive");
    if (weight_floor < 0.0)
        throw std::invalid_argument("SolverConfig: weight_floor must be >= 0");
    if (!(linear_tol > 0.0))
        throw std::invalid_argument("SolverConfig: linear_tol must be positive");
}

SolverConfig solver_config_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("solver config must be a JSON object");
    SolverConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "rho")
            cfg.rho = value.get<double>();
        else if (key == "epsilon")
            cfg.epsilon = value.get<double>();
        else if (key == "max_iter")
            cfg.max_iter = value.get<int>();
        else if (key == "alpha")
            cfg.alpha = value.get<double>();
        else if (key == "weight_floor")
            cfg.weight_floor = value.get<double>();
        else if (key == "seed")
            cfg.seed = value.get<std::uint64_t>();
        else if (key == "linear_tol")
            cfg.linear_tol = value.get<double>();
        else
            throw std::invalid_argument("solver config: unknown field " + key);
    }
    cfg.validate();
    return cfg;
}

std::string Solution::trace_csv() const {
    std::string out = "iter,residual,lambda_tilde,acf_iterate\n";
    for (const auto& row : trace) {
        out += std::to_string(row.iter);
        out += ',';
        out += g17(row.residual);
        out += ',';
        out += g17(row.lambda_tilde);
        out += ',';
        out += g17(row.acf_iterate);
        out += '\n';
    }
    return out;
}

ProblemData assemble(int n, int r, double alpha, double rho) {
    if (n < 2) throw std::invalid_argument("assemble: need at least 2 nodes");
    const int m = n * (n - 1) / 2;
    if (r < 1 || r > m) throw std::invalid_argument("assemble: r outside [1, n(n-1)/2]");
    if (!(alpha > 0.0)) throw std::invalid_argument("assemble: alpha must be positive");
    if (!(rho > 0.0)) throw std::invalid_argument("assemble: rho must be positive");

    const auto lo = detail::hom_layout(n);
    ProblemData pd;
    pd.n = n;
    pd.m = m;
    pd.r = r;
    pd.alpha = alpha;
    pd.rho = rho;
    pd.nx = lo.nx;
    pd.neq = lo.neq;
    pd.off_s = lo.off_s;
    pd.off_y = lo.off_y;
    pd.off_t = lo.off_t;
    pd.lambda_ix = lo.lambda_ix;
    pd.pairs = enumerate_edges(n);

    std::vector<Triplet> a;
    detail::append_hom_entries(lo, pd.pairs, a);
    detail::append_hom_beq(n, alpha, pd.beq);
    pd.kkt = detail::build_kkt(lo, a);
    pd.ilu = ilu0(pd.kkt);
    return pd;
}

Vec project_Y(const ProblemData& pd, const Vec& x_state, const Vec& duals) {
    const auto lo = detail::hom_layout(pd.n);
    Vec v(pd.nx);
    for (int k = 0; k < pd.nx; ++k) v[k] = x_state[k] + duals[k] / pd.rho;
    Vec y = v;
    for (int k = 0; k <= pd.m; ++k) y[k] = std::max(0.0, v[k]);
    detail::keep_top_r(y, pd.m, pd.r);
    detail::project_cones(lo, v, y);
    return y;
}

Vec update_X(const ProblemData& pd, const Vec& y_state, const Vec& duals, Vec& kkt_warm,
             double linear_tol) {
    const auto lo = detail::hom_layout(pd.n);
    const Vec rhs = detail::kkt_rhs(lo, y_state, duals, pd.beq, pd.rho);
    const auto rep = bicgstab(pd.kkt, rhs, kkt_warm, &pd.ilu, linear_tol);
    if (!rep.converged) {
        const double scale = std::max(norm2(rhs), 1e-30);
        if (rep.residual > 1e-8 * scale)
            throw LinearSolveError("saddle-point solve stalled: relative residual " +
                                   g17(rep.residual / scale) + " after " +
                                   std::to_string(rep.iterations) + " iterations" +
                                   (rep.note.empty() ? "" : " (" + rep.note + ")"));
    }
    return Vec(kkt_warm.begin(), kkt_warm.begin() + pd.nx);
}

void update_duals(const ProblemData& pd, const Vec& x_state, const Vec& y_state, Vec& duals) {
    for (int k = 0; k < pd.nx; ++k) duals[k] += pd.rho * (x_state[k] - y_state[k]);
}

Extraction extract_topology(int n, int r, const Vec& g, double weight_floor) {
    const auto pairs = enumerate_edges(n);
    const int m = static_cast<int>(pairs.size());
    if (static_cast<int>(g.size()) < m)
        throw std::invalid_argument("extract_topology: weight vector shorter than |E|");
    if (r < 1) throw std::invalid_argument("extract_topology: r must be >= 1");

    std::vector<int> support;
    for (int l = 0; l < m; ++l)
        if (g[l] > weight_floor) support.push_back(l);
    if (support.empty())
        throw DegenerateSolutionError("every edge weight is at or below the floor");
    if (static_cast<int>(support.size()) > r) {
        std::sort(support.begin(), support.end(),
                  [&](int a, int b) { return g[a] != g[b] ? g[a] > g[b] : a < b; });
        support.resize(r);
        std::sort(support.begin(), support.end());
    }

    Vec node_sum(n, 0.0);
    for (int l : support) {
        node_sum[pairs[l].first] += g[l];
        node_sum[pairs[l].second] += g[l];
    }
    const double worst = *std::max_element(node_sum.begin(), node_sum.end());
    const double scale = worst > 1.0 ? 1.0 / worst : 1.0;

    Extraction out;
    out.topology.n = n;
    for (int l : support) {
        out.topology.edges.push_back(pairs[l]);
        out.topology.weights.push_back(g[l] * scale);
    }
    out.topology.validate();
    out.w = gossip_matrix(out.topology);
    return out;
}

Topology default_warm_start(int n, int r, std::uint64_t seed) {
    try {
        BandwidthProfile profile;
        profile.bandwidths.assign(n, 1.0);
        const auto alloc = allocate_edge_capacity(profile, r);
        AnnealConfig ac;
        ac.seed = seed;
        return anneal_degree_topology(alloc.edges_per_node, ac);
    } catch (const InfeasibleError&) {
        // r < n-1: no connected start exists; chain the first r+1 nodes
        Topology t;
        t.n = n;
        for (int i = 0; i < r; ++i) t.edges.push_back({i, i + 1});
        t.weights.assign(r, 1.0 / 3.0);
        t.validate();
        return t;
    }
}

Solution solve(int n, int r, const SolverConfig& cfg,
               const std::optional<Topology>& warm_start) {
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();
    ProblemData pd = assemble(n, r, cfg.alpha, cfg.rho);
    const auto lo = detail::hom_layout(n);

    Topology warm = warm_start ? *warm_start : default_warm_start(n, r, cfg.seed);
    warm.validate();
    if (warm.n != n) throw std::invalid_argument("solve: warm start node count mismatch");
    if (static_cast<int>(warm.edges.size()) > r)
        throw std::invalid_argument("solve: warm start has more than r edges");

    Vec x_state = detail::feasible_start(lo, warm, cfg.alpha);
    Vec y_state = x_state;
    Vec duals(pd.nx, 0.0);
    Vec kkt_warm(pd.nx + pd.neq, 0.0);
    std::copy(x_state.begin(), x_state.end(), kkt_warm.begin());

    Solution sol;
    sol.trace.reserve(std::min(cfg.max_iter, 4096));
    double best_res = std::numeric_limits<double>::infinity();
    Vec best_y = y_state;
    int best_iter = 0;
    double res = std::numeric_limits<double>::infinity();
    bool converged = false;
    int ran = 0;

    for (int iter = 1; iter <= cfg.max_iter; ++iter) {
        ran = iter;
        y_state = project_Y(pd, x_state, duals);
        x_state = update_X(pd, y_state, duals, kkt_warm, cfg.linear_tol);
        update_duals(pd, x_state, y_state, duals);

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
            best_iter = iter;
        }
        if (res <= cfg.epsilon) {
            converged = true;
            break;
        }
    }

    const Vec& pick = converged ? y_state : best_y;
    sol.converged = converged;
    sol.iterations = ran;
    sol.residual = converged ? res : best_res;
    if (!converged)
        sol.note = "stopped at max_iter; best iterate from iteration " +
                   std::to_string(best_iter);
    sol.lambda_tilde = pick[pd.lambda_ix];

    auto extraction = extract_topology(n, r, pick, cfg.weight_floor);
    sol.topology = std::move(extraction.topology);
    sol.w = std::move(extraction.w);
    const auto rep = spectral_report(sol.w);
    sol.acf_value = rep.acf;
    sol.connected = rep.connected;

    sol.wall_time_ms = std::chrono::duration<double, std::milli>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
    return sol;
}

}  // namespace topoopt
