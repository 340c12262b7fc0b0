// Command-line front end: allocate, optimize, simulate, benchmark.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "topoopt/admm.hpp"
#include "topoopt/admm_het.hpp"
#include "topoopt/anneal.hpp"
#include "topoopt/bandwidth.hpp"
#include "topoopt/consensus.hpp"
#include "topoopt/errors.hpp"
#include "topoopt/textio.hpp"
#include "topoopt/topology.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace topoopt;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return text;
}

// tmp + rename so readers never observe a half-written file
void write_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("short write to " + tmp.string());
    }
    fs::rename(tmp, path);
}

json parse_config(const std::string& path) {
    return json::parse(read_file(path));
}

void reject_unknown(const json& j, std::initializer_list<const char*> allowed,
                    const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw std::invalid_argument(where + ": unknown field " + key);
    }
}

int thread_cap() {
    if (const char* env = std::getenv("TOPOOPT_THREADS")) {
        const int v = std::atoi(env);
        if (v < 1) throw std::invalid_argument("TOPOOPT_THREADS must be a positive integer");
        return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

struct RunContext {
    std::string command;
    fs::path out_dir;
    json resolved_config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    fs::path emit(const std::string& name, const std::string& content) {
        fs::create_directories(out_dir);
        const fs::path p = out_dir / name;
        write_atomic(p, content);
        outputs.push_back(p.string());
        return p;
    }

    void finish() {
        json m;
        m["command"] = command;
        m["tool_version"] = kVersion;
        m["seed"] = seed;
        m["config"] = resolved_config;
        m["inputs"] = inputs;
        m["outputs"] = outputs;
        m["wall_time_ms"] = std::chrono::duration<double, std::milli>(
                                std::chrono::steady_clock::now() - started)
                                .count();
        fs::create_directories(out_dir);
        write_atomic(out_dir / "manifest.json", m.dump(2) + "\n");
    }
};

SolverConfig solver_from(const json& cfg, std::optional<std::uint64_t> seed_flag) {
    SolverConfig sc;
    if (cfg.contains("solver")) sc = solver_config_from_json(cfg.at("solver").dump());
    if (seed_flag) sc.seed = *seed_flag;
    return sc;
}

AnnealConfig anneal_from(const json& cfg, std::uint64_t default_seed) {
    AnnealConfig ac;
    ac.seed = default_seed;
    if (!cfg.contains("anneal")) return ac;
    const json& a = cfg.at("anneal");
    reject_unknown(a, {"t0", "cooling", "steps", "moves_per_temp", "seed"}, "anneal config");
    ac.t0 = a.value("t0", ac.t0);
    ac.cooling = a.value("cooling", ac.cooling);
    ac.steps = a.value("steps", ac.steps);
    ac.moves_per_temp = a.value("moves_per_temp", ac.moves_per_temp);
    ac.seed = a.value("seed", ac.seed);
    ac.validate();
    return ac;
}

json solver_echo(const SolverConfig& sc) {
    return json{{"rho", sc.rho},           {"epsilon", sc.epsilon},
                {"max_iter", sc.max_iter}, {"alpha", sc.alpha},
                {"weight_floor", sc.weight_floor}, {"seed", sc.seed},
                {"linear_tol", sc.linear_tol}};
}

json anneal_echo(const AnnealConfig& ac) {
    return json{{"t0", ac.t0},
                {"cooling", ac.cooling},
                {"steps", ac.steps},
                {"moves_per_temp", ac.moves_per_temp},
                {"seed", ac.seed}};
}

Topology warm_hom(int n, int r, const AnnealConfig& ac) {
    try {
        BandwidthProfile profile;
        profile.bandwidths.assign(n, 1.0);
        const auto alloc = allocate_edge_capacity(profile, r);
        return anneal_degree_topology(alloc.edges_per_node, ac);
    } catch (const InfeasibleError&) {
        Topology t;
        t.n = n;
        for (int i = 0; i < r; ++i) t.edges.push_back({i, i + 1});
        t.weights.assign(r, 1.0 / 3.0);
        t.validate();
        return t;
    }
}

int cmd_allocate(const std::string& config_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed_flag) {
    RunContext run;
    run.command = "allocate";
    run.out_dir = out_dir;
    run.inputs.push_back(config_path);
    const json cfg = parse_config(config_path);
    reject_unknown(cfg, {"bandwidths", "edge_caps", "r"}, "allocate config");
    if (!cfg.contains("bandwidths") || !cfg.contains("r"))
        throw std::invalid_argument("allocate config needs bandwidths and r");
    BandwidthProfile profile;
    profile.bandwidths = cfg.at("bandwidths").get<std::vector<double>>();
    if (cfg.contains("edge_caps"))
        profile.edge_caps = cfg.at("edge_caps").get<std::vector<int>>();
    const int r = cfg.at("r").get<int>();
    run.seed = seed_flag.value_or(0);

    const auto alloc = allocate_edge_capacity(profile, r);

    json out;
    out["b_unit"] = alloc.b_unit;
    out["e"] = alloc.edges_per_node;
    run.emit("allocation.json", out.dump(2) + "\n");
    run.resolved_config = cfg;
    run.resolved_config["edge_caps"] =
        profile.edge_caps.empty()
            ? std::vector<int>(profile.bandwidths.size(),
                               static_cast<int>(profile.bandwidths.size()) - 1)
            : profile.edge_caps;
    run.finish();
    std::cout << "b_unit " << g17(alloc.b_unit) << "\n";
    return 0;
}

int cmd_optimize(const std::string& config_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed_flag) {
    RunContext run;
    run.command = "optimize";
    run.out_dir = out_dir;
    run.inputs.push_back(config_path);
    json cfg = parse_config(config_path);
    reject_unknown(cfg,
                   {"mode", "n", "r", "bandwidths", "edge_caps", "tree", "p", "k",
                    "layer_bandwidths", "solver", "anneal"},
                   "optimize config");
    if (!cfg.contains("mode")) throw std::invalid_argument("optimize config needs a mode");
    const std::string mode = cfg.at("mode").get<std::string>();

    SolverConfig sc = solver_from(cfg, seed_flag);
    const AnnealConfig ac = anneal_from(cfg, sc.seed);
    run.seed = sc.seed;

    Solution sol;
    Topology warm;
    std::optional<CapacitySystem> sys;
    std::optional<int> r_explicit;

    if (mode == "homogeneous") {
        if (!cfg.contains("n") || !cfg.contains("r"))
            throw std::invalid_argument("homogeneous mode needs n and r");
        const int n = cfg.at("n").get<int>();
        const int r = cfg.at("r").get<int>();
        warm = warm_hom(n, r, ac);
        run.emit("warm_start.json", topology_to_json(warm));
        sol = solve(n, r, sc, warm);
    } else if (mode == "node") {
        if (!cfg.contains("bandwidths") || !cfg.contains("r"))
            throw std::invalid_argument("node mode needs bandwidths and r");
        BandwidthProfile profile;
        profile.bandwidths = cfg.at("bandwidths").get<std::vector<double>>();
        if (cfg.contains("edge_caps"))
            profile.edge_caps = cfg.at("edge_caps").get<std::vector<int>>();
        const int n = static_cast<int>(profile.bandwidths.size());
        const int r = cfg.at("r").get<int>();
        const auto alloc = allocate_edge_capacity(profile, r);
        json aj;
        aj["b_unit"] = alloc.b_unit;
        aj["e"] = alloc.edges_per_node;
        run.emit("allocation.json", aj.dump(2) + "\n");
        sys = node_level_constraints(n, alloc.edges_per_node);
        warm = anneal_topology(*sys, std::nullopt, ac);
        run.emit("warm_start.json", topology_to_json(warm));
        sol = solve_het(*sys, std::nullopt, sc, warm);
    } else if (mode == "intra") {
        if (!cfg.contains("tree") || !cfg.contains("r"))
            throw std::invalid_argument("intra mode needs tree and r");
        const Scenario sc_tree = scenario_from_json(
            json{{"mode", "intra"}, {"tree", cfg.at("tree")}}.dump());
        const auto& tree = std::get<IntraScenario>(sc_tree).tree;
        sys = intra_server_constraints(tree);
        r_explicit = cfg.at("r").get<int>();
        warm = anneal_topology(*sys, r_explicit, ac);
        run.emit("warm_start.json", topology_to_json(warm));
        sol = solve_het(*sys, r_explicit, sc, warm);
    } else if (mode == "bcube") {
        if (!cfg.contains("p") || !cfg.contains("k") || !cfg.contains("r"))
            throw std::invalid_argument("bcube mode needs p, k, and r");
        BCubeSpec spec;
        spec.p = cfg.at("p").get<int>();
        spec.k = cfg.at("k").get<int>();
        if (cfg.contains("layer_bandwidths"))
            spec.layer_bandwidths = cfg.at("layer_bandwidths").get<std::vector<double>>();
        sys = bcube_constraints(spec);
        r_explicit = cfg.at("r").get<int>();
        warm = anneal_topology(*sys, r_explicit, ac);
        run.emit("warm_start.json", topology_to_json(warm));
        sol = solve_het(*sys, r_explicit, sc, warm);
    } else {
        throw std::invalid_argument("unknown optimize mode: " + mode);
    }

    run.emit("topology.json", topology_to_json(sol.topology));
    run.emit("w.csv", matrix_to_csv(sol.w));
    run.emit("trace.csv", sol.trace_csv());
    if (sys) run.emit("utilization.csv", utilization_csv(utilization(*sys, sol.topology)));

    json sj;
    sj["mode"] = mode;
    sj["acf"] = sol.acf_value;
    sj["lambda_tilde"] = sol.lambda_tilde;
    sj["converged"] = sol.converged;
    sj["connected"] = sol.connected;
    sj["repaired"] = sol.repaired;
    sj["iterations"] = sol.iterations;
    sj["residual"] = sol.residual;
    sj["edges"] = sol.topology.edges.size();
    sj["note"] = sol.note;
    run.emit("solution.json", sj.dump(2) + "\n");

    run.resolved_config = cfg;
    run.resolved_config["solver"] = solver_echo(sc);
    run.resolved_config["anneal"] = anneal_echo(ac);
    run.finish();
    std::cout << "acf " << g17(sol.acf_value) << "\n";
    if (!sol.note.empty()) std::cout << "note " << sol.note << "\n";
    return sol.converged && sol.connected ? 0 : 3;
}

int cmd_simulate(const std::string& config_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed_flag, std::optional<double> threshold_flag,
                 std::optional<int> iters_flag) {
    RunContext run;
    run.command = "simulate";
    run.out_dir = out_dir;
    run.inputs.push_back(config_path);
    json cfg = parse_config(config_path);
    reject_unknown(cfg,
                   {"topologies", "scenario", "dim", "iters", "threshold", "seed", "b_avail",
                    "t_comm"},
                   "simulate config");
    if (!cfg.contains("topologies") || !cfg.contains("scenario"))
        throw std::invalid_argument("simulate config needs topologies and scenario");

    const int dim = cfg.value("dim", kDefaultSimDim);
    const int iters = iters_flag.value_or(cfg.value("iters", 500));
    const double threshold = threshold_flag.value_or(cfg.value("threshold", 1e-4));
    const std::uint64_t seed = seed_flag.value_or(cfg.value("seed", std::uint64_t{0}));
    const double b_avail = cfg.value("b_avail", kDefaultBandwidth);
    const double t_comm = cfg.value("t_comm", kDefaultCommTime);
    if (!(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
    run.seed = seed;

    const Scenario scenario = scenario_from_json(cfg.at("scenario").dump());
    const bool fixed = std::holds_alternative<FixedScenario>(scenario);

    struct Item {
        std::string label;
        Topology topo;
        Matrix w;
        double b_min = 0.0;
        double t_iter_ms = 0.0;
    };
    std::vector<Item> items;
    for (const auto& entry : cfg.at("topologies")) {
        const std::string path = entry.get<std::string>();
        run.inputs.push_back(path);
        Item item;
        item.label = fs::path(path).stem().string();
        item.topo = topology_from_json(read_file(path));
        item.w = gossip_matrix(item.topo);
        if (fixed) {
            item.t_iter_ms = std::get<FixedScenario>(scenario).t_iter_ms;
        } else {
            item.b_min = min_edge_bandwidth(item.topo, scenario);
            item.t_iter_ms = iter_time(b_avail, item.b_min, t_comm);
        }
        items.push_back(std::move(item));
    }
    if (items.empty()) throw std::invalid_argument("simulate config lists no topologies");

    CompareReport report;
    report.traces.resize(items.size());
    report.convergence_ms.resize(items.size());
    std::atomic<size_t> cursor{0};
    auto worker = [&] {
        for (;;) {
            const size_t ix = cursor.fetch_add(1);
            if (ix >= items.size()) return;
            ConsensusTrace trace = simulate(items[ix].w, dim, iters, seed);
            trace.label = items[ix].label;
            trace.t_iter_ms = items[ix].t_iter_ms;
            // threshold is relative to each run's own starting error
            const double abs_threshold = threshold * trace.errors.front();
            report.convergence_ms[ix] =
                abs_threshold > 0.0
                    ? convergence_time(trace, abs_threshold, items[ix].t_iter_ms)
                    : 0.0;
            report.traces[ix] = std::move(trace);
        }
    };
    const int workers = std::min<int>(thread_cap(), static_cast<int>(items.size()));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    run.emit("comparison.csv", report.to_csv());
    std::string times = "label,b_min,t_iter_ms,time_ms\n";
    for (size_t ix = 0; ix < items.size(); ++ix) {
        const double ms = report.convergence_ms[ix];
        times += items[ix].label;
        times += ',';
        times += fixed ? std::string() : g17(items[ix].b_min);
        times += ',';
        times += g17(items[ix].t_iter_ms);
        times += ',';
        times += std::isfinite(ms) ? g17(ms) : std::string("not_reached");
        times += '\n';
        std::cout << items[ix].label << " "
                  << (std::isfinite(ms) ? g17(ms) + " ms" : std::string("not_reached"))
                  << "\n";
    }
    run.emit("times.csv", times);

    run.resolved_config = cfg;
    run.resolved_config["dim"] = dim;
    run.resolved_config["iters"] = iters;
    run.resolved_config["threshold"] = threshold;
    run.resolved_config["seed"] = seed;
    run.resolved_config["b_avail"] = b_avail;
    run.resolved_config["t_comm"] = t_comm;
    run.finish();
    return 0;
}

int cmd_benchmark(const std::string& kind, int n, const fs::path& out_dir) {
    RunContext run;
    run.command = "benchmark";
    run.out_dir = out_dir;
    const Topology t = generate_benchmark(benchmark_kind_from_string(kind), n);
    const Matrix w = gossip_matrix(t);
    const auto rep = spectral_report(w);

    run.emit("topology.json", topology_to_json(t));
    json sj;
    sj["kind"] = kind;
    sj["n"] = n;
    sj["acf"] = rep.acf;
    sj["lambda2"] = rep.lambda2;
    sj["lambda_n"] = rep.lambda_n;
    sj["connected"] = rep.connected;
    sj["edges"] = t.edges.size();
    run.emit("spectral.json", sj.dump(2) + "\n");
    run.resolved_config = json{{"kind", kind}, {"n", n}};
    run.finish();
    std::cout << "acf " << g17(rep.acf) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bandwidth-aware topology design toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", bench_kind;
    int bench_n = 0;
    std::optional<std::uint64_t> seed_flag;
    std::optional<double> threshold_flag;
    std::optional<int> iters_flag;

    auto add_common = [&](CLI::App* sub, bool needs_config) {
        auto* opt = sub->add_option("--config", config_path, "JSON config path");
        if (needs_config) opt->required();
        sub->add_option("--out", out_dir, "output directory (default .)");
    };

    auto* alloc_cmd = app.add_subcommand("allocate", "split an edge budget across nodes");
    add_common(alloc_cmd, true);
    alloc_cmd->add_option("--seed", seed_flag, "seed recorded in the manifest");

    auto* opt_cmd = app.add_subcommand("optimize", "design an edge-weight topology");
    add_common(opt_cmd, true);
    opt_cmd->add_option("--seed", seed_flag, "overrides solver.seed");

    auto* sim_cmd = app.add_subcommand("simulate", "measure consensus decay and timing");
    add_common(sim_cmd, true);
    sim_cmd->add_option("--seed", seed_flag, "overrides config seed");
    sim_cmd->add_option("--threshold", threshold_flag,
                        "relative error threshold (overrides config)");
    sim_cmd->add_option("--iters", iters_flag, "iterations (overrides config)");

    auto* bench_cmd = app.add_subcommand("benchmark", "emit a reference topology");
    bench_cmd->add_option("kind", bench_kind, "ring | grid2d | torus2d | exponential")
        ->required();
    bench_cmd->add_option("n", bench_n, "node count")->required();
    bench_cmd->add_option("--out", out_dir, "output directory (default .)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(alloc_cmd))
            return cmd_allocate(config_path, out_dir, seed_flag);
        if (app.got_subcommand(opt_cmd)) return cmd_optimize(config_path, out_dir, seed_flag);
        if (app.got_subcommand(sim_cmd))
            return cmd_simulate(config_path, out_dir, seed_flag, threshold_flag, iters_flag);
        if (app.got_subcommand(bench_cmd)) return cmd_benchmark(bench_kind, bench_n, out_dir);
    } catch (const InfeasibleError& e) {
        std::cerr << "error: infeasible-capacity: " << e.what() << "\n";
        return 2;
    } catch (const LinearSolveError& e) {
        std::cerr << "error: solver: " << e.what() << "\n";
        return 3;
    } catch (const DegenerateSolutionError& e) {
        std::cerr << "error: solver: " << e.what() << "\n";
        return 3;
    } catch (const json::exception& e) {
        std::cerr << "error: invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
