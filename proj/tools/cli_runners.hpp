// Typed parameter access and one runner per subcommand. Every runner
// validates its parameters up front, delegates to exactly one library
// operation, and returns a result table whose leading columns repeat the
// inputs so sweep output is self-describing.
#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>

#include "cli_output.hpp"
#include "kcsm/kcsm.hpp"

namespace cli {

inline const std::string* find(const ParamMap& pm, const std::string& key) {
    const auto it = pm.find(key);
    return it == pm.end() ? nullptr : &it->second;
}

inline int64_t get_int(const ParamMap& pm, const std::string& key, int64_t fallback) {
    const auto* s = find(pm, key);
    if (!s) return fallback;
    int64_t v{};
    const auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), v);
    if (ec != std::errc{} || p != s->data() + s->size())
        throw kcsm::ValidationError("--" + key + ": expected an integer, got '" + *s + "'");
    return v;
}

inline double get_real(const ParamMap& pm, const std::string& key, double fallback) {
    const auto* s = find(pm, key);
    if (!s) return fallback;
    try {
        size_t pos = 0;
        const double v = std::stod(*s, &pos);
        if (pos != s->size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw kcsm::ValidationError("--" + key + ": expected a real number, got '" + *s + "'");
    }
}

inline std::string get_str(const ParamMap& pm, const std::string& key,
                           const std::string& fallback) {
    const auto* s = find(pm, key);
    return s ? *s : fallback;
}

inline kcsm::Family parse_family(const std::string& s) {
    if (s == "ofa") return kcsm::Family::OFA;
    if (s == "fa") return kcsm::Family::FA;
    if (s == "ne") return kcsm::Family::NE;
    throw kcsm::ValidationError("--family: expected ofa|fa|ne, got '" + s + "'");
}

inline kcsm::Boundary parse_boundary(const std::string& s) {
    if (s == "empty") return kcsm::Boundary::Empty;
    if (s == "filled") return kcsm::Boundary::Filled;
    throw kcsm::ValidationError("--boundary: expected empty|filled, got '" + s + "'");
}

struct Instance {
    kcsm::ModelSpec spec;
    kcsm::SiteGraph graph;
    int size = 0; ///< tree depth or triangle side
};

/// Shared model + graph setup: --family, --k, --j, --p, --depth/--side,
/// optional --graph override (rooted|unrooted|triangle).
inline Instance make_instance(const ParamMap& pm) {
    kcsm::ModelSpec spec;
    spec.family = parse_family(get_str(pm, "family", "ofa"));
    spec.k = static_cast<int>(get_int(pm, "k", 2));
    spec.j = static_cast<int>(get_int(pm, "j", 2));
    spec.p = get_real(pm, "p", 0.5);
    spec.validate();
    if (spec.family == kcsm::Family::NE) {
        const int side = static_cast<int>(get_int(pm, "side", -1));
        if (side < 0) throw kcsm::ValidationError("--side is required for the ne family");
        return {spec, kcsm::SiteGraph::triangle(side), side};
    }
    const int depth = static_cast<int>(get_int(pm, "depth", -1));
    if (depth < 0) throw kcsm::ValidationError("--depth is required for tree families");
    const std::string kind =
        get_str(pm, "graph", spec.family == kcsm::Family::FA ? "unrooted" : "rooted");
    if (kind == "rooted") return {spec, kcsm::SiteGraph::rooted_tree(spec.k, depth), depth};
    if (kind == "unrooted") return {spec, kcsm::SiteGraph::unrooted_tree(spec.k, depth), depth};
    if (kind == "triangle") return {spec, kcsm::SiteGraph::triangle(depth), depth};
    throw kcsm::ValidationError("--graph: expected rooted|unrooted|triangle, got '" + kind + "'");
}

// ---------------------------------------------------------------------------

inline RunResult run_threshold(const ParamMap& pm, uint64_t, int) {
    const int k = static_cast<int>(get_int(pm, "k", 2));
    const int j = static_cast<int>(get_int(pm, "j", 2));
    const double tol = get_real(pm, "tol", 1e-9);
    const auto r = kcsm::critical_density(k, j, tol);
    RunResult out;
    out.columns = {"k", "j", "p_c", "bracket_width", "evaluations"};
    out.rows.push_back({int64_t{k}, int64_t{j}, r.p_c, r.bracket_width, int64_t{r.evaluations}});
    return out;
}

inline RunResult run_recursion(const ParamMap& pm, uint64_t, int) {
    const int k = static_cast<int>(get_int(pm, "k", 2));
    const int j = static_cast<int>(get_int(pm, "j", 2));
    const double p = get_real(pm, "p", 0.5);
    const int n = static_cast<int>(get_int(pm, "n", 20));
    const auto seq = kcsm::iterate_recursion(k, j, p, n);
    RunResult out;
    out.columns = {"k", "j", "p", "m", "p_bar", "frozen_fraction_unrooted"};
    for (int m = 0; m <= n; ++m)
        out.rows.push_back({int64_t{k}, int64_t{j}, p, int64_t{m}, seq[m],
                            m >= 1 ? kcsm::frozen_fraction_unrooted(k, j, p, m) : p});
    return out;
}

inline RunResult run_fixed_point(const ParamMap& pm, uint64_t, int) {
    const int k = static_cast<int>(get_int(pm, "k", 2));
    const int j = static_cast<int>(get_int(pm, "j", 2));
    const double p = get_real(pm, "p", 0.5);
    const double tol = get_real(pm, "tol", 1e-12);
    const auto r = kcsm::largest_fixed_point(k, j, p, tol);
    RunResult out;
    out.columns = {"k", "j", "p", "p_inf", "derivative_at_fp", "stable", "iterations"};
    out.rows.push_back({int64_t{k}, int64_t{j}, p, r.p_inf, r.derivative_at_fp, r.stable,
                        int64_t{r.iterations}});
    return out;
}

inline RunResult run_ell_zero(const ParamMap& pm, uint64_t, int) {
    const int k = static_cast<int>(get_int(pm, "k", 2));
    const int j = static_cast<int>(get_int(pm, "j", 2));
    const double p = get_real(pm, "p", 0.3);
    const double p_tilde = kcsm::critical_density(k, j, 1e-12).p_c;
    const int ell = kcsm::ell_zero(k, j, p); // rejects p >= p_tilde with the value echoed
    RunResult out;
    out.columns = {"k", "j", "p", "p_tilde", "ell_zero"};
    out.rows.push_back({int64_t{k}, int64_t{j}, p, p_tilde, int64_t{ell}});
    return out;
}

inline RunResult run_gap(const ParamMap& pm, uint64_t, int) {
    const auto inst = make_instance(pm);
    kcsm::GapOptions opts;
    opts.boundary = parse_boundary(get_str(pm, "boundary", "empty"));
    opts.vertex_cap = static_cast<int>(get_int(pm, "vertex-cap", opts.vertex_cap));
    const auto s = kcsm::exact_gap(inst.spec, inst.graph, opts);
    if (!s.converged)
        throw kcsm::SolverError("gap: eigensolver did not converge", s.residual);
    RunResult out;
    out.columns = {"family", "k",   "j",        "p",      "size",     "vertices",
                   "num_states",    "gap",      "ergodic", "method",  "residual"};
    out.rows.push_back({std::string(kcsm::family_name(inst.spec.family)), int64_t{inst.spec.k},
                        int64_t{inst.spec.j}, inst.spec.p, int64_t{inst.size},
                        int64_t{inst.graph.num_vertices()},
                        static_cast<int64_t>(s.num_states), s.gap, s.ergodic, s.method,
                        s.residual});
    return out;
}

inline RunResult run_vbound(const ParamMap& pm, uint64_t seed, int) {
    ParamMap forced = pm;
    forced["family"] = get_str(pm, "family", "ofa");
    if (forced["family"] != "ofa")
        throw kcsm::ValidationError("vbound: the event-A bound is defined for --family ofa");
    const auto inst = make_instance(forced);
    const int steps = static_cast<int>(get_int(pm, "steps", inst.size));
    const std::string mode = get_str(pm, "mode", "mc");
    kcsm::DirichletReport r;
    if (mode == "exact") {
        r = kcsm::dirichlet_ratio_exact(inst.spec, inst.graph, [&](const kcsm::SpinConfig& c) {
            return kcsm::event_a(inst.spec, inst.graph, c, steps);
        });
    } else if (mode == "mc") {
        const auto samples = static_cast<uint64_t>(get_int(pm, "samples", 100000));
        r = kcsm::event_a_variational(inst.spec, inst.graph, steps, samples, seed);
    } else {
        throw kcsm::ValidationError("--mode: expected exact|mc, got '" + mode + "'");
    }
    if (!r.valid)
        throw kcsm::ValidationError("vbound: observable has zero variance at these parameters");
    RunResult out;
    out.estimator = mode == "mc" ? "monte_carlo" : "exact";
    out.samples = r.samples;
    out.columns = {"k",        "j",         "p",   "depth",       "steps",
                   "variance", "dirichlet", "ratio", "variance_se", "dirichlet_se", "ratio_se"};
    out.rows.push_back({int64_t{inst.spec.k}, int64_t{inst.spec.j}, inst.spec.p,
                        int64_t{inst.size}, int64_t{steps}, r.variance, r.dirichlet, r.ratio,
                        r.variance_se, r.dirichlet_se, r.ratio_se});
    return out;
}

inline RunResult run_rate(const ParamMap& pm, uint64_t, int) {
    const int k = static_cast<int>(get_int(pm, "k", 2));
    const int j = static_cast<int>(get_int(pm, "j", 2));
    const double p = get_real(pm, "p", 0.7);
    const double p_tilde = kcsm::critical_density(k, j, 1e-12).p_c;
    const double rate = kcsm::predicted_decay_rate(k, j, p); // rejects p <= p_tilde
    const auto fp = kcsm::largest_fixed_point(k, j, p, 1e-13);
    RunResult out;
    out.columns = {"k", "j", "p", "p_tilde", "p_inf", "g_prime_at_p_inf", "decay_rate"};
    out.rows.push_back(
        {int64_t{k}, int64_t{j}, p, p_tilde, fp.p_inf, fp.derivative_at_fp, rate});
    return out;
}

inline RunResult run_simulate(const ParamMap& pm, uint64_t seed, int threads) {
    const auto inst = make_instance(pm);
    kcsm::SimConfig cfg;
    cfg.t_max = get_real(pm, "tmax", 1000.0);
    cfg.burn_in = get_real(pm, "burnin", 0.0);
    cfg.sample_interval = get_real(pm, "interval", 1.0);
    cfg.replicas = static_cast<int>(get_int(pm, "replicas", 4));
    cfg.seed = seed;
    cfg.boundary = parse_boundary(get_str(pm, "boundary", "empty"));
    cfg.threads = threads;
    cfg.validate();

    std::optional<kcsm::SpinConfig> init;
    const std::string init_s = get_str(pm, "init", "eq");
    if (init_s == "zero")
        init = kcsm::SpinConfig(inst.graph.num_vertices());
    else if (init_s == "one")
        init = kcsm::SpinConfig(inst.graph.num_vertices(), true);
    else if (init_s != "eq")
        throw kcsm::ValidationError("--init: expected eq|zero|one, got '" + init_s + "'");

    const auto st = kcsm::simulate(inst.spec, inst.graph, init, cfg);
    const auto obs = get_str(pm, "observable", "root") == "density"
                         ? kcsm::Observable::Density
                         : kcsm::Observable::RootOccupancy;
    kcsm::AutocorrResult ac;
    bool have_ac = false;
    if (cfg.replicas >= 2) {
        ac = kcsm::autocorrelation(st, obs, get_real(pm, "maxlag", -1.0),
                                   get_real(pm, "fitskip", 0.0));
        have_ac = true;
    }

    if (const auto* path = find(pm, "dump-series")) {
        std::ofstream f(*path, std::ios::binary);
        f << "replica,t,root,density\n";
        for (size_t r = 0; r < st.root_series.size(); ++r)
            for (size_t i = 0; i < st.root_series[r].size(); ++i)
                f << r << ',' << format_real(st.first_sample_time + i * st.sample_interval)
                  << ',' << st.root_series[r][i] << ',' << format_real(st.density_series[r][i])
                  << "\n";
    }

    RunResult out;
    out.estimator = "monte_carlo";
    out.samples = st.total_events;
    out.columns = {"family",       "k",          "j",        "p",           "size",
                   "vertices",     "replicas",   "t_max",    "mean_density", "mean_density_se",
                   "mean_root",    "mean_root_se", "plateau_sq_dev", "plateau_sq_dev_se",
                   "tau_int",      "tau_int_se", "fit_rate", "fit_rate_se", "fit_lags",
                   "total_events"};
    out.rows.push_back({std::string(kcsm::family_name(inst.spec.family)), int64_t{inst.spec.k},
                        int64_t{inst.spec.j}, inst.spec.p, int64_t{inst.size},
                        int64_t{inst.graph.num_vertices()}, int64_t{cfg.replicas}, cfg.t_max,
                        st.mean_density, st.mean_density_se, st.mean_root, st.mean_root_se,
                        st.plateau_sq_dev, st.plateau_sq_dev_se, have_ac ? ac.tau_int : 0.0,
                        have_ac ? ac.tau_int_se : 0.0, have_ac ? ac.fit_rate : 0.0,
                        have_ac ? ac.fit_rate_se : 0.0, int64_t{have_ac ? ac.fit_lags : 0},
                        static_cast<int64_t>(st.total_events)});
    return out;
}

inline RunResult run_frozen_probe(const ParamMap& pm, uint64_t seed, int threads) {
    const auto inst = make_instance(pm);
    kcsm::SimConfig cfg;
    cfg.t_max = get_real(pm, "tmax", 100.0);
    cfg.sample_interval = 1.0;
    cfg.seed = seed;
    cfg.boundary = parse_boundary(get_str(pm, "boundary", "empty"));
    cfg.threads = threads;
    const int trials = static_cast<int>(get_int(pm, "trials", 400));
    const int inner = static_cast<int>(get_int(pm, "inner", 32));
    const auto r = kcsm::frozen_probe(inst.spec, inst.graph, cfg, trials, inner);
    RunResult out;
    out.estimator = "monte_carlo";
    out.samples = static_cast<uint64_t>(trials) * inner;
    out.columns = {"family", "k", "j", "p", "size", "t_probe", "trials", "inner_reps",
                   "plateau", "plateau_se"};
    out.rows.push_back({std::string(kcsm::family_name(inst.spec.family)), int64_t{inst.spec.k},
                        int64_t{inst.spec.j}, inst.spec.p, int64_t{inst.size}, r.t_probe,
                        int64_t{r.trials}, int64_t{r.inner_reps}, r.plateau, r.se});
    return out;
}

inline RunResult run_ne_bootstrap(const ParamMap& pm, uint64_t seed, int) {
    const int side = static_cast<int>(get_int(pm, "side", 10));
    const double p = get_real(pm, "p", 0.5);
    const auto boundary = parse_boundary(get_str(pm, "boundary", "empty"));
    const std::string init = get_str(pm, "init", "one");
    const kcsm::ModelSpec ne{kcsm::Family::NE, 0, 0, p};
    const auto tri = kcsm::SiteGraph::triangle(side);
    RunResult out;
    out.columns = {"side", "p", "init", "boundary", "iterations_to_fixpoint", "final_occupied",
                   "root_occupied_at_fixpoint"};
    if (init == "one") {
        const auto r = kcsm::bootstrap_fixpoint(ne, tri, kcsm::SpinConfig(tri.num_vertices(), true),
                                                boundary);
        out.rows.push_back({int64_t{side}, p, init, kcsm::boundary_name(boundary),
                            int64_t{r.iterations_to_fixpoint},
                            int64_t{r.final.count_occupied()},
                            r.root_occupied_trace.back()});
        return out;
    }
    if (init != "random")
        throw kcsm::ValidationError("--init: expected one|random, got '" + init + "'");
    const auto samples = static_cast<uint64_t>(get_int(pm, "samples", 1000));
    kcsm::Rng rng(seed);
    out.estimator = "monte_carlo";
    out.samples = samples;
    double iter_sum = 0, occ_sum = 0, root_sum = 0;
    for (uint64_t i = 0; i < samples; ++i) {
        const auto r =
            kcsm::bootstrap_fixpoint(ne, tri, kcsm::sample_config(ne, tri, rng), boundary);
        iter_sum += r.iterations_to_fixpoint;
        occ_sum += r.final.count_occupied();
        root_sum += r.root_occupied_trace.back();
    }
    const double n = static_cast<double>(samples);
    out.columns = {"side", "p", "init", "boundary", "mean_iterations", "mean_final_occupied",
                   "root_occupied_fraction"};
    out.rows.push_back({int64_t{side}, p, init, kcsm::boundary_name(boundary), iter_sum / n,
                        occ_sum / n, root_sum / n});
    return out;
}

inline RunResult run_ne_pell(const ParamMap& pm, uint64_t seed, int) {
    const double p = get_real(pm, "p", 0.5);
    const int side = static_cast<int>(get_int(pm, "side", 200));
    const auto samples = static_cast<uint64_t>(get_int(pm, "samples", 10000));
    std::vector<int> ells;
    std::stringstream ss(get_str(pm, "ells", "1,2,5,10,20,40"));
    for (std::string tok; std::getline(ss, tok, ',');) {
        ParamMap one{{"ell", tok}};
        ells.push_back(static_cast<int>(get_int(one, "ell", -1)));
    }
    const auto reps = kcsm::estimate_p_ell(p, ells, side, samples, seed);
    RunResult out;
    out.estimator = "monte_carlo";
    out.samples = samples;
    out.columns = {"p", "side", "ell", "p_ell", "p_ell_se", "delta", "condition_value",
                   "passes"};
    for (const auto& r : reps)
        out.rows.push_back({p, int64_t{side}, int64_t{r.ell}, r.p_ell, r.se, r.delta,
                            r.condition_value, r.passes});
    return out;
}

using Runner = std::function<RunResult(const ParamMap&, uint64_t, int)>;

inline const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> table{
        {"threshold", run_threshold},
        {"recursion", run_recursion},
        {"fixed-point", run_fixed_point},
        {"ell-zero", run_ell_zero},
        {"gap", run_gap},
        {"vbound", run_vbound},
        {"rate", run_rate},
        {"simulate", run_simulate},
        {"frozen-probe", run_frozen_probe},
        {"ne-bootstrap", run_ne_bootstrap},
        {"ne-pell", run_ne_pell},
    };
    return table;
}

} // namespace cli
