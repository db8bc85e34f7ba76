// kcsm command line: every analysis as a subcommand with machine-readable
// output (results.csv/results.json + manifest.json) and reproducible seeds.
#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

#include "cli_runners.hpp"

namespace {

enum ExitCode : int {
    exit_ok = 0,
    exit_error = 1,
    exit_validation = 2,
    exit_nonconvergence = 3,
    exit_resource = 4,
};

struct SubDef {
    const char* name;
    const char* help;
    std::vector<std::pair<const char*, const char*>> params;
};

const std::vector<SubDef>& subcommand_table() {
    static const std::vector<SubDef> defs{
        {"threshold",
         "critical density p-tilde by bisection of the fixed-point classifier",
         {{"k", "children per vertex"},
          {"j", "facilitating parameter"},
          {"tol", "bisection bracket width (default 1e-9)"}}},
        {"recursion",
         "iterate p_m = g_p(p_{m-1}) and the unrooted frozen fraction",
         {{"k", "children per vertex"},
          {"j", "facilitating parameter"},
          {"p", "density"},
          {"n", "number of iterations (default 20)"}}},
        {"fixed-point",
         "largest fixed point of g_p with its derivative",
         {{"k", "children per vertex"},
          {"j", "facilitating parameter"},
          {"p", "density"},
          {"tol", "iteration tolerance (default 1e-12)"}}},
        {"ell-zero",
         "smallest ell with (ell+1) p_ell / p <= 1/4 (requires p below p-tilde)",
         {{"k", "children per vertex"}, {"j", "facilitating parameter"}, {"p", "density"}}},
        {"gap",
         "exact spectral gap of the finite-volume generator",
         {{"family", "ofa|fa|ne (default ofa)"},
          {"k", "children per vertex"},
          {"j", "facilitating parameter"},
          {"p", "density"},
          {"depth", "tree depth (tree families)"},
          {"side", "triangle side (ne)"},
          {"graph", "rooted|unrooted|triangle (defaults per family)"},
          {"boundary", "empty|filled (default empty = unconstrained leaves)"},
          {"vertex-cap", "state-space cap as vertex count (default 24)"}}},
        {"vbound",
         "variational gap bound with f = indicator of the bootstrap event A",
         {{"family", "must be ofa"},
          {"k", "children per vertex"},
          {"j", "facilitating parameter"},
          {"p", "density"},
          {"depth", "tree depth"},
          {"graph", "rooted|unrooted (default rooted)"},
          {"steps", "bootstrap iterations defining A (default depth)"},
          {"mode", "exact|mc (default mc)"},
          {"samples", "Monte Carlo samples (default 100000)"}}},
        {"rate",
         "predicted per-level decay rate -log g_p'(p_inf) above p-tilde",
         {{"k", "children per vertex"}, {"j", "facilitating parameter"}, {"p", "density"}}},
        {"simulate",
         "continuous-time Glauber dynamics with autocorrelation analysis",
         {{"family", "ofa|fa|ne (default ofa)"},
          {"k", "children per vertex"},
          {"j", "facilitating parameter"},
          {"p", "density"},
          {"depth", "tree depth (tree families)"},
          {"side", "triangle side (ne)"},
          {"graph", "rooted|unrooted|triangle (defaults per family)"},
          {"boundary", "empty|filled (default empty)"},
          {"tmax", "simulated time horizon (default 1000)"},
          {"burnin", "discarded initial time (default 0)"},
          {"interval", "observable sampling interval (default 1)"},
          {"replicas", "independent replicas (default 4)"},
          {"init", "eq|zero|one (default eq = equilibrium sample)"},
          {"observable", "root|density for the autocorrelation fit (default root)"},
          {"maxlag", "max autocorrelation lag time (default span/20)"},
          {"fitskip", "exclude lags below this time from the fit (default 0)"},
          {"dump-series", "write the raw observable series to this CSV path"}}},
        {"frozen-probe",
         "late-time squared deviation of the conditional root occupancy from p",
         {{"family", "ofa|fa|ne (default ofa)"},
          {"k", "children per vertex"},
          {"j", "facilitating parameter"},
          {"p", "density"},
          {"depth", "tree depth (tree families)"},
          {"side", "triangle side (ne)"},
          {"graph", "rooted|unrooted|triangle (defaults per family)"},
          {"boundary", "empty|filled (default empty)"},
          {"tmax", "probe time (default 100)"},
          {"trials", "initial conditions (default 400)"},
          {"inner", "repeated runs per initial condition (default 32)"}}},
        {"ne-bootstrap",
         "North-East bootstrap on the triangle until the fixed point",
         {{"side", "triangle side L"},
          {"p", "density for random initial configurations"},
          {"init", "one|random (default one)"},
          {"samples", "random initial configurations (default 1000)"},
          {"boundary", "empty|filled (default empty)"}}},
        {"ne-pell",
         "Monte Carlo p_ell^NE on a finite window with the Theorem-5.3 condition value",
         {{"p", "density"},
          {"side", "window side (default 200)"},
          {"samples", "Monte Carlo samples (default 10000)"},
          {"ells", "comma-separated ell grid (default 1,2,5,10,20,40)"}}},
    };
    return defs;
}

const SubDef* find_subdef(const std::string& name) {
    for (const auto& d : subcommand_table())
        if (name == d.name) return &d;
    return nullptr;
}

void load_config_file(const std::string& path, const SubDef& def, cli::ParamMap& pm) {
    std::ifstream f(path);
    if (!f) throw kcsm::ValidationError("config: cannot open '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto strip = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        if (strip(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw kcsm::ValidationError("config:" + std::to_string(lineno) +
                                        ": expected key = value");
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        bool known = key == "seed" || key == "threads" || key == "out" || key == "format";
        for (const auto& [k, h] : def.params) known = known || key == k;
        if (!known)
            throw kcsm::ValidationError("config:" + std::to_string(lineno) + ": unknown key '" +
                                        key + "' for subcommand " + def.name);
        pm.emplace(key, val); // does not overwrite: flags take precedence
    }
}

/// "a,b,c" -> list; "a:b" / "a:b:step" -> inclusive numeric range.
std::vector<std::string> expand_axis(const std::string& value) {
    std::vector<std::string> out;
    if (value.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(value);
        for (std::string tok; std::getline(ss, tok, ':');) parts.push_back(tok);
        if (parts.size() < 2 || parts.size() > 3)
            throw kcsm::ValidationError("sweep: bad range '" + value + "' (want a:b or a:b:step)");
        const double a = std::stod(parts[0]), b = std::stod(parts[1]);
        const double step = parts.size() == 3 ? std::stod(parts[2]) : 1.0;
        if (!(step > 0)) throw kcsm::ValidationError("sweep: range step must be > 0");
        const bool integral = value.find('.') == std::string::npos &&
                              value.find('e') == std::string::npos;
        for (double x = a; x <= b + 1e-12 * std::max(1.0, std::abs(b)); x += step) {
            if (integral)
                out.push_back(std::to_string(static_cast<long long>(std::llround(x))));
            else
                out.push_back(cli::format_real(x));
        }
        return out;
    }
    std::stringstream ss(value);
    for (std::string tok; std::getline(ss, tok, ',');) out.push_back(tok);
    if (out.empty()) throw kcsm::ValidationError("sweep: empty value list");
    return out;
}

struct SweepPlan {
    std::vector<std::string> axis_keys;
    std::vector<std::vector<std::string>> axis_values;
    cli::ParamMap base;
    size_t size() const {
        size_t n = 1;
        for (const auto& v : axis_values) n *= v.size();
        return n;
    }
    cli::ParamMap point(size_t index) const {
        cli::ParamMap pm = base;
        for (size_t a = axis_keys.size(); a-- > 0;) {
            pm[axis_keys[a]] = axis_values[a][index % axis_values[a].size()];
            index /= axis_values[a].size();
        }
        return pm;
    }
};

cli::RunResult run_sweep(const std::string& target, const SweepPlan& plan, uint64_t seed,
                         int threads) {
    const auto& runner = cli::runners().at(target);
    const size_t n = plan.size();
    std::vector<cli::RunResult> results(n);
    std::vector<std::string> errors(n);
    std::atomic<size_t> next{0};
    const int pool = std::max(1, std::min<int>(threads, static_cast<int>(n)));
    std::vector<std::thread> workers;
    for (int t = 0; t < pool; ++t)
        workers.emplace_back([&] {
            for (size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
                try {
                    results[i] = runner(plan.point(i), seed + i, 1);
                } catch (const std::exception& e) {
                    errors[i] = e.what();
                }
            }
        });
    for (auto& w : workers) w.join();
    for (size_t i = 0; i < n; ++i)
        if (!errors[i].empty())
            throw kcsm::ValidationError("sweep point " + std::to_string(i) + ": " + errors[i]);

    cli::RunResult merged;
    merged.columns.push_back("grid_index");
    merged.columns.insert(merged.columns.end(), results[0].columns.begin(),
                          results[0].columns.end());
    merged.estimator = results[0].estimator;
    merged.samples = results[0].samples;
    for (size_t i = 0; i < n; ++i) { // deterministic order by grid index
        for (const auto& row : results[i].rows) {
            std::vector<cli::Value> r;
            r.emplace_back(static_cast<int64_t>(i));
            r.insert(r.end(), row.begin(), row.end());
            merged.rows.push_back(std::move(r));
        }
    }
    return merged;
}

int default_threads() {
    if (const char* env = std::getenv("KCSM_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"kcsm: kinetically constrained spin models on trees and the North-East lattice"};
    app.require_subcommand(1);

    std::string out_dir = ".";
    std::string format = "csv";
    std::string config_path;
    uint64_t seed = 0;
    int threads = default_threads();
    app.add_option("--out", out_dir, "output directory (results + manifest)")
        ->capture_default_str();
    app.add_option("--format", format, "csv|json")->capture_default_str();
    app.add_option("--seed", seed, "base seed for every stochastic estimate")
        ->capture_default_str();
    app.add_option("--threads", threads, "parallelism degree (env KCSM_THREADS)")
        ->capture_default_str();
    app.add_option("--config", config_path, "key = value file; flags take precedence");

    std::map<std::string, cli::ParamMap> collected;
    for (const auto& def : subcommand_table()) {
        auto* sub = app.add_subcommand(def.name, def.help);
        sub->fallthrough();
        auto& pm = collected[def.name];
        for (const auto& [key, help] : def.params) {
            const std::string k = key;
            sub->add_option_function<std::string>(
                "--" + k, [&pm, k](const std::string& v) { pm[k] = v; }, help);
        }
    }
    auto* sweep = app.add_subcommand(
        "sweep", "map a parameter grid over another subcommand (values: a,b,c or a:b[:step])");
    sweep->fallthrough();
    sweep->allow_extras();
    std::string sweep_target;
    sweep->add_option("--sub", sweep_target, "target subcommand")->required();

    try {
        app.parse(argc, argv);
        const auto t0 = std::chrono::steady_clock::now();
        cli::RunResult result;
        std::string name;
        cli::ParamMap manifest_params;

        if (sweep->parsed()) {
            name = "sweep";
            const auto* def = find_subdef(sweep_target);
            if (!def) throw kcsm::ValidationError("sweep: unknown subcommand '" + sweep_target + "'");
            SweepPlan plan;
            const auto extras = sweep->remaining();
            for (size_t i = 0; i < extras.size(); ++i) {
                std::string key = extras[i], value;
                if (key.rfind("--", 0) != 0)
                    throw kcsm::ValidationError("sweep: expected --key value, got '" + key + "'");
                key = key.substr(2);
                const auto eq = key.find('=');
                if (eq != std::string::npos) {
                    value = key.substr(eq + 1);
                    key = key.substr(0, eq);
                } else {
                    if (++i >= extras.size())
                        throw kcsm::ValidationError("sweep: missing value for --" + key);
                    value = extras[i];
                }
                bool known = false;
                for (const auto& [k, h] : def->params) known = known || key == k;
                if (!known)
                    throw kcsm::ValidationError("sweep: unknown key '--" + key + "' for " +
                                                sweep_target);
                const auto vals = expand_axis(value);
                if (vals.size() == 1) {
                    plan.base[key] = vals[0];
                } else {
                    plan.axis_keys.push_back(key);
                    plan.axis_values.push_back(vals);
                }
                manifest_params[key] = value;
            }
            if (!config_path.empty()) load_config_file(config_path, *def, plan.base);
            manifest_params["sub"] = sweep_target;
            result = run_sweep(sweep_target, plan, seed, threads);
        } else {
            const CLI::App* active = app.get_subcommands().front();
            name = active->get_name();
            auto pm = collected[name];
            if (!config_path.empty()) load_config_file(config_path, *find_subdef(name), pm);
            manifest_params = pm;
            result = cli::runners().at(name)(pm, seed, threads);
        }

        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        cli::write_outputs(result, name, manifest_params, out_dir, format, seed, threads,
                           wall_ms);

        // short human-readable echo
        for (size_t c = 0; c < result.columns.size(); ++c)
            std::cout << (c ? "," : "") << result.columns[c];
        std::cout << "\n";
        const size_t shown = std::min<size_t>(result.rows.size(), 40);
        for (size_t r = 0; r < shown; ++r) {
            for (size_t c = 0; c < result.rows[r].size(); ++c)
                std::cout << (c ? "," : "") << cli::to_csv_field(result.rows[r][c]);
            std::cout << "\n";
        }
        if (shown < result.rows.size())
            std::cout << "... (" << result.rows.size() << " rows total)\n";
        std::cerr << "wrote " << (format == "csv" ? "results.csv" : "results.json")
                  << " and manifest.json to " << out_dir << " (" << result.rows.size()
                  << " rows, " << wall_ms << " ms)\n";
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_validation;
    } catch (const kcsm::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return exit_validation;
    } catch (const kcsm::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return exit_nonconvergence;
    } catch (const kcsm::ResourceError& e) {
        std::cerr << "resource error: " << e.what() << "\n";
        return exit_resource;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_error;
    }
}
