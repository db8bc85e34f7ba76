#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kcsm/constraints.hpp"
#include "kcsm/errors.hpp"
#include "kcsm/graph.hpp"
#include "kcsm/model.hpp"
#include "kcsm/rng.hpp"
#include "kcsm/spin_config.hpp"

namespace kcsm {

namespace detail {

/// Index-parallel loop; work distribution never affects results because
/// every item derives its own rng stream.
template <class Fn>
void parallel_for(int n, int threads, Fn&& fn) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

} // namespace detail

struct SimConfig {
    double t_max = 100.0;
    double burn_in = 0.0;
    double sample_interval = 1.0;
    int replicas = 1;
    uint64_t seed = 0;
    Boundary boundary = Boundary::Empty; ///< Empty = unconstrained leaves
    int threads = 1;

    void validate() const {
        if (!(burn_in >= 0.0 && burn_in < t_max))
            throw ValidationError("SimConfig: need 0 <= burn_in < t_max");
        if (!(sample_interval > 0.0))
            throw ValidationError("SimConfig: sample_interval must be > 0");
        if (replicas < 1) throw ValidationError("SimConfig: replicas must be >= 1");
    }
};

struct TrajectoryStats {
    // observable series on the fixed grid burn_in + i * sample_interval, per replica
    std::vector<std::vector<float>> root_series;
    std::vector<std::vector<float>> density_series;
    double sample_interval = 0.0;
    double first_sample_time = 0.0;
    int num_vertices = 0;
    double p = 0.0;

    double mean_density = 0.0, mean_density_se = 0.0;
    double mean_root = 0.0, mean_root_se = 0.0;
    /// late-window squared deviation of the root occupancy mean from p
    /// (diagnostic; the bias-corrected probe is frozen_probe)
    double plateau_sq_dev = 0.0, plateau_sq_dev_se = 0.0;
    uint64_t total_events = 0;
};

namespace detail {

struct ChainRunner {
    const ModelSpec& spec;
    const SiteGraph& g;
    Boundary boundary;

    /// Advance the uniformized chain to t_end: events ring at rate V, the
    /// chosen site refreshes only if its constraint holds (blocked attempts
    /// consume the event, which matches the generator's rates exactly).
    /// on_sample(t) is invoked for every grid time crossed.
    template <class OnSample>
    uint64_t run(SpinConfig& eta, Rng& rng, double t_end, double grid_start, double grid_step,
                 OnSample&& on_sample) const {
        const int v = g.num_vertices();
        uint64_t events = 0;
        double t = 0.0;
        double next_sample = grid_start;
        for (;;) {
            const double t_event = t + rng.exponential(static_cast<double>(v));
            while (next_sample <= t_end && next_sample <= t_event) {
                on_sample(eta);
                next_sample += grid_step;
            }
            if (t_event > t_end) break;
            t = t_event;
            ++events;
            const int x = static_cast<int>(rng.bounded(static_cast<uint32_t>(v)));
            if (constraint_satisfied(spec, g, eta, x, boundary))
                eta.set(x, rng.bernoulli(spec.p));
        }
        return events;
    }
};

inline void mean_and_se(const std::vector<double>& xs, double& mean, double& se) {
    const double n = static_cast<double>(xs.size());
    mean = 0.0;
    for (double x : xs) mean += x;
    mean /= n;
    double s2 = 0.0;
    for (double x : xs) s2 += (x - mean) * (x - mean);
    se = xs.size() > 1 ? std::sqrt(s2 / (n - 1) / n) : 0.0;
}

} // namespace detail

/// Continuous-time Glauber dynamics via the graphical construction.
/// init = nullopt starts each replica from a fresh equilibrium
/// (Bernoulli(p)) sample. Fully reproducible: replica r uses the derived
/// stream (seed, r), so results do not depend on the thread count.
inline TrajectoryStats simulate(const ModelSpec& spec, const SiteGraph& g,
                                const std::optional<SpinConfig>& init, const SimConfig& cfg) {
    spec.validate();
    cfg.validate();
    if (init && init->size() != g.num_vertices())
        throw ValidationError("simulate: init size mismatch");
    const int v = g.num_vertices();
    const int n_samples =
        static_cast<int>(std::floor((cfg.t_max - cfg.burn_in) / cfg.sample_interval)) + 1;

    TrajectoryStats out;
    out.root_series.resize(cfg.replicas);
    out.density_series.resize(cfg.replicas);
    out.sample_interval = cfg.sample_interval;
    out.first_sample_time = cfg.burn_in;
    out.num_vertices = v;
    out.p = spec.p;

    std::vector<uint64_t> events(cfg.replicas, 0);
    detail::ChainRunner runner{spec, g, cfg.boundary};
    detail::parallel_for(cfg.replicas, cfg.threads, [&](int r) {
        Rng rng(cfg.seed, static_cast<uint64_t>(r));
        SpinConfig eta = init ? *init : sample_config(spec, g, rng);
        auto& roots = out.root_series[r];
        auto& dens = out.density_series[r];
        roots.reserve(n_samples);
        dens.reserve(n_samples);
        events[r] = runner.run(eta, rng, cfg.t_max, cfg.burn_in, cfg.sample_interval,
                               [&](const SpinConfig& state) {
                                   roots.push_back(state.get(g.root()) ? 1.0f : 0.0f);
                                   dens.push_back(static_cast<float>(state.count_occupied()) /
                                                  static_cast<float>(v));
                               });
    });

    std::vector<double> dmeans, rmeans, plateaus;
    for (int r = 0; r < cfg.replicas; ++r) {
        out.total_events += events[r];
        double dm = 0.0, rm = 0.0;
        for (float x : out.density_series[r]) dm += x;
        for (float x : out.root_series[r]) rm += x;
        const auto n = static_cast<double>(out.density_series[r].size());
        dmeans.push_back(dm / n);
        rmeans.push_back(rm / n);
        // late window = second half of the series
        const size_t half = out.root_series[r].size() / 2;
        double lm = 0.0;
        for (size_t i = half; i < out.root_series[r].size(); ++i) lm += out.root_series[r][i];
        lm /= static_cast<double>(out.root_series[r].size() - half);
        plateaus.push_back((lm - spec.p) * (lm - spec.p));
    }
    detail::mean_and_se(dmeans, out.mean_density, out.mean_density_se);
    detail::mean_and_se(rmeans, out.mean_root, out.mean_root_se);
    detail::mean_and_se(plateaus, out.plateau_sq_dev, out.plateau_sq_dev_se);
    return out;
}

enum class Observable { RootOccupancy, Density };

struct AutocorrResult {
    std::vector<double> lag_times;
    std::vector<double> rho;    ///< normalized, rho[0] = 1
    std::vector<double> rho_se; ///< across-replica spread
    double autocov_zero = 0.0;  ///< sample variance of the observable
    double tau_int = 0.0;       ///< integrated autocorrelation time (time units)
    double tau_int_se = 0.0;
    double fit_rate = 0.0; ///< exponential decay rate from the weighted log fit
    double fit_rate_se = 0.0;
    int fit_lags = 0; ///< number of lags entering the fit
};

/// Biased-normalized empirical autocorrelation of one observable, averaged
/// over replicas, with an exponential fit over the lags whose estimate
/// stays above 3x its standard error (noise tails are excluded by stopping
/// at the first lag that fails).
inline AutocorrResult autocorrelation(const TrajectoryStats& stats, Observable obs,
                                      double max_lag_time = -1.0, double fit_skip_time = 0.0) {
    const auto& series =
        obs == Observable::RootOccupancy ? stats.root_series : stats.density_series;
    const int reps = static_cast<int>(series.size());
    if (reps == 0 || series[0].size() < 4)
        throw ValidationError("autocorrelation: series too short");
    const double dt = stats.sample_interval;
    const double span = dt * static_cast<double>(series[0].size() - 1);
    if (max_lag_time < 0.0) max_lag_time = span / 20.0;
    if (span < 20.0 * max_lag_time)
        throw ValidationError("autocorrelation: need t_max - burn_in >= 20 * max lag");
    const int max_k = std::max(1, static_cast<int>(std::floor(max_lag_time / dt)));

    std::vector<std::vector<double>> rho_r(reps);
    std::vector<double> c0s(reps);
    for (int r = 0; r < reps; ++r) {
        const auto& y = series[r];
        const int n = static_cast<int>(y.size());
        double mean = 0.0;
        for (float x : y) mean += x;
        mean /= n;
        std::vector<double> c(max_k + 1, 0.0);
        for (int k = 0; k <= max_k; ++k) {
            double s = 0.0;
            for (int i = 0; i + k < n; ++i) s += (y[i] - mean) * (y[i + k] - mean);
            c[k] = s / n; // biased normalization
        }
        c0s[r] = c[0];
        rho_r[r].resize(max_k + 1);
        for (int k = 0; k <= max_k; ++k) rho_r[r][k] = c[0] > 0 ? c[k] / c[0] : 0.0;
    }

    AutocorrResult out;
    out.lag_times.resize(max_k + 1);
    out.rho.resize(max_k + 1);
    out.rho_se.resize(max_k + 1);
    for (int k = 0; k <= max_k; ++k) {
        out.lag_times[k] = k * dt;
        std::vector<double> vals(reps);
        for (int r = 0; r < reps; ++r) vals[r] = rho_r[r][k];
        detail::mean_and_se(vals, out.rho[k], out.rho_se[k]);
    }
    double c0 = 0.0;
    for (double c : c0s) c0 += c;
    out.autocov_zero = c0 / reps;

    // integrated time with the self-consistent window W >= 5 tau
    const double n_eff = static_cast<double>(series[0].size()) * reps;
    double tau = 0.5;
    int w = 1;
    for (; w <= max_k; ++w) {
        tau += out.rho[w];
        if (static_cast<double>(w) >= 5.0 * tau) break;
    }
    out.tau_int = dt * tau;
    out.tau_int_se = dt * tau * std::sqrt(2.0 * (2.0 * w + 1.0) / n_eff);

    // weighted least squares on ln rho over the qualifying prefix
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    int used = 0;
    for (int k = 1; k <= max_k; ++k) {
        if (!(out.rho[k] > 0.0) || out.rho[k] <= 3.0 * out.rho_se[k]) break;
        if (out.lag_times[k] < fit_skip_time) continue;
        const double x = out.lag_times[k];
        const double y = std::log(out.rho[k]);
        const double sigma = out.rho_se[k] > 0 ? out.rho_se[k] / out.rho[k] : 1e-3;
        const double wgt = 1.0 / (sigma * sigma);
        sw += wgt;
        swx += wgt * x;
        swy += wgt * y;
        swxx += wgt * x * x;
        swxy += wgt * x * y;
        ++used;
    }
    out.fit_lags = used;
    if (used >= 2) {
        const double denom = sw * swxx - swx * swx;
        out.fit_rate = -(sw * swxy - swx * swy) / denom;
        out.fit_rate_se = std::sqrt(sw / denom);
    }
    return out;
}

struct FrozenProbeReport {
    double plateau = 0.0; ///< estimate of E_mu[(E[eta_r(t)|eta_0] - p)^2] at t = t_probe
    double se = 0.0;
    int trials = 0;
    int inner_reps = 0;
    double t_probe = 0.0;
};

/// Non-decay probe: over equilibrium initial conditions, estimate the
/// squared deviation of the conditional root-occupancy mean from p at a
/// late time. The within-initial-condition sampling variance s^2/R is
/// subtracted, so the estimator is unbiased for the plateau and consistent
/// with zero in the relaxed regime.
inline FrozenProbeReport frozen_probe(const ModelSpec& spec, const SiteGraph& g,
                                      const SimConfig& cfg, int trials, int inner_reps = 32) {
    spec.validate();
    if (trials < 2) throw ValidationError("frozen_probe: need >= 2 trials");
    if (inner_reps < 2) throw ValidationError("frozen_probe: need >= 2 inner reps");
    detail::ChainRunner runner{spec, g, cfg.boundary};

    std::vector<double> u(trials);
    detail::parallel_for(trials, cfg.threads, [&](int i) {
        const uint64_t base = static_cast<uint64_t>(i) * (inner_reps + 1);
        Rng init_rng(cfg.seed, base);
        const SpinConfig init = sample_config(spec, g, init_rng);
        int occ = 0;
        for (int r = 0; r < inner_reps; ++r) {
            Rng rng(cfg.seed, base + 1 + r);
            SpinConfig eta = init;
            runner.run(eta, rng, cfg.t_max, cfg.t_max + 1.0, 1.0, [](const SpinConfig&) {});
            occ += eta.get(g.root());
        }
        const double r = static_cast<double>(inner_reps);
        const double m = occ / r;
        const double s2 = m * (1.0 - m) * r / (r - 1.0);
        u[i] = (m - spec.p) * (m - spec.p) - s2 / r;
    });

    FrozenProbeReport rep;
    rep.trials = trials;
    rep.inner_reps = inner_reps;
    rep.t_probe = cfg.t_max;
    detail::mean_and_se(u, rep.plateau, rep.se);
    return rep;
}

} // namespace kcsm
