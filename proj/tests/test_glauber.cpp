#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kcsm/bootstrap.hpp"
#include "kcsm/glauber.hpp"
#include "kcsm/spectral.hpp"

using namespace kcsm;

TEST_CASE("config validation", "[glauber]") {
    SimConfig bad;
    bad.t_max = 10.0;
    bad.burn_in = 10.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad.burn_in = 0.0;
    bad.sample_interval = 0.0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
}

TEST_CASE("determinism: identical inputs give identical trajectories", "[glauber]") {
    const ModelSpec spec{Family::OFA, 2, 2, 0.4};
    const auto g = SiteGraph::rooted_tree(2, 2);
    SimConfig cfg;
    cfg.t_max = 50.0;
    cfg.sample_interval = 0.5;
    cfg.replicas = 3;
    cfg.seed = 12345;
    const auto a = simulate(spec, g, std::nullopt, cfg);
    cfg.threads = 2; // thread count must not matter
    const auto b = simulate(spec, g, std::nullopt, cfg);
    REQUIRE(a.root_series.size() == b.root_series.size());
    for (size_t r = 0; r < a.root_series.size(); ++r) {
        CHECK(a.root_series[r] == b.root_series[r]);
        CHECK(a.density_series[r] == b.density_series[r]);
    }
}

TEST_CASE("p = 0 empties and stays empty", "[glauber]") {
    const ModelSpec spec{Family::OFA, 2, 2, 0.0};
    const auto g = SiteGraph::rooted_tree(2, 2);
    SimConfig cfg;
    cfg.t_max = 200.0;
    cfg.burn_in = 100.0;
    cfg.sample_interval = 1.0;
    cfg.seed = 9;
    const auto st = simulate(spec, g, SpinConfig(g.num_vertices(), true), cfg);
    CHECK(st.mean_density == 0.0);
}

TEST_CASE("equilibrium density matches p", "[glauber]") {
    const ModelSpec spec{Family::OFA, 2, 2, 0.3};
    const auto g = SiteGraph::rooted_tree(2, 2);
    SimConfig cfg;
    cfg.t_max = 2000.0;
    cfg.sample_interval = 1.0;
    cfg.replicas = 8;
    cfg.seed = 31;
    cfg.threads = 2;
    const auto st = simulate(spec, g, std::nullopt, cfg);
    CHECK(std::abs(st.mean_density - 0.3) < 3.0 * st.mean_density_se);
}

TEST_CASE("long-run state frequencies match the Bernoulli weights", "[glauber]") {
    // chi^2 over all 8 states of the depth-1 tree
    const ModelSpec spec{Family::OFA, 2, 2, 0.4};
    const auto g = SiteGraph::rooted_tree(2, 1);
    const int v = g.num_vertices();
    Rng rng(123);
    SpinConfig eta = sample_config(spec, g, rng);
    detail::ChainRunner runner{spec, g, Boundary::Empty};
    std::vector<int64_t> counts(1 << v, 0);
    const double spacing = 5.0; // roughly independent samples
    const int n_samples = 60000;
    runner.run(eta, rng, n_samples * spacing, spacing, spacing,
               [&](const SpinConfig& c) { ++counts[c.state_index()]; });
    int64_t total = 0;
    for (auto c : counts) total += c;
    double chi2 = 0.0;
    for (uint32_t s = 0; s < (1u << v); ++s) {
        const int pop = __builtin_popcount(s);
        const double expect =
            total * std::pow(0.4, pop) * std::pow(0.6, v - pop);
        chi2 += (counts[s] - expect) * (counts[s] - expect) / expect;
    }
    CHECK(chi2 < 24.32); // chi^2_{0.999, 7}
}

TEST_CASE("filled-boundary dynamics never melts a bootstrap-stable cluster", "[glauber]") {
    const ModelSpec spec{Family::OFA, 2, 2, 0.7};
    const auto g = SiteGraph::rooted_tree(2, 4);
    Rng rng(555);
    // find an equilibrium sample whose filled-boundary fixpoint is nonempty
    SpinConfig init(0);
    SpinConfig cluster(0);
    for (;;) {
        SpinConfig cand = sample_config(spec, g, rng);
        const auto fp = bootstrap_fixpoint(spec, g, cand, Boundary::Filled);
        if (fp.final.count_occupied() > 0) {
            init = cand;
            cluster = fp.final;
            break;
        }
    }
    // per-event check: a cluster site's constraint never holds
    SpinConfig eta = init;
    const int v = g.num_vertices();
    double t = 0.0;
    for (int ev = 0; ev < 200000; ++ev) {
        t += rng.exponential(v);
        const int x = static_cast<int>(rng.bounded(static_cast<uint32_t>(v)));
        if (cluster.get(x)) {
            REQUIRE_FALSE(constraint_satisfied(spec, g, eta, x, Boundary::Filled));
            continue;
        }
        if (constraint_satisfied(spec, g, eta, x, Boundary::Filled))
            eta.set(x, rng.bernoulli(spec.p));
    }
    for (int x = 0; x < v; ++x)
        if (cluster.get(x)) CHECK(eta.get(x));
}

TEST_CASE("autocorrelation of a free spin decays at rate one", "[glauber]") {
    const ModelSpec spec{Family::OFA, 2, 2, 0.5};
    const auto g = SiteGraph::rooted_tree(2, 0);
    SimConfig cfg;
    cfg.t_max = 30000.0;
    cfg.sample_interval = 0.25;
    cfg.replicas = 4;
    cfg.seed = 77;
    cfg.threads = 2;
    const auto st = simulate(spec, g, std::nullopt, cfg);
    const auto ac = autocorrelation(st, Observable::RootOccupancy, 12.0);
    REQUIRE(ac.fit_lags >= 2);
    CHECK(std::abs(ac.fit_rate - 1.0) < 0.10);
    CHECK(ac.rho[0] == Catch::Approx(1.0));
    // lag-0 autocovariance is the sample variance, close to p(1-p)
    CHECK(ac.autocov_zero == Catch::Approx(0.25).margin(0.01));
}

TEST_CASE("autocorrelation input validation", "[glauber]") {
    const ModelSpec spec{Family::OFA, 2, 2, 0.5};
    const auto g = SiteGraph::rooted_tree(2, 0);
    SimConfig cfg;
    cfg.t_max = 100.0;
    cfg.sample_interval = 1.0;
    cfg.seed = 3;
    const auto st = simulate(spec, g, std::nullopt, cfg);
    CHECK_THROWS_AS(autocorrelation(st, Observable::Density, 50.0), ValidationError);
}

TEST_CASE("fitted relaxation rate tracks the exact gap", "[glauber]") {
    const ModelSpec spec{Family::OFA, 2, 2, 0.3};
    const auto g = SiteGraph::rooted_tree(2, 2);
    const double gap = exact_gap(spec, g).gap;
    SimConfig cfg;
    cfg.t_max = 30000.0;
    cfg.sample_interval = 0.25;
    cfg.replicas = 6;
    cfg.seed = 4242;
    cfg.threads = 2;
    const auto st = simulate(spec, g, std::nullopt, cfg);
    const auto ac = autocorrelation(st, Observable::RootOccupancy, 20.0);
    REQUIRE(ac.fit_lags >= 3);
    CHECK(std::abs(ac.fit_rate - gap) / gap < 0.25);
    CHECK(ac.fit_rate < gap * 1.25); // the estimate must not overshoot the gap by more than noise
}

TEST_CASE("frozen probe distinguishes the two phases at small depth", "[glauber]") {
    const auto g = SiteGraph::rooted_tree(2, 4);
    SimConfig cfg;
    cfg.t_max = 60.0;
    cfg.seed = 606;
    cfg.threads = 2;
    SECTION("ergodic side: plateau consistent with zero") {
        const ModelSpec spec{Family::OFA, 2, 2, 0.3};
        const auto r = frozen_probe(spec, g, cfg, 200, 16);
        CHECK(std::abs(r.plateau) < 3.5 * r.se);
    }
    SECTION("frozen side: plateau positive") {
        const ModelSpec spec{Family::OFA, 2, 2, 0.75};
        const auto r = frozen_probe(spec, g, cfg, 200, 16);
        CHECK(r.plateau > 3.0 * r.se);
    }
}
