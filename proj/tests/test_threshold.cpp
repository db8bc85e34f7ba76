#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "kcsm/bootstrap.hpp"
#include "kcsm/rng.hpp"
#include "kcsm/threshold.hpp"

using namespace kcsm;

TEST_CASE("g_p endpoint values and named points", "[threshold]") {
    for (int k = 1; k <= 6; ++k) {
        for (int j = 1; j <= k; ++j) {
            CHECK(eval_g(k, j, 0.37, 0.0) == 0.0);
            CHECK(eval_g(k, j, 0.37, 1.0) == Catch::Approx(0.37).margin(1e-15));
        }
    }
    // k=2, j=2: g = p(2x - x^2)
    CHECK(eval_g(2, 2, 0.6, 0.5) == Catch::Approx(0.45).margin(1e-15));
    CHECK_THROWS_AS(eval_g(2, 2, 1.5, 0.5), ValidationError);
    CHECK_THROWS_AS(eval_g(2, 3, 0.5, 0.5), ValidationError);
    CHECK_THROWS_AS(eval_g(2, 2, 0.5, -0.1), ValidationError);
}

TEST_CASE("g_p' named values and slope at zero", "[threshold]") {
    CHECK(eval_g_prime(2, 2, 0.6, 0.0) == Catch::Approx(1.2).margin(1e-15)); // j = k: pk
    CHECK(eval_g_prime(3, 2, 0.6, 0.0) == 0.0);                              // j < k: 0
    CHECK(eval_g_prime(2, 2, 0.6, 1.0 / 3.0) == Catch::Approx(0.8).margin(1e-12));
}

TEST_CASE("g_p' matches centered finite differences", "[threshold]") {
    const double h = 1e-5;
    for (const auto& [k, j] : {std::pair{2, 2}, {3, 2}, {4, 3}, {5, 1}, {6, 6}}) {
        for (double p : {0.2, 0.7}) {
            for (double x : {0.1, 0.35, 0.5, 0.8}) {
                const double fd = (eval_g(k, j, p, x + h) - eval_g(k, j, p, x - h)) / (2 * h);
                const double an = eval_g_prime(k, j, p, x);
                if (std::abs(an) > 1e-12)
                    CHECK(std::abs(fd - an) / std::abs(an) < 1e-6);
                else
                    CHECK(std::abs(fd) < 1e-9);
            }
        }
    }
}

TEST_CASE("g_p is monotone in x and p and bounded by p", "[threshold]") {
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const int k = 1 + static_cast<int>(rng.bounded(6));
        const int j = 1 + static_cast<int>(rng.bounded(static_cast<uint32_t>(k)));
        const double p = rng.uniform(), x = rng.uniform(), y = rng.uniform();
        const double gx = eval_g(k, j, p, x);
        CHECK(gx >= 0.0);
        CHECK(gx <= p + 1e-15);
        if (x <= y) CHECK(gx <= eval_g(k, j, p, y) + 1e-15);
        const double p2 = rng.uniform();
        if (p <= p2) CHECK(gx <= eval_g(k, j, p2, x) + 1e-15);
    }
}

TEST_CASE("recursion values", "[threshold]") {
    SECTION("first step at k=2, j=2, p=0.45") {
        const auto seq = iterate_recursion(2, 2, 0.45, 1);
        CHECK(seq[0] == 0.45);
        CHECK(seq[1] == Catch::Approx(0.45 * (0.9 - 0.2025)).margin(1e-15));
    }
    SECTION("limit above the threshold: p_inf = 2 - 1/p for k=j=2, p >= 1/2") {
        const auto seq = iterate_recursion(2, 2, 0.6, 200);
        CHECK(seq.back() == Catch::Approx(1.0 / 3.0).margin(1e-10));
    }
    SECTION("below the threshold the recursion collapses at least exponentially") {
        const auto seq = iterate_recursion(2, 2, 0.45, 200);
        CHECK(seq.back() < 1e-8);
        // ratio eventually bounded by g'(0) = 2p < 1
        CHECK(seq[50] / seq[49] < 0.95);
    }
}

TEST_CASE("recursion matches Monte Carlo bootstrap probabilities", "[threshold]") {
    // P(root occupied after n steps) on a depth-n tree with filled boundary
    const int n_samples = 20000;
    for (double p : {0.3, 0.55}) {
        const ModelSpec spec{Family::OFA, 2, 2, p};
        for (int n : {2, 4}) {
            const auto g = SiteGraph::rooted_tree(2, n);
            Rng rng(1000 + static_cast<uint64_t>(p * 100) + n);
            int hits = 0;
            for (int i = 0; i < n_samples; ++i)
                hits += event_a(spec, g, sample_config(spec, g, rng), n);
            const double expect = iterate_recursion(2, 2, p, n).back();
            const double got = static_cast<double>(hits) / n_samples;
            const double se = std::sqrt(got * (1.0 - got) / n_samples);
            CHECK(std::abs(got - expect) < 3.5 * se);
        }
    }
}

TEST_CASE("frozen fraction on the unrooted tree", "[threshold]") {
    SECTION("degenerate weights") {
        // q = p_{n-1} = 0 forces 0; at p above threshold the limit is positive
        CHECK(frozen_fraction_unrooted(2, 2, 0.0, 1) == 0.0);
        CHECK(frozen_fraction_unrooted(2, 2, 1.0, 5) == Catch::Approx(1.0));
    }
    SECTION("vanishes iff the recursion vanishes") {
        CHECK(frozen_fraction_unrooted(2, 2, 0.45, 200) < 1e-8); // below p-tilde
        CHECK(frozen_fraction_unrooted(2, 2, 0.6, 80) > 0.1);    // above
    }
}

TEST_CASE("largest fixed point", "[threshold]") {
    SECTION("closed form above threshold, k=j=2") {
        const auto r = largest_fixed_point(2, 2, 0.6, 1e-12);
        CHECK(r.p_inf == Catch::Approx(1.0 / 3.0).margin(1e-10));
        CHECK(r.derivative_at_fp == Catch::Approx(0.8).margin(1e-9));
        CHECK(r.stable);
    }
    SECTION("zero at and below the threshold") {
        CHECK(largest_fixed_point(2, 2, 0.4).p_inf == 0.0);
        CHECK(largest_fixed_point(2, 2, 0.5).p_inf == 0.0);
    }
    SECTION("fixed point property holds wherever positive") {
        for (double p : {0.52, 0.7, 0.95}) {
            const auto r = largest_fixed_point(2, 2, p, 1e-13);
            CHECK(eval_g(2, 2, p, r.p_inf) == Catch::Approx(r.p_inf).margin(1e-9));
            CHECK(r.p_inf <= p);
        }
        // discontinuous family j < k: p_inf jumps to ~3/4 at p-tilde = 8/9
        const auto r = largest_fixed_point(3, 2, 8.0 / 9.0 + 1e-6, 1e-13);
        CHECK(r.p_inf > 0.7);
        CHECK(eval_g(3, 2, 8.0 / 9.0 + 1e-6, r.p_inf) == Catch::Approx(r.p_inf).margin(1e-9));
    }
    SECTION("derivative at the attracting fixed point stays below one above threshold") {
        for (double p : {0.55, 0.6, 0.75, 0.9, 0.99}) {
            const auto r = largest_fixed_point(2, 2, p, 1e-13);
            CHECK(r.derivative_at_fp < 1.0);
        }
    }
}

TEST_CASE("critical densities", "[threshold]") {
    SECTION("j = k gives 1/k") {
        for (int k = 2; k <= 6; ++k) {
            const auto r = critical_density(k, k, 1e-10);
            CHECK(std::abs(r.p_c - 1.0 / k) < 1e-9);
            CHECK(r.bracket_width <= 1e-10);
        }
    }
    SECTION("tangency family k=3, j=2: independent analytic oracle") {
        // solve g_p(x) = x, g_p'(x) = 1 by hand: g = p(3x^2 - 2x^3),
        // dividing the first by x gives p(3x - 2x^2) = 1, substituting into
        // 6px(1-x) = 1 yields 6x(1-x) = 3x - 2x^2, i.e. x = 3/4, p = 8/9.
        const double x_oracle = 0.75, p_oracle = 8.0 / 9.0;
        CHECK(eval_g(3, 2, p_oracle, x_oracle) == Catch::Approx(x_oracle).margin(1e-12));
        CHECK(eval_g_prime(3, 2, p_oracle, x_oracle) == Catch::Approx(1.0).margin(1e-12));
        const auto r = critical_density(3, 2, 1e-9);
        CHECK(std::abs(r.p_c - p_oracle) < 1e-6);
    }
    SECTION("j = 1 gives 1") {
        const auto r = critical_density(3, 1, 1e-9);
        CHECK(r.p_c == Catch::Approx(1.0).margin(1e-8));
    }
    SECTION("cross-check the classifier against the slow fixed-point predicate") {
        for (const auto& [k, j] : {std::pair{2, 2}, {3, 2}, {4, 3}}) {
            const double pc = critical_density(k, j, 1e-10).p_c;
            CHECK(largest_fixed_point(k, j, pc - 1e-4, 1e-12).p_inf < 1e-8);
            CHECK(largest_fixed_point(k, j, pc + 1e-4, 1e-12).p_inf > 1e-7);
        }
    }
}

TEST_CASE("ell_zero", "[threshold]") {
    SECTION("reference value at k=2, j=2, p=0.3 via direct iteration oracle") {
        double q = 0.3;
        int oracle = -1;
        for (int ell = 1; ell <= 100; ++ell) {
            q = 0.3 * (2 * q - q * q);
            if ((ell + 1) * q / 0.3 <= 0.25) {
                oracle = ell;
                break;
            }
        }
        REQUIRE(oracle == 6); // frozen golden value, confirmed by the oracle
        CHECK(ell_zero(2, 2, 0.3) == oracle);
    }
    SECTION("small p needs only one level") {
        CHECK(ell_zero(2, 2, 0.01) == 1);
        CHECK(ell_zero(4, 2, 0.005) == 1);
    }
    SECTION("diverges towards the critical density") {
        int prev = 0;
        for (double p : {0.30, 0.40, 0.45, 0.49}) {
            const int cur = ell_zero(2, 2, p);
            CHECK(cur > prev);
            prev = cur;
        }
    }
    SECTION("rejected at or above the critical density") {
        CHECK_THROWS_AS(ell_zero(2, 2, 0.5), ValidationError);
        CHECK_THROWS_AS(ell_zero(2, 2, 0.7), ValidationError);
        CHECK_THROWS_AS(ell_zero(3, 2, 8.0 / 9.0), ValidationError);
    }
}
