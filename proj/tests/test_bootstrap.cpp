#include <catch2/catch_amalgamated.hpp>

#include "kcsm/bootstrap.hpp"
#include "kcsm/rng.hpp"
#include "kcsm/threshold.hpp"

using namespace kcsm;

namespace {
const ModelSpec ofa22{Family::OFA, 2, 2, 0.5};

// Oracle: event A by literally iterating the bootstrap map with filled
// boundary, independent of the one-pass evaluator in the library.
bool event_a_oracle(const ModelSpec& spec, const SiteGraph& g, const SpinConfig& eta, int n) {
    SpinConfig cur = eta;
    for (int m = 0; m < n; ++m) cur = bootstrap_step(spec, g, cur, Boundary::Filled);
    return cur.get(g.root());
}
} // namespace

TEST_CASE("bootstrap step basics", "[bootstrap]") {
    const auto g = SiteGraph::rooted_tree(2, 2);
    SECTION("all-zero is a fixed point") {
        SpinConfig zero(g.num_vertices());
        CHECK(bootstrap_step(ofa22, g, zero, Boundary::Filled) == zero);
        CHECK(bootstrap_step(ofa22, g, zero, Boundary::Empty) == zero);
    }
    SECTION("all-one is a fixed point under the filled boundary") {
        SpinConfig one(g.num_vertices(), true);
        CHECK(bootstrap_step(ofa22, g, one, Boundary::Filled) == one);
    }
    SECTION("an unblocked root empties in one step") {
        SpinConfig eta(g.num_vertices());
        eta.set(0, true); // children empty
        const auto next = bootstrap_step(ofa22, g, eta, Boundary::Filled);
        CHECK_FALSE(next.get(0));
    }
}

TEST_CASE("bootstrap monotonicity and shrinking occupation", "[bootstrap]") {
    Rng rng(123);
    for (const auto boundary : {Boundary::Filled, Boundary::Empty}) {
        for (const auto& spec :
             {ofa22, ModelSpec{Family::OFA, 3, 2, 0.4}, ModelSpec{Family::FA, 2, 2, 0.6}}) {
            const auto g = spec.family == Family::FA ? SiteGraph::unrooted_tree(spec.k, 2)
                                                     : SiteGraph::rooted_tree(spec.k, 2);
            for (int trial = 0; trial < 100; ++trial) {
                SpinConfig a = sample_config(spec, g, rng);
                SpinConfig b = a;
                // b >= a sitewise
                for (int x = 0; x < g.num_vertices(); ++x)
                    if (rng.bernoulli(0.3)) b.set(x, true);
                const auto sa = bootstrap_step(spec, g, a, boundary);
                const auto sb = bootstrap_step(spec, g, b, boundary);
                CHECK(sa.dominated_by(a));
                CHECK(sa.dominated_by(sb));
            }
        }
    }
    // NE on the triangle
    const ModelSpec ne{Family::NE, 0, 0, 0.5};
    const auto tri = SiteGraph::triangle(4);
    for (int trial = 0; trial < 100; ++trial) {
        SpinConfig a = sample_config(ne, tri, rng);
        SpinConfig b = a;
        for (int x = 0; x < tri.num_vertices(); ++x)
            if (rng.bernoulli(0.3)) b.set(x, true);
        const auto sa = bootstrap_step(ne, tri, a, Boundary::Empty);
        const auto sb = bootstrap_step(ne, tri, b, Boundary::Empty);
        CHECK(sa.dominated_by(a));
        CHECK(sa.dominated_by(sb));
    }
}

TEST_CASE("fixpoint iteration counts", "[bootstrap]") {
    SECTION("all-zero converges in zero effective iterations") {
        const auto g = SiteGraph::rooted_tree(2, 3);
        const auto r = bootstrap_fixpoint(ofa22, g, SpinConfig(g.num_vertices()), Boundary::Filled);
        CHECK(r.iterations_to_fixpoint == 0);
    }
    SECTION("NE empty-boundary all-one triangle peels in exactly L+1 steps") {
        const ModelSpec ne{Family::NE, 0, 0, 0.5};
        for (int L : {2, 5, 10}) {
            const auto tri = SiteGraph::triangle(L);
            const auto r =
                bootstrap_fixpoint(ne, tri, SpinConfig(tri.num_vertices(), true), Boundary::Empty);
            CHECK(r.iterations_to_fixpoint == L + 1);
            CHECK(r.final.count_occupied() == 0);
        }
    }
    SECTION("filled-boundary fixpoint reached within depth+1 steps (exhaustive, depth <= 3)") {
        for (int depth : {1, 2, 3}) {
            const auto g = SiteGraph::rooted_tree(2, depth);
            const int v = g.num_vertices();
            for (uint32_t s = 0; s < (1u << v); ++s) {
                const auto r = bootstrap_fixpoint(ofa22, g, SpinConfig::from_state_index(v, s),
                                                  Boundary::Filled);
                CHECK(r.iterations_to_fixpoint <= depth + 1);
            }
        }
    }
}

TEST_CASE("event A matches the literal bootstrap oracle", "[bootstrap]") {
    SECTION("exhaustive on depth 1 and 2") {
        for (int depth : {1, 2}) {
            const auto g = SiteGraph::rooted_tree(2, depth);
            const int v = g.num_vertices();
            for (uint32_t s = 0; s < (1u << v); ++s) {
                const SpinConfig eta = SpinConfig::from_state_index(v, s);
                for (int n = 0; n <= depth + 1; ++n)
                    REQUIRE(event_a(ofa22, g, eta, n) == event_a_oracle(ofa22, g, eta, n));
            }
        }
    }
    SECTION("random configurations, k = 3, j = 2, depth 3") {
        const ModelSpec spec{Family::OFA, 3, 2, 0.6};
        const auto g = SiteGraph::rooted_tree(3, 3);
        Rng rng(5);
        for (int trial = 0; trial < 200; ++trial) {
            const SpinConfig eta = sample_config(spec, g, rng);
            for (int n : {0, 1, 2, 3, 4})
                REQUIRE(event_a(spec, g, eta, n) == event_a_oracle(spec, g, eta, n));
        }
    }
    SECTION("named examples") {
        const auto g = SiteGraph::rooted_tree(2, 1);
        SpinConfig eta(3);
        eta.set(0, true);
        eta.set(2, true); // root occupied, children (0,1)
        CHECK(event_a(ofa22, g, eta, 1));
        SpinConfig flipped = eta;
        flipped.set(2, false);
        CHECK_FALSE(event_a(ofa22, g, flipped, 1));
        SpinConfig one(3, true);
        CHECK(event_a(ofa22, g, one));
        SpinConfig rootless = one;
        rootless.set(0, false);
        CHECK_FALSE(event_a(ofa22, g, rootless));
    }
}

TEST_CASE("pivotal sites", "[bootstrap]") {
    SECTION("marks agree with flip-and-compare exhaustively (8 configs example included)") {
        const auto g = SiteGraph::rooted_tree(2, 1);
        for (uint32_t s = 0; s < 8; ++s) {
            const SpinConfig eta = SpinConfig::from_state_index(3, s);
            const auto marks = pivotal_marks(ofa22, g, eta, 1);
            for (int x = 0; x < 3; ++x) REQUIRE(bool(marks[x]) == is_pivotal(ofa22, g, eta, x, 1));
        }
        // root occupied, children (0,1): the occupied child is pivotal
        SpinConfig eta(3);
        eta.set(0, true);
        eta.set(2, true);
        CHECK(is_pivotal(ofa22, g, eta, 2, 1));
        CHECK_FALSE(is_pivotal(ofa22, g, eta, 1, 1));
    }
    SECTION("marks agree with flip-and-compare on random deeper trees") {
        const ModelSpec spec{Family::OFA, 2, 2, 0.7};
        const auto g = SiteGraph::rooted_tree(2, 3);
        Rng rng(17);
        for (int trial = 0; trial < 300; ++trial) {
            const SpinConfig eta = sample_config(spec, g, rng);
            for (int n : {2, 3}) {
                const auto marks = pivotal_marks(spec, g, eta, n);
                for (int x = 0; x < g.num_vertices(); ++x)
                    REQUIRE(bool(marks[x]) == is_pivotal(spec, g, eta, x, n));
            }
        }
    }
    SECTION("a non-leaf site with a satisfied constraint is never pivotal (exhaustive, V=15)") {
        const auto g = SiteGraph::rooted_tree(2, 3);
        const int v = g.num_vertices();
        for (uint32_t s = 0; s < (1u << v); ++s) {
            const SpinConfig eta = SpinConfig::from_state_index(v, s);
            const auto marks = pivotal_marks(ofa22, g, eta);
            for (int x = 0; x < v; ++x) {
                if (g.is_leaf(x) || !marks[x]) continue;
                REQUIRE_FALSE(constraint_satisfied(ofa22, g, eta, x, Boundary::Empty));
            }
        }
    }
}

TEST_CASE("auxiliary constraint", "[bootstrap]") {
    const auto g = SiteGraph::rooted_tree(2, 4);
    SECTION("ell = 1 coincides with the plain constraint") {
        Rng rng(23);
        for (int trial = 0; trial < 300; ++trial) {
            const SpinConfig eta = sample_config(ofa22, g, rng);
            for (int x = 0; x < g.num_vertices(); ++x)
                REQUIRE(aux_constraint(ofa22, g, eta, x, 1) ==
                        constraint_satisfied(ofa22, g, eta, x, Boundary::Empty));
        }
    }
    SECTION("shallow subtrees are unconstrained") {
        SpinConfig one(g.num_vertices(), true);
        for (int x = 0; x < g.num_vertices(); ++x) {
            const int below = g.depth_limit() - g.depth(x);
            if (below < 3) CHECK(aux_constraint(ofa22, g, one, x, 3));
        }
    }
    SECTION("two bootstrap steps free a vertex behind occupied children") {
        // x = root, children occupied, all four grandchildren empty
        const auto g2 = SiteGraph::rooted_tree(2, 2);
        SpinConfig eta(g2.num_vertices());
        eta.set(0, true);
        eta.set(1, true);
        eta.set(2, true);
        CHECK_FALSE(aux_constraint(ofa22, g2, eta, 0, 1));
        CHECK(aux_constraint(ofa22, g2, eta, 0, 2));
    }
    SECTION("monotone in ell") {
        Rng rng(29);
        for (int trial = 0; trial < 200; ++trial) {
            const SpinConfig eta = sample_config(ofa22, g, rng);
            for (int x = 0; x < g.num_vertices(); ++x) {
                bool prev = aux_constraint(ofa22, g, eta, x, 1);
                for (int ell = 2; ell <= 4; ++ell) {
                    const bool cur = aux_constraint(ofa22, g, eta, x, ell);
                    if (prev) CHECK(cur);
                    prev = cur;
                }
            }
        }
    }
    SECTION("failure probability at the root equals p_ell / p") {
        // delta(ell) = mu(1 - c_x^(ell)) coincides with p_ell / p
        const ModelSpec spec{Family::OFA, 2, 2, 0.4};
        const auto deep = SiteGraph::rooted_tree(2, 6);
        Rng rng(31);
        const int n = 20000;
        int fail = 0;
        const int ell = 3;
        for (int i = 0; i < n; ++i) {
            const SpinConfig eta = sample_config(spec, deep, rng);
            fail += !aux_constraint(spec, deep, eta, deep.root(), ell);
        }
        const double expect = iterate_recursion(2, 2, 0.4, ell).back() / 0.4;
        const double got = static_cast<double>(fail) / n;
        const double se = std::sqrt(expect * (1 - expect) / n);
        CHECK(std::abs(got - expect) < 4.0 * se);
    }
}
