#pragma once

#include <algorithm>
#include <vector>

#include "kcsm/constraints.hpp"
#include "kcsm/graph.hpp"
#include "kcsm/model.hpp"
#include "kcsm/spin_config.hpp"

namespace kcsm {

/// One synchronous application of the bootstrap map: a site is empty in the
/// output iff it was empty or its constraint held in the input. Occupied
/// sets only shrink, and the map is monotone in the configuration.
inline SpinConfig bootstrap_step(const ModelSpec& spec, const SiteGraph& g,
                                 const SpinConfig& eta, Boundary boundary) {
    SpinConfig out(g.num_vertices());
    for (int x = 0; x < g.num_vertices(); ++x) {
        if (eta.get(x) && !constraint_satisfied(spec, g, eta, x, boundary))
            out.set(x, true);
    }
    return out;
}

struct BootstrapResult {
    SpinConfig final;
    int iterations_to_fixpoint = 0;          ///< number of steps that changed something
    std::vector<bool> root_occupied_trace;   ///< root occupancy after 0,1,... steps
};

/// Iterate the bootstrap map until nothing changes (at most V steps).
inline BootstrapResult bootstrap_fixpoint(const ModelSpec& spec, const SiteGraph& g,
                                          SpinConfig eta, Boundary boundary) {
    BootstrapResult r;
    r.root_occupied_trace.push_back(eta.get(g.root()));
    for (;;) {
        SpinConfig next = bootstrap_step(spec, g, eta, boundary);
        if (next == eta) break;
        eta = std::move(next);
        ++r.iterations_to_fixpoint;
        r.root_occupied_trace.push_back(eta.get(g.root()));
    }
    r.final = std::move(eta);
    return r;
}

namespace detail {

/// Root occupancy after n synchronous filled-boundary bootstrap steps for
/// the oriented family, evaluated by one bottom-up pass instead of n sweeps.
/// Unrolling the steps level by level shows the root's value after n steps
/// is T(root) with T(v) = eta_v for leaves and for depth(v) >= n, else
/// T(v) = eta_v * [#occupied children under T >= k - j + 1].
/// `t_out`/`occsum_out`, when given, receive the per-vertex values.
inline bool event_a_oriented(const ModelSpec& spec, const SiteGraph& g,
                             const SpinConfig& eta, int n,
                             std::vector<uint8_t>* t_out = nullptr,
                             std::vector<int>* occsum_out = nullptr) {
    const int v = g.num_vertices();
    const int cutoff = std::min(n, g.depth_limit());
    const int threshold = spec.k - spec.j + 1;
    std::vector<uint8_t> t(v);
    std::vector<int> occsum(v, 0);
    // BFS ids: children always have larger ids, so one reverse sweep suffices.
    for (int x = v - 1; x >= 0; --x) {
        if (g.is_leaf(x) || g.depth(x) >= cutoff) {
            t[x] = eta.get(x);
        } else {
            int occ = 0;
            for (int c : g.children(x)) occ += t[c];
            occsum[x] = occ;
            t[x] = eta.get(x) && occ >= threshold;
        }
    }
    const bool result = t[g.root()];
    if (t_out) *t_out = std::move(t);
    if (occsum_out) *occsum_out = std::move(occsum);
    return result;
}

} // namespace detail

/// The event A of the variational upper bound: the root is still occupied
/// after n synchronous bootstrap steps with filled boundary. n < 0 means
/// the default n = depth.
inline bool event_a(const ModelSpec& spec, const SiteGraph& g, const SpinConfig& eta,
                    int n = -1) {
    if (g.kind() == GraphKind::Triangle)
        throw ValidationError("event_a: requires a rooted tree");
    if (n < 0) n = g.depth_limit();
    if (spec.family == Family::OFA) return detail::event_a_oriented(spec, g, eta, n);
    SpinConfig cur = eta;
    for (int m = 0; m < n; ++m) {
        SpinConfig next = bootstrap_step(spec, g, cur, Boundary::Filled);
        if (next == cur) break;
        cur = std::move(next);
    }
    return cur.get(g.root());
}

/// Does flipping the spin at x change event A? Evaluated by flip-and-compare.
inline bool is_pivotal(const ModelSpec& spec, const SiteGraph& g, const SpinConfig& eta,
                       int x, int n = -1) {
    SpinConfig one = eta, zero = eta;
    one.set(x, true);
    zero.set(x, false);
    return event_a(spec, g, one, n) != event_a(spec, g, zero, n);
}

/// All pivotal sites of event A in one O(V) sensitivity pass (oriented
/// family). Equivalent to calling is_pivotal per site: a site is pivotal
/// iff every vertex on its path to the root sits exactly at the occupancy
/// threshold, and its own indicator actually flips.
inline std::vector<uint8_t> pivotal_marks(const ModelSpec& spec, const SiteGraph& g,
                                          const SpinConfig& eta, int n = -1) {
    if (spec.family != Family::OFA || g.kind() == GraphKind::Triangle)
        throw ValidationError("pivotal_marks: oriented family on a rooted tree only");
    if (n < 0) n = g.depth_limit();
    const int v = g.num_vertices();
    const int cutoff = std::min(n, g.depth_limit());
    const int threshold = spec.k - spec.j + 1;
    std::vector<uint8_t> t;
    std::vector<int> occsum;
    detail::event_a_oriented(spec, g, eta, n, &t, &occsum);

    std::vector<uint8_t> crit(v, 0), pivotal(v, 0);
    crit[g.root()] = 1;
    for (int x = 0; x < v; ++x) {
        if (!crit[x]) continue;
        const bool frozen = g.is_leaf(x) || g.depth(x) >= cutoff;
        pivotal[x] = frozen || occsum[x] >= threshold;
        if (frozen || !eta.get(x)) continue; // children can't propagate a flip
        for (int c : g.children(x))
            if (occsum[x] - t[c] == threshold - 1) crit[c] = 1;
    }
    return pivotal;
}

/// Auxiliary bootstrap constraint: x may flip iff, forcing x occupied and
/// running at most ell bootstrap steps confined to the ell levels below x
/// (values at relative depth ell never change, absent slots count empty),
/// x can be emptied. Identically true when the subtree is shallower than
/// ell. Coincides with the plain constraint at ell = 1.
inline bool aux_constraint(const ModelSpec& spec, const SiteGraph& g, const SpinConfig& eta,
                           int x, int ell) {
    if (spec.family != Family::OFA)
        throw ValidationError("aux_constraint: defined for the oriented family");
    if (ell < 1) throw ValidationError("aux_constraint: ell must be >= 1");
    if (g.depth_limit() - g.depth(x) < ell) return true;

    // gather the subtree slice [x, ell levels down]; BFS order, so parents precede children
    std::vector<int32_t> ids;
    std::vector<int32_t> rel;
    ids.push_back(x);
    rel.push_back(0);
    for (size_t i = 0; i < ids.size(); ++i) {
        if (rel[i] == ell) continue;
        for (int c : g.children(ids[i])) {
            ids.push_back(c);
            rel.push_back(rel[i] + 1);
        }
    }
    const int m = static_cast<int>(ids.size());
    std::vector<int32_t> local_of_child(m); // position of first child in ids
    // children of ids[i] are contiguous in ids right after the previously seen ones
    {
        int next = 1;
        for (int i = 0; i < m; ++i) {
            local_of_child[i] = next;
            if (rel[i] < ell) next += static_cast<int>(g.children(ids[i]).size());
        }
    }
    std::vector<uint8_t> occ(m), nxt(m);
    for (int i = 0; i < m; ++i) occ[i] = eta.get(ids[i]);
    occ[0] = 1; // force x occupied

    for (int step = 0; step < ell; ++step) {
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            if (rel[i] == ell) { // frozen floor
                nxt[i] = occ[i];
                continue;
            }
            if (!occ[i]) {
                nxt[i] = 0;
                continue;
            }
            const int nc = static_cast<int>(g.children(ids[i]).size());
            int empty = g.missing_children(ids[i]); // absent slots count empty
            const int base = local_of_child[i];
            for (int c = 0; c < nc; ++c) empty += !occ[base + c];
            nxt[i] = empty >= spec.j ? 0 : 1;
            changed |= nxt[i] != occ[i];
        }
        occ.swap(nxt);
        if (!occ[0]) return true;
        if (!changed) break;
    }
    return false;
}

} // namespace kcsm
