#pragma once

#include "kcsm/graph.hpp"
#include "kcsm/model.hpp"
#include "kcsm/spin_config.hpp"

namespace kcsm {

/// Is the kinetic constraint at x satisfied? Never depends on the spin at x
/// itself (that is what makes detailed balance hold).
///
/// Neighbor slots outside the finite graph count as empty or occupied per
/// `boundary`. With Boundary::Empty a tree leaf has k absent children and
/// j <= k of them empty, so leaves are unconstrained — the convention that
/// makes the finite chain irreducible. Boundary::Filled blocks them.
inline bool constraint_satisfied(const ModelSpec& spec, const SiteGraph& g,
                                 const SpinConfig& eta, int x,
                                 Boundary boundary = Boundary::Empty) {
    switch (spec.family) {
        case Family::OFA: {
            int empty = (boundary == Boundary::Empty) ? g.missing_children(x) : 0;
            if (empty >= spec.j) return true;
            for (int c : g.children(x)) {
                if (!eta.get(c) && ++empty >= spec.j) return true;
            }
            return false;
        }
        case Family::FA: {
            int empty = (boundary == Boundary::Empty) ? g.missing_children(x) : 0;
            if (empty >= spec.j) return true;
            const int par = g.parent(x);
            if (par >= 0 && !eta.get(par) && ++empty >= spec.j) return true;
            for (int c : g.children(x)) {
                if (!eta.get(c) && ++empty >= spec.j) return true;
            }
            return false;
        }
        case Family::NE: {
            const int n = g.north(x), e = g.east(x);
            const bool outside_empty = boundary == Boundary::Empty;
            const bool n_empty = (n < 0) ? outside_empty : !eta.get(n);
            const bool e_empty = (e < 0) ? outside_empty : !eta.get(e);
            return n_empty && e_empty;
        }
    }
    return false;
}

} // namespace kcsm
