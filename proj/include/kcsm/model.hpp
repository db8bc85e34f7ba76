#pragma once

#include <string>

#include "kcsm/errors.hpp"

namespace kcsm {

/// Constraint family. FA requires >= j empty neighbors (parent included),
/// OFA requires >= j empty children, NE requires empty north and east
/// neighbors on the two-dimensional lattice.
enum class Family { FA, OFA, NE };

/// How neighbor slots that fall outside the finite graph are counted.
/// Empty reproduces the unconstrained-leaves convention that makes the
/// finite chain irreducible; Filled blocks the boundary and is the
/// convention for frozen-cluster events.
enum class Boundary { Empty, Filled };

struct ModelSpec {
    Family family = Family::OFA;
    int k = 2;      ///< children per vertex (ignored for NE)
    int j = 2;      ///< facilitating parameter, 1 <= j <= k (ignored for NE)
    double p = 0.5; ///< occupation density

    void validate() const {
        if (!(p >= 0.0 && p <= 1.0))
            throw ValidationError("ModelSpec: p must lie in [0,1], got " + std::to_string(p));
        if (family != Family::NE) {
            if (k < 1) throw ValidationError("ModelSpec: k must be >= 1");
            if (j < 1 || j > k)
                throw ValidationError("ModelSpec: j must lie in [1,k], got j=" +
                                      std::to_string(j) + " k=" + std::to_string(k));
        }
    }
};

inline const char* family_name(Family f) {
    switch (f) {
        case Family::FA: return "fa";
        case Family::OFA: return "ofa";
        case Family::NE: return "ne";
    }
    return "?";
}

inline const char* boundary_name(Boundary b) {
    return b == Boundary::Empty ? "empty" : "filled";
}

} // namespace kcsm
