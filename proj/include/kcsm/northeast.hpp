#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kcsm/bootstrap.hpp"
#include "kcsm/errors.hpp"
#include "kcsm/graph.hpp"
#include "kcsm/model.hpp"
#include "kcsm/rng.hpp"
#include "kcsm/spin_config.hpp"

namespace kcsm {

/// Quadrant with bottom-left corner x inside the triangle:
/// C_x = {z : z.e1 >= x.e1 and z.e2 >= x.e2}.
inline std::vector<int> ne_quadrant(const SiteGraph& g, int x) {
    if (g.kind() != GraphKind::Triangle) throw ValidationError("ne_quadrant: triangle only");
    const auto [cx, cy] = g.coord(x);
    std::vector<int> out;
    for (int z = 0; z < g.num_vertices(); ++z) {
        const auto [zx, zy] = g.coord(z);
        if (zx >= cx && zy >= cy) out.push_back(z);
    }
    return out;
}

/// North-East auxiliary constraint: force x occupied, run at most ell
/// synchronous NE bootstrap steps with empty boundary on the triangle, and
/// report whether x can be emptied. Coincides with the plain NE constraint
/// at ell = 1.
inline bool ne_aux_constraint(const SiteGraph& g, const SpinConfig& eta, int x, int ell) {
    if (g.kind() != GraphKind::Triangle)
        throw ValidationError("ne_aux_constraint: triangle only");
    if (ell < 1) throw ValidationError("ne_aux_constraint: ell must be >= 1");
    ModelSpec ne{Family::NE, 0, 0, 0.5};
    SpinConfig cur = eta;
    cur.set(x, true);
    for (int m = 0; m < ell; ++m) {
        SpinConfig next = bootstrap_step(ne, g, cur, Boundary::Empty);
        if (!next.get(x)) return true;
        if (next == cur) return false;
        cur = std::move(next);
    }
    return false;
}

struct NEReport {
    int ell = 0;
    double p_ell = 0.0; ///< bulk occupation probability after ell bootstrap steps
    double se = 0.0;
    double delta = 0.0;           ///< p_ell / p
    double condition_value = 0.0; ///< (ell+1)^2 * delta
    bool passes = false;          ///< condition_value < 1/4
};

/// Monte Carlo estimate of p_ell^NE on a square window with the probe at
/// the window center and filled boundary outside, so the estimate upper
/// bounds the bulk value and is exact once the window dwarfs ell. Rows are
/// bit-packed; a synchronous step is two word ops per row. One bootstrap
/// trajectory per sample serves every requested ell (occupancy is monotone
/// in ell).
inline std::vector<NEReport> estimate_p_ell(double p, const std::vector<int>& ells,
                                            int lattice_side, uint64_t samples,
                                            uint64_t seed) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("estimate_p_ell: p must lie in [0,1]");
    if (lattice_side < 2) throw ValidationError("estimate_p_ell: lattice_side must be >= 2");
    if (samples < 1) throw ValidationError("estimate_p_ell: need >= 1 sample");
    if (ells.empty()) throw ValidationError("estimate_p_ell: empty ell grid");
    int max_ell = 0;
    for (int l : ells) {
        if (l < 0) throw ValidationError("estimate_p_ell: ell must be >= 0");
        max_ell = std::max(max_ell, l);
    }
    if (max_ell > lattice_side / 2)
        throw ValidationError("estimate_p_ell: window too small, need lattice_side >= 2*ell (got ell=" +
                              std::to_string(max_ell) + ", side=" +
                              std::to_string(lattice_side) + ")");

    const int side = lattice_side;
    const int words = (side + 63) / 64;
    const int probe_y = side / 2;
    const int probe_x = side / 2;
    const uint64_t probe_bit = uint64_t{1} << (probe_x & 63);
    const int probe_word = probe_x >> 6;
    // bits beyond the window in the last word stay permanently filled so the
    // east shift naturally pulls in the filled boundary
    const uint64_t pad_mask =
        (side & 63) ? ~((uint64_t{1} << (side & 63)) - 1) : uint64_t{0};
    // east neighbor of the window's last column is outside, hence filled
    const uint64_t east_edge_bit = uint64_t{1} << ((side - 1) & 63);

    // survival counts: samples whose probe is still occupied after m steps
    std::vector<uint64_t> alive(max_ell + 1, 0);
    std::vector<uint64_t> occ((side + 1) * words), nxt((side + 1) * words);
    Rng rng(seed);

    for (uint64_t s = 0; s < samples; ++s) {
        for (int y = 0; y < side; ++y) {
            uint64_t* row = &occ[y * words];
            for (int w = 0; w < words; ++w) {
                uint64_t bits;
                if (p == 0.5) {
                    bits = rng.next_u64();
                } else {
                    bits = 0;
                    for (int b = 0; b < 64; ++b) bits |= uint64_t{rng.bernoulli(p)} << b;
                }
                row[w] = bits;
            }
            row[words - 1] |= pad_mask;
        }
        for (int w = 0; w < words; ++w) occ[side * words + w] = ~uint64_t{0}; // filled north edge

        int survived = 0; // steps the probe stayed occupied, capped at max_ell
        if (occ[probe_y * words + probe_word] & probe_bit) {
            for (int m = 1; m <= max_ell; ++m) {
                for (int y = 0; y < side; ++y) {
                    const uint64_t* row = &occ[y * words];
                    const uint64_t* north = &occ[(y + 1) * words];
                    uint64_t* out = &nxt[y * words];
                    for (int w = 0; w < words; ++w) {
                        uint64_t east = row[w] >> 1;
                        if (w + 1 < words) east |= row[w + 1] << 63;
                        if (w == words - 1) east |= east_edge_bit;
                        out[w] = row[w] & (east | north[w]);
                    }
                    out[words - 1] |= pad_mask;
                }
                for (int w = 0; w < words; ++w) nxt[side * words + w] = ~uint64_t{0};
                occ.swap(nxt);
                if (!(occ[probe_y * words + probe_word] & probe_bit)) break;
                survived = m;
            }
        } else {
            survived = -1; // empty from the start
        }
        for (int m = 0; m <= survived; ++m) ++alive[m];
    }

    std::vector<NEReport> out;
    out.reserve(ells.size());
    for (int l : ells) {
        NEReport r;
        r.ell = l;
        if (l == 0) { // zero iterations leave the Bernoulli measure untouched
            r.p_ell = p;
            r.se = 0.0;
        } else {
            r.p_ell = static_cast<double>(alive[l]) / static_cast<double>(samples);
            r.se = std::sqrt(r.p_ell * (1.0 - r.p_ell) / static_cast<double>(samples));
        }
        r.delta = p > 0.0 ? r.p_ell / p : 0.0;
        r.condition_value = static_cast<double>(l + 1) * (l + 1) * r.delta;
        r.passes = r.condition_value < 0.25;
        out.push_back(r);
    }
    return out;
}

} // namespace kcsm
