#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kcsm/errors.hpp"

namespace kcsm {

namespace detail {

/// Exact binomial coefficients as integers for n <= 64 (they fit in
/// uint64_t), log-space via lgamma beyond that.
inline double binomial(int n, int i) {
    if (i < 0 || i > n) return 0.0;
    if (n <= 64) {
        uint64_t c = 1;
        if (i > n - i) i = n - i;
        for (int m = 1; m <= i; ++m) c = c / m * (n - m + 1) + c % m * (n - m + 1) / m;
        return static_cast<double>(c);
    }
    return std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0));
}

inline void check_gp_domain(int k, int j, double p, double x) {
    if (k < 1 || j < 1 || j > k)
        throw ValidationError("g_p: need 1 <= j <= k, got j=" + std::to_string(j) +
                              " k=" + std::to_string(k));
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("g_p: p must lie in [0,1]");
    if (!(x >= 0.0 && x <= 1.0)) throw ValidationError("g_p: x must lie in [0,1]");
}

/// x^e with the 0^0 = 1 convention used throughout the recursion formulas.
inline double ipow(double x, int e) {
    double r = 1.0;
    for (int m = 0; m < e; ++m) r *= x;
    return r;
}

} // namespace detail

/// One-generation recursion function
///   g_p(x) = p * sum_{i=k-j+1}^{k} C(k,i) x^i (1-x)^{k-i},
/// i.e. p times the upper binomial tail P[Binom(k,x) >= k-j+1].
/// Nondecreasing in x with g_p(0) = 0, g_p(1) = p.
inline double eval_g(int k, int j, double p, double x) {
    detail::check_gp_domain(k, j, p, x);
    double s = 0.0;
    for (int i = k - j + 1; i <= k; ++i)
        s += detail::binomial(k, i) * detail::ipow(x, i) * detail::ipow(1.0 - x, k - i);
    return p * std::min(s, 1.0);
}

/// d/dx g_p(x) = p k C(k-1, k-j) x^{k-j} (1-x)^{j-1}
/// (the tail sum telescopes to a single Binom(k-1, x) mass term).
inline double eval_g_prime(int k, int j, double p, double x) {
    detail::check_gp_domain(k, j, p, x);
    return p * k * detail::binomial(k - 1, k - j) * detail::ipow(x, k - j) *
           detail::ipow(1.0 - x, j - 1);
}

namespace detail {

/// Right edge of the superlevel set {x : g_p'(x) >= 1}. g' is a scaled
/// Binom(k-1, x) mass term, hence unimodal with peak at (k-j)/(k-1); the
/// crossing is bisected on the decreasing flank. nullopt if g' < 1 everywhere.
inline std::optional<double> upper_derivative_crossing(int k, int j, double p) {
    const double peak = (k == 1) ? 1.0 : static_cast<double>(k - j) / (k - 1);
    if (eval_g_prime(k, j, p, peak) < 1.0) return std::nullopt;
    if (eval_g_prime(k, j, p, 1.0) >= 1.0) return 1.0;
    double lo = peak, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (eval_g_prime(k, j, p, mid) >= 1.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

} // namespace detail

/// Does g_p have a fixed point in (0,1]? Since h(x) = g_p(x) - x starts at
/// h(0) = 0 and increases exactly where g' > 1, its maximum over (0,1] sits
/// at the upper crossing b of g' = 1; a positive fixed point exists iff
/// g_p(b) >= b. Exact, and free of the critical slowing down a fixed-point
/// iteration suffers near tangency.
inline bool has_positive_fixed_point(int k, int j, double p) {
    detail::check_gp_domain(k, j, p, 0.0);
    if (p == 0.0) return false;
    // j = k: g is concave, so a positive fixed point exists iff g'(0) > 1.
    // (The crossing test would degenerate here: its tangency sits at x = 0.)
    if (j == k) return p * k > 1.0;
    const auto b = detail::upper_derivative_crossing(k, j, p);
    return b && eval_g(k, j, p, *b) >= *b;
}

/// (p_0, ..., p_n) with p_0 = p and p_m = g_p(p_{m-1}): the probability the
/// root is still occupied after m bootstrap iterations. The oriented and
/// one-branch-removed unoriented quantities obey the same recursion.
inline std::vector<double> iterate_recursion(int k, int j, double p, int n) {
    if (n < 0) throw ValidationError("iterate_recursion: n must be >= 0");
    std::vector<double> out;
    out.reserve(n + 1);
    out.push_back(p);
    for (int m = 1; m <= n; ++m) out.push_back(eval_g(k, j, p, out.back()));
    return out;
}

/// Occupation probability after n iterations on the unrooted tree, where a
/// vertex sees k+1 subtrees:
///   mu^(n)(eta_x = 1) = p * sum_{i=k-j+1}^{k+1} C(k+1,i) q^i (1-q)^{k+1-i}
/// with q = p_{n-1} from the recursion.
inline double frozen_fraction_unrooted(int k, int j, double p, int n) {
    if (n < 1) throw ValidationError("frozen_fraction_unrooted: n must be >= 1");
    const double q = iterate_recursion(k, j, p, n - 1).back();
    double s = 0.0;
    for (int i = k - j + 1; i <= k + 1; ++i)
        s += detail::binomial(k + 1, i) * detail::ipow(q, i) * detail::ipow(1.0 - q, k + 1 - i);
    return p * std::min(s, 1.0);
}

struct FixedPointReport {
    double p_inf = 0.0; ///< largest fixed point of g_p in [0, p]
    double derivative_at_fp = 0.0;
    bool stable = false; ///< derivative < 1
    int iterations = 0;
};

/// Largest fixed point of g_p, found by iterating x <- g_p(x) downward from
/// x = 1 (g_p is monotone, so the iterates decrease onto it). If the
/// contraction degenerates near tangency the remaining bracket
/// [g'-crossing, current iterate] is bisected instead.
inline FixedPointReport largest_fixed_point(int k, int j, double p, double tol = 1e-12) {
    if (!(tol > 0.0)) throw ValidationError("largest_fixed_point: tol must be > 0");
    FixedPointReport r;
    if (!has_positive_fixed_point(k, j, p)) {
        r.p_inf = 0.0;
        r.derivative_at_fp = eval_g_prime(k, j, p, 0.0);
        r.stable = r.derivative_at_fp < 1.0;
        return r;
    }
    double x = 1.0;
    const int max_iter = 200000;
    for (; r.iterations < max_iter; ++r.iterations) {
        const double nx = eval_g(k, j, p, x);
        const bool done = std::abs(nx - x) < tol * std::max(x, 1e-12);
        x = nx;
        if (done) break;
    }
    if (r.iterations == max_iter) {
        double lo = *detail::upper_derivative_crossing(k, j, p), hi = x;
        while (hi - lo > tol * std::max(lo, 1e-12)) {
            const double mid = 0.5 * (lo + hi);
            (eval_g(k, j, p, mid) >= mid ? lo : hi) = mid;
        }
        x = 0.5 * (lo + hi);
    }
    r.p_inf = x;
    r.derivative_at_fp = eval_g_prime(k, j, p, x);
    r.stable = r.derivative_at_fp < 1.0;
    return r;
}

struct CriticalDensityReport {
    double p_c = 0.0;
    double bracket_width = 0.0;
    int evaluations = 0;
};

/// Critical density: the supremum of p at which x = 0 is the unique fixed
/// point of g_p, located by bisection on the fixed-point classifier.
/// Equals 1/k for j = k and 1 for j = 1.
inline CriticalDensityReport critical_density(int k, int j, double tol = 1e-9) {
    if (!(tol > 0.0)) throw ValidationError("critical_density: tol must be > 0");
    detail::check_gp_domain(k, j, 0.0, 0.0);
    CriticalDensityReport r;
    double lo = 0.0, hi = 1.0;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        ++r.evaluations;
        (has_positive_fixed_point(k, j, mid) ? hi : lo) = mid;
    }
    r.p_c = 0.5 * (lo + hi);
    r.bracket_width = hi - lo;
    return r;
}

/// Smallest ell with (ell+1) p_ell / p <= 1/4: from this scale on the
/// auxiliary-constraint model satisfies the Poincare inequality with
/// constant 8, uniformly in the tree depth. Diverges as p approaches the
/// critical density, and is rejected at or above it.
inline int ell_zero(int k, int j, double p) {
    detail::check_gp_domain(k, j, p, 0.0);
    if (p == 0.0) return 1;
    const double p_tilde = (j == k) ? 1.0 / k : critical_density(k, j, 1e-12).p_c;
    // at p = p_tilde (j = k) the recursion decays only harmonically and the
    // condition is never met, so the boundary itself is rejected too
    if (has_positive_fixed_point(k, j, p) || p >= p_tilde - 1e-11)
        throw ValidationError("ell_zero: requires p < critical density " +
                              std::to_string(p_tilde) + ", got p = " + std::to_string(p));
    double q = p;
    const int max_ell = 1000000;
    for (int ell = 1; ell <= max_ell; ++ell) {
        q = eval_g(k, j, p, q); // q = p_ell
        if ((ell + 1) * q / p <= 0.25) return ell;
    }
    throw SolverError("ell_zero: condition not reached within " + std::to_string(max_ell) +
                          " levels (delta(ell) does not vanish; p too close to critical)",
                      q / p);
}

} // namespace kcsm
