#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "kcsm/bootstrap.hpp"
#include "kcsm/constraints.hpp"
#include "kcsm/errors.hpp"
#include "kcsm/graph.hpp"
#include "kcsm/model.hpp"
#include "kcsm/rng.hpp"
#include "kcsm/spin_config.hpp"
#include "kcsm/threshold.hpp"

namespace kcsm {

/// The negated generator -L in the basis weighted by sqrt of the Bernoulli
/// stationary weights, where reversibility makes it symmetric positive
/// semidefinite. Configurations pack into machine words, vertex id = bit
/// position; the operator is applied matrix-free by running over the V
/// single-spin-flip terms.
///
/// Off-diagonal entry between s and s^x: -c_x(s) sqrt(p(1-p)); diagonal:
/// sum of refresh rates of the flippable sites, so rows of the unweighted
/// generator sum to zero.
class GeneratorOp {
  public:
    static constexpr int default_vertex_cap = 24;

    GeneratorOp(const ModelSpec& spec, const SiteGraph& g,
                Boundary boundary = Boundary::Empty, int vertex_cap = default_vertex_cap)
        : num_sites_(g.num_vertices()), p_(spec.p) {
        spec.validate();
        if (num_sites_ > vertex_cap)
            throw ResourceError("GeneratorOp: " + std::to_string(num_sites_) +
                                " vertices exceeds state-space cap 2^" +
                                std::to_string(vertex_cap));
        if (!(spec.p > 0.0 && spec.p < 1.0))
            throw ValidationError("GeneratorOp: spectral analysis needs p in (0,1)");
        num_states_ = uint64_t{1} << num_sites_;
        flip_weight_ = std::sqrt(spec.p * (1.0 - spec.p));

        // per-site rule: c_x(s) = popcount(mask & ~s) >= need
        rules_.resize(num_sites_);
        for (int x = 0; x < num_sites_; ++x) {
            uint32_t mask = 0;
            int need = 0;
            if (spec.family == Family::NE) {
                need = 2;
                for (int nb : {g.north(x), g.east(x)}) {
                    if (nb >= 0)
                        mask |= uint32_t{1} << nb;
                    else if (boundary == Boundary::Empty)
                        --need;
                }
            } else {
                need = spec.j;
                if (boundary == Boundary::Empty) need -= g.missing_children(x);
                for (int c : g.children(x)) mask |= uint32_t{1} << c;
                if (spec.family == Family::FA && g.parent(x) >= 0)
                    mask |= uint32_t{1} << g.parent(x);
            }
            rules_[x] = {mask, need};
        }

        if (num_states_ <= (uint64_t{1} << 20)) {
            cbits_.resize(num_states_);
            diag_.resize(num_states_);
            for (uint64_t s = 0; s < num_states_; ++s) {
                uint32_t bits = 0;
                double d = 0.0;
                for (int x = 0; x < num_sites_; ++x) {
                    if (constraint_bit(static_cast<uint32_t>(s), x)) {
                        bits |= uint32_t{1} << x;
                        d += ((s >> x) & 1) ? (1.0 - p_) : p_;
                    }
                }
                cbits_[s] = bits;
                diag_[s] = d;
            }
        }
    }

    int num_sites() const { return num_sites_; }
    uint64_t num_states() const { return num_states_; }
    double density() const { return p_; }

    bool constraint_bit(uint32_t s, int x) const {
        const auto& r = rules_[x];
        return __builtin_popcount(r.mask & ~s) >= r.need;
    }

    /// y := (-L) x in the weighted basis.
    void apply(const std::vector<double>& in, std::vector<double>& out) const {
        out.assign(num_states_, 0.0);
        if (!cbits_.empty()) {
            for (uint64_t s = 0; s < num_states_; ++s) {
                double acc = diag_[s] * in[s];
                uint32_t bits = cbits_[s];
                while (bits) {
                    const int x = __builtin_ctz(bits);
                    bits &= bits - 1;
                    acc -= flip_weight_ * in[s ^ (uint64_t{1} << x)];
                }
                out[s] = acc;
            }
            return;
        }
        for (uint64_t s = 0; s < num_states_; ++s) {
            double acc = 0.0;
            for (int x = 0; x < num_sites_; ++x) {
                if (!constraint_bit(static_cast<uint32_t>(s), x)) continue;
                acc += (((s >> x) & 1) ? (1.0 - p_) : p_) * in[s];
                acc -= flip_weight_ * in[s ^ (uint64_t{1} << x)];
            }
            out[s] = acc;
        }
    }

    /// Dense assembly of -L (weighted basis); small state spaces only.
    Eigen::MatrixXd dense() const {
        if (num_states_ > (uint64_t{1} << 14))
            throw ResourceError("GeneratorOp::dense: > 2^14 states");
        const auto n = static_cast<Eigen::Index>(num_states_);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
        for (uint64_t s = 0; s < num_states_; ++s) {
            for (int x = 0; x < num_sites_; ++x) {
                if (!constraint_bit(static_cast<uint32_t>(s), x)) continue;
                m(s, s) += ((s >> x) & 1) ? (1.0 - p_) : p_;
                m(s, s ^ (uint64_t{1} << x)) -= flip_weight_;
            }
        }
        return m;
    }

    /// Stationary eigenvector in the weighted basis: v(s) = sqrt(mu(s)),
    /// normalized. Known in closed form, which is what makes deflation cheap.
    std::vector<double> stationary_vector() const {
        std::vector<double> v(num_states_);
        const double sp = std::sqrt(p_), sq = std::sqrt(1.0 - p_);
        for (uint64_t s = 0; s < num_states_; ++s) {
            double w = 1.0;
            for (int x = 0; x < num_sites_; ++x) w *= ((s >> x) & 1) ? sp : sq;
            v[s] = w;
        }
        return v;
    }

  private:
    struct SiteRule {
        uint32_t mask;
        int need;
    };
    int num_sites_;
    uint64_t num_states_;
    double p_;
    double flip_weight_;
    std::vector<SiteRule> rules_;
    std::vector<uint32_t> cbits_; // per-state constraint bits (precomputed when small)
    std::vector<double> diag_;
};

struct GeneratorSpectrum {
    uint64_t num_states = 0;
    double gap = 0.0;
    std::vector<double> low_eigenvalues;
    bool ergodic = false; ///< zero eigenvalue simple
    bool converged = true;
    double residual = 0.0;
    std::string method; ///< "dense" or "lanczos"
};

struct GapOptions {
    Boundary boundary = Boundary::Empty;
    int vertex_cap = GeneratorOp::default_vertex_cap;
    uint64_t dense_states = uint64_t{1} << 14; ///< dense eigensolve at or below
    double dense_tol = 1e-10;
    double lanczos_rel_tol = 1e-8;
    int lanczos_max_basis = 400;
    int lanczos_max_restarts = 80;
    int num_low_eigenvalues = 8;
};

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}
inline void axpy(double a, const std::vector<double>& x, std::vector<double>& y) {
    for (size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}
inline double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

/// Smallest eigenvalue of the operator restricted to the orthogonal
/// complement of the known stationary vector: Lanczos with full
/// reorthogonalization, restarted from the best Ritz vector if the basis
/// cap is reached.
inline GeneratorSpectrum lanczos_gap(const GeneratorOp& op, const GapOptions& opts) {
    GeneratorSpectrum out;
    out.num_states = op.num_states();
    out.method = "lanczos";
    const size_t n = op.num_states();
    const std::vector<double> v0 = op.stationary_vector();

    Rng rng(0x6c616e637a6f73ULL); // fixed seed: bitwise-deterministic solves
    std::vector<double> start(n);
    for (auto& e : start) e = rng.uniform() - 0.5;

    std::vector<std::vector<double>> basis;
    std::vector<double> alpha, beta, w(n);
    double theta = 0.0, theta_max = 1.0, resid = 0.0;
    Eigen::VectorXd ritz_small;

    auto orthogonalize = [&](std::vector<double>& v) {
        axpy(-dot(v0, v), v0, v);
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& q : basis) axpy(-dot(q, v), q, v);
    };

    for (int restart = 0; restart <= opts.lanczos_max_restarts; ++restart) {
        basis.clear();
        alpha.clear();
        beta.clear();
        orthogonalize(start);
        double nrm = norm(start);
        if (nrm < 1e-300) { // complement exhausted: spectrum is {0} plus deflated part
            out.gap = 0.0;
            out.ergodic = false;
            return out;
        }
        for (auto& e : start) e /= nrm;
        basis.push_back(start);

        for (int m = 0; m < opts.lanczos_max_basis; ++m) {
            op.apply(basis.back(), w);
            const double a = dot(basis.back(), w);
            axpy(-a, basis.back(), w);
            if (m > 0) axpy(-beta.back(), basis[m - 1], w);
            orthogonalize(w);
            alpha.push_back(a);
            const double b = norm(w);

            // Ritz values of the tridiagonal section
            const int msz = static_cast<int>(alpha.size());
            Eigen::MatrixXd t = Eigen::MatrixXd::Zero(msz, msz);
            for (int i = 0; i < msz; ++i) {
                t(i, i) = alpha[i];
                if (i + 1 < msz) t(i, i + 1) = t(i + 1, i) = beta[i];
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t);
            theta = es.eigenvalues()(0);
            theta_max = es.eigenvalues()(msz - 1);
            ritz_small = es.eigenvectors().col(0);
            resid = b * std::abs(ritz_small(msz - 1));
            if (resid <= opts.lanczos_rel_tol * std::max(theta_max, 1.0)) {
                out.gap = std::max(theta, 0.0);
                out.converged = true;
                out.residual = resid;
                out.ergodic = out.gap > 1e-9 * op.num_sites();
                out.low_eigenvalues.assign(
                    es.eigenvalues().data(),
                    es.eigenvalues().data() + std::min<int>(msz, opts.num_low_eigenvalues));
                return out;
            }
            if (b < 1e-300) break; // invariant subspace; restart with fresh vector
            beta.push_back(b);
            for (auto& e : w) e /= b;
            basis.push_back(w);
        }
        // restart from the current best Ritz vector
        std::vector<double> y(n, 0.0);
        const int msz = static_cast<int>(alpha.size());
        for (int i = 0; i < msz; ++i) axpy(ritz_small(i), basis[i], y);
        start = std::move(y);
    }
    throw SolverError("lanczos_gap: no convergence after " +
                          std::to_string(opts.lanczos_max_restarts) +
                          " restarts; residual " + std::to_string(resid),
                      resid);
}

} // namespace detail

/// Spectral gap (smallest nonzero eigenvalue of -L) on the full 2^V state
/// space: dense eigensolve up to opts.dense_states, deflated Lanczos above.
inline GeneratorSpectrum exact_gap(const ModelSpec& spec, const SiteGraph& g,
                                   const GapOptions& opts = {}) {
    GeneratorOp op(spec, g, opts.boundary, opts.vertex_cap);
    if (op.num_states() <= opts.dense_states) {
        GeneratorSpectrum out;
        out.num_states = op.num_states();
        out.method = "dense";
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(op.dense());
        const auto& ev = es.eigenvalues();
        out.gap = std::max(ev(1), 0.0);
        out.ergodic = ev(1) > 1e-9 * op.num_sites();
        const int nl = std::min<int>(static_cast<int>(ev.size()), opts.num_low_eigenvalues);
        out.low_eigenvalues.assign(ev.data(), ev.data() + nl);
        return out;
    }
    return detail::lanczos_gap(op, opts);
}

enum class Estimator { Exact, MonteCarlo };

struct DirichletReport {
    double variance = 0.0;
    double dirichlet = 0.0;
    double ratio = 0.0; ///< dirichlet / variance, an upper bound on the gap
    bool valid = false; ///< false when the variance vanishes
    Estimator estimator = Estimator::Exact;
    uint64_t samples = 0;
    double variance_se = 0.0;
    double dirichlet_se = 0.0;
    double ratio_se = 0.0;
};

namespace detail {
inline void finish_ratio(DirichletReport& r) {
    r.valid = r.variance > 1e-15; // rounding floor: sums of 2^V weights
    if (r.valid) {
        r.ratio = r.dirichlet / r.variance;
        const double a = r.variance > 0 ? r.variance_se / r.variance : 0.0;
        const double b = r.dirichlet > 0 ? r.dirichlet_se / r.dirichlet : 0.0;
        r.ratio_se = r.ratio * std::sqrt(a * a + b * b);
    }
}
} // namespace detail

/// Variational data for a {0,1}-valued observable: Var(f) under the
/// Bernoulli product measure and the Dirichlet form
///   D(f) = sum_x mu( c_x * Var_x(f) ),   Var_x(f) = p(1-p) (grad_x f)^2.
/// Exact enumeration over all 2^V states.
template <class Pred>
DirichletReport dirichlet_ratio_exact(const ModelSpec& spec, const SiteGraph& g, Pred&& f,
                                      Boundary boundary = Boundary::Empty,
                                      int vertex_cap = 20) {
    spec.validate();
    const int v = g.num_vertices();
    if (v > vertex_cap)
        throw ResourceError("dirichlet_ratio_exact: 2^" + std::to_string(v) +
                            " states exceed the exact-mode cap");
    const double p = spec.p;
    const uint64_t n = uint64_t{1} << v;
    double mean = 0.0, dir = 0.0;
    for (uint64_t s = 0; s < n; ++s) {
        SpinConfig eta = SpinConfig::from_state_index(v, static_cast<uint32_t>(s));
        const int pop = eta.count_occupied();
        const double w = std::pow(p, pop) * std::pow(1.0 - p, v - pop);
        mean += w * (f(eta) ? 1.0 : 0.0);
        for (int x = 0; x < v; ++x) {
            if (!constraint_satisfied(spec, g, eta, x, boundary)) continue;
            SpinConfig up = eta, dn = eta;
            up.set(x, true);
            dn.set(x, false);
            const double grad = (f(up) ? 1.0 : 0.0) - (f(dn) ? 1.0 : 0.0);
            dir += w * p * (1.0 - p) * grad * grad;
        }
    }
    DirichletReport r;
    r.estimator = Estimator::Exact;
    r.variance = mean * (1.0 - mean);
    r.dirichlet = dir;
    detail::finish_ratio(r);
    return r;
}

/// Monte Carlo version of dirichlet_ratio_exact on Bernoulli(p) samples,
/// with standard errors.
template <class Pred>
DirichletReport dirichlet_ratio_mc(const ModelSpec& spec, const SiteGraph& g, Pred&& f,
                                   uint64_t samples, uint64_t seed,
                                   Boundary boundary = Boundary::Empty) {
    spec.validate();
    if (samples < 2) throw ValidationError("dirichlet_ratio_mc: need >= 2 samples");
    const int v = g.num_vertices();
    const double p = spec.p;
    Rng rng(seed);
    double fsum = 0.0, dsum = 0.0, d2sum = 0.0;
    for (uint64_t i = 0; i < samples; ++i) {
        SpinConfig eta = sample_config(spec, g, rng);
        fsum += f(eta) ? 1.0 : 0.0;
        int cnt = 0;
        for (int x = 0; x < v; ++x) {
            if (!constraint_satisfied(spec, g, eta, x, boundary)) continue;
            SpinConfig up = eta, dn = eta;
            up.set(x, true);
            dn.set(x, false);
            cnt += f(up) != f(dn);
        }
        const double d = p * (1.0 - p) * cnt;
        dsum += d;
        d2sum += d * d;
    }
    DirichletReport r;
    r.estimator = Estimator::MonteCarlo;
    r.samples = samples;
    const double ns = static_cast<double>(samples);
    const double q = fsum / ns;
    r.variance = q * (1.0 - q);
    r.variance_se = std::abs(1.0 - 2.0 * q) * std::sqrt(q * (1.0 - q) / ns) +
                    q * (1.0 - q) / ns; // delta method, + curvature guard near q = 1/2
    r.dirichlet = dsum / ns;
    r.dirichlet_se = std::sqrt(std::max(d2sum / ns - r.dirichlet * r.dirichlet, 0.0) / ns);
    detail::finish_ratio(r);
    return r;
}

/// Monte Carlo Dirichlet ratio specialized to f = indicator of event A
/// (root occupied after n bootstrap steps). One O(V) pivotal-marking pass
/// per sample replaces the 2V flip evaluations; only sites whose dynamic
/// constraint holds contribute, and for non-leaf sites that never happens.
inline DirichletReport event_a_variational(const ModelSpec& spec, const SiteGraph& g, int n,
                                           uint64_t samples, uint64_t seed,
                                           Boundary boundary = Boundary::Empty) {
    spec.validate();
    if (samples < 2) throw ValidationError("event_a_variational: need >= 2 samples");
    const int v = g.num_vertices();
    const double p = spec.p;
    Rng rng(seed);
    double fsum = 0.0, dsum = 0.0, d2sum = 0.0;
    for (uint64_t i = 0; i < samples; ++i) {
        SpinConfig eta = sample_config(spec, g, rng);
        fsum += event_a(spec, g, eta, n) ? 1.0 : 0.0;
        const auto marks = pivotal_marks(spec, g, eta, n);
        int cnt = 0;
        for (int x = 0; x < v; ++x)
            if (marks[x] && constraint_satisfied(spec, g, eta, x, boundary)) ++cnt;
        const double d = p * (1.0 - p) * cnt;
        dsum += d;
        d2sum += d * d;
    }
    DirichletReport r;
    r.estimator = Estimator::MonteCarlo;
    r.samples = samples;
    const double ns = static_cast<double>(samples);
    const double q = fsum / ns;
    r.variance = q * (1.0 - q);
    r.variance_se = std::abs(1.0 - 2.0 * q) * std::sqrt(q * (1.0 - q) / ns) +
                    q * (1.0 - q) / ns;
    r.dirichlet = dsum / ns;
    r.dirichlet_se = std::sqrt(std::max(d2sum / ns - r.dirichlet * r.dirichlet, 0.0) / ns);
    detail::finish_ratio(r);
    return r;
}

/// Predicted per-level decay rate of the variational gap bound above the
/// critical density: -log g_p'(p_inf), with
///   g_p'(p_inf) = k p C(k-1, j-1) p_inf^{k-j} (1 - p_inf)^{j-1} < 1.
inline double predicted_decay_rate(int k, int j, double p) {
    const double p_tilde = critical_density(k, j, 1e-12).p_c;
    if (p <= p_tilde)
        throw ValidationError("predicted_decay_rate: requires p above the critical density " +
                              std::to_string(p_tilde));
    const double p_inf = largest_fixed_point(k, j, p, 1e-13).p_inf;
    return -std::log(eval_g_prime(k, j, p, p_inf));
}

} // namespace kcsm
