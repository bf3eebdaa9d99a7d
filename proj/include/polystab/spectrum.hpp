#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "polystab/charfn.hpp"
#include "polystab/state.hpp"

namespace polystab {

struct NewtonResult {
    cplx root;
    double residual;
    int iterations;
};

struct NewtonOptions {
    double tol = 1e-12;
    int max_iters = 100;
    int max_halvings = 20;
    double pole_distance = 1e-12;
};

/// Damped Newton iteration on f. A step is accepted only if it does not increase |f|;
/// otherwise it is halved up to max_halvings times. Stops once |f| <= tol, or once a full
/// Newton step is shorter than tol * max(1, |lambda|) (near a pole |f| cannot get below
/// |f'| times the rounding error of lambda).
inline NewtonResult newton_root(const SystemSpec& sys, cplx seed, const NewtonOptions& opt = {}) {
    if (!(opt.tol > 0.0))
        throw invalid_argument("Newton tolerance must be positive");
    if (detail::distance_to_poles(sys, seed) < opt.pole_distance)
        throw pole_error("Newton seed sits on a pole of f");

    cplx z = seed;
    double fz = std::abs(eval_f(sys, z));
    for (int it = 0; it <= opt.max_iters; ++it) {
        if (fz <= opt.tol)
            return {z, fz, it};
        if (it == opt.max_iters)
            break;
        const cplx step = -eval_f(sys, z) / eval_df(sys, z);
        if (std::abs(step) <= opt.tol * std::max(1.0, std::abs(z))) {
            const cplx next = z + step;
            const double fn = std::abs(eval_f(sys, next));
            return fn <= fz ? NewtonResult{next, fn, it + 1} : NewtonResult{z, fz, it};
        }
        cplx trial = z + step;
        double scale = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h) {
            if (detail::distance_to_poles(sys, trial) < opt.pole_distance)
                throw pole_error("Newton step landed on a pole of f");
            const double ft = std::abs(eval_f(sys, trial));
            if (ft <= fz) {
                z = trial;
                fz = ft;
                accepted = true;
                break;
            }
            scale *= 0.5;
            trial = z + scale * step;
        }
        if (!accepted)
            throw convergence_error("Newton stalled: no decrease of |f| after step halving");
    }
    throw convergence_error("Newton did not reach the |f| tolerance within " +
                            std::to_string(opt.max_iters) + " iterations");
}

struct Disk {
    cplx center;
    double radius;
};

struct WindingOptions {
    int initial_samples = 128;
    int max_samples = 8192;
    double integer_tol = 1e-6;
    double pole_guard = 1e-9;
};

/// (1/2 pi i) * contour integral of f'/f over the boundary of `disk`, i.e. zeros minus
/// poles of f inside. Trapezoidal sums are doubled until two successive values round
/// to the same integer within integer_tol.
inline int winding_number(const SystemSpec& sys, const Disk& disk, const WindingOptions& opt = {}) {
    if (!(disk.radius > 0.0))
        throw invalid_argument("disk radius must be positive");
    auto integrate = [&](int n) {
        cplx acc = 0.0;
        for (int i = 0; i < n; ++i) {
            const cplx e = std::polar(1.0, 2.0 * std::numbers::pi * double(i) / double(n));
            const cplx lam = disk.center + disk.radius * e;
            if (detail::distance_to_poles(sys, lam) < opt.pole_guard)
                throw pole_error("pole of f on the integration contour");
            // d lambda = i r e dt, dt = 2 pi / n
            acc += eval_df(sys, lam) / eval_f(sys, lam) * (disk.radius * e);
        }
        return acc / double(n);
    };

    int n = opt.initial_samples;
    cplx prev = integrate(n);
    while (n < opt.max_samples) {
        n *= 2;
        const cplx cur = integrate(n);
        const double r = std::round(cur.real());
        const bool near = std::abs(cur - r) <= opt.integer_tol;
        if (near && std::abs(prev - r) <= std::max(opt.integer_tol, 1e-3))
            return int(r);
        prev = cur;
    }
    throw convergence_error("winding number did not settle on an integer");
}

enum class Half { upper, lower };

inline const char* to_string(Half h) { return h == Half::upper ? "upper" : "lower"; }

enum class CertSource { rouche, fallback, none };

inline const char* to_string(CertSource s) {
    switch (s) {
    case CertSource::rouche: return "rouche";
    case CertSource::fallback: return "fallback";
    default: return "none";
    }
}

/// One eigenvalue with the disk that isolates it. `upper` is the root near i omega_k,
/// `lower` its partner near -i omega_k.
struct EigenCertificate {
    std::size_t k = 0;
    Half half = Half::upper;
    cplx lambda;
    double residual = std::numeric_limits<double>::infinity();
    Disk disk{};
    int winding = 0;
    bool certified = false;
    int newton_iters = 0;
    CertSource source = CertSource::none;
    std::string note;
};

struct SpectrumReport {
    std::vector<EigenCertificate> eigs;  ///< sorted by (k, half)
    std::vector<std::optional<LocalizationCertificate>> localization; ///< per mode, index k-1
    double symmetry_defect = 0.0;
    double enclosure_defect = 0.0;
    double min_separation = 0.0;
    bool complete = false;
    std::vector<std::string> failures;

    const EigenCertificate& at(std::size_t k, Half h) const {
        return eigs.at(2 * (k - 1) + (h == Half::upper ? 0 : 1));
    }
    /// lambda_k (upper root) for the 1-based mode k.
    cplx upper(std::size_t k) const { return at(k, Half::upper).lambda; }
    std::vector<cplx> values() const {
        std::vector<cplx> v;
        for (const auto& e : eigs)
            v.push_back(e.lambda);
        return v;
    }
    /// Floor rate min |Re lambda| over the reported eigenvalues.
    double floor_rate() const {
        double r = std::numeric_limits<double>::infinity();
        for (const auto& e : eigs)
            r = std::min(r, std::abs(e.lambda.real()));
        return r;
    }
};

struct SpectrumOptions {
    double theta_frac = 0.5;
    LocalizeOptions localize{};
    NewtonOptions newton{};
    WindingOptions winding{};
    double residual_factor = 1e-10;
    double distinct_tol = 1e-9;
};

namespace detail {

inline bool residual_ok(const SystemSpec& sys, const EigenCertificate& e, double factor) {
    return e.residual <= factor * (1.0 + std::abs(eval_df(sys, e.lambda)));
}

/// Disk around a converged root that excludes every pole and stays in its half-plane.
inline Disk isolation_disk(const SystemSpec& sys, cplx root) {
    const double r = 0.5 * std::min(std::abs(root.real()), distance_to_poles(sys, root));
    return {root, r};
}

inline void finish_certificate(const SystemSpec& sys, EigenCertificate& e, const SpectrumOptions& opt) {
    try {
        e.winding = winding_number(sys, e.disk, opt.winding);
    } catch (const error& ex) {
        e.winding = 0;
        e.note += std::string(e.note.empty() ? "" : "; ") + ex.what();
    }
    const bool inside = std::abs(e.lambda - e.disk.center) < e.disk.radius;
    e.certified = e.winding == 1 && inside && e.lambda.real() < 0.0 &&
                  residual_ok(sys, e, opt.residual_factor);
}

inline std::optional<NewtonResult> try_newton(const SystemSpec& sys, cplx seed, const NewtonOptions& opt,
                                              std::string& note) {
    try {
        return newton_root(sys, seed, opt);
    } catch (const error& ex) {
        note += std::string(note.empty() ? "" : "; ") + ex.what();
        return std::nullopt;
    }
}

inline double min_gap(const SystemSpec& sys) {
    double g = sys.size() > 1 ? std::numeric_limits<double>::infinity() : sys.omega()(0);
    for (std::size_t j = 1; j < sys.size(); ++j)
        g = std::min(g, sys.omega()(Eigen::Index(j)) - sys.omega()(Eigen::Index(j - 1)));
    return g;
}

inline cplx seed_for(Half h, cplx upper_seed) { return h == Half::upper ? upper_seed : std::conj(upper_seed); }

} // namespace detail

/// All 2N eigenvalues of the truncated generator. Each mode is first localized with
/// the Rouche disk around lambda_k*; if that disk is not certifiable the root is sought
/// from a seed pushed into the left half-plane and isolated by a disk around the root.
inline SpectrumReport full_spectrum(const SystemSpec& sys, const SpectrumOptions& opt = {}) {
    const std::size_t n = sys.size();
    SpectrumReport rep;
    rep.localization.resize(n);
    const double band = 0.5 * detail::min_gap(sys);

    for (std::size_t k = 1; k <= n; ++k) {
        const CharContext ctx(sys, k);
        const double wk = ctx.omega();
        std::string loc_note;
        try {
            rep.localization[k - 1] = localize(ctx, opt.theta_frac, opt.localize);
        } catch (const empty_interval& ex) {
            loc_note = ex.what();
        }
        const auto& loc = rep.localization[k - 1];
        const bool rouche = loc && loc->rouche_ready();

        for (Half h : {Half::upper, Half::lower}) {
            EigenCertificate e;
            e.k = k;
            e.half = h;
            e.note = loc_note;
            const double sign = h == Half::upper ? 1.0 : -1.0;

            if (rouche) {
                const cplx center = detail::seed_for(h, loc->lambda_star);
                e.disk = {center, loc->Rk};
                if (auto nr = detail::try_newton(sys, center, opt.newton, e.note)) {
                    e.lambda = nr->root;
                    e.residual = nr->residual;
                    e.newton_iters = nr->iterations;
                    e.source = CertSource::rouche;
                    detail::finish_certificate(sys, e, opt);
                }
            }
            if (!e.certified) {
                // Fallback: seed at i omega_k - R/2 (R the enclosure radius at i omega_k), then lambda_k*.
                const cplx pushed = I * wk - 0.5 * enclosure_radius(sys, I * wk);
                const cplx star = lambda_star(ctx);
                for (cplx s : {pushed, star}) {
                    auto nr = detail::try_newton(sys, detail::seed_for(h, s), opt.newton, e.note);
                    if (!nr)
                        continue;
                    if (std::abs(sign * nr->root.imag() - wk) > band) {
                        e.note += std::string(e.note.empty() ? "" : "; ") +
                                  "Newton root left the frequency band of mode " + std::to_string(k);
                        continue;
                    }
                    EigenCertificate trial = e;
                    trial.lambda = nr->root;
                    trial.residual = nr->residual;
                    trial.newton_iters = nr->iterations;
                    trial.source = CertSource::fallback;
                    trial.disk = detail::isolation_disk(sys, nr->root);
                    if (trial.disk.radius > 0.0)
                        detail::finish_certificate(sys, trial, opt);
                    e = trial;
                    if (e.certified)
                        break;
                }
            }
            rep.eigs.push_back(std::move(e));
        }
    }

    // Global checks.
    rep.min_separation = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < rep.eigs.size(); ++a)
        for (std::size_t b = a + 1; b < rep.eigs.size(); ++b)
            rep.min_separation = std::min(rep.min_separation, std::abs(rep.eigs[a].lambda - rep.eigs[b].lambda));
    const double rsum = coupling_series(sys).partial;
    for (std::size_t k = 1; k <= n; ++k) {
        const cplx up = rep.at(k, Half::upper).lambda, lo = rep.at(k, Half::lower).lambda;
        rep.symmetry_defect = std::max(rep.symmetry_defect, std::abs(up - std::conj(lo)));
    }
    for (const auto& e : rep.eigs) {
        double dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 1; j <= n; ++j) {
            const double w = sys.omega_at(j);
            dist = std::min({dist, std::abs(e.lambda - I * w), std::abs(e.lambda + I * w)});
        }
        const double radius = 0.5 * sys.gamma() * std::abs(e.lambda) * rsum;
        rep.enclosure_defect = std::max(rep.enclosure_defect, std::max(0.0, dist - radius));
    }
    for (const auto& e : rep.eigs)
        if (!e.certified)
            rep.failures.push_back("mode " + std::to_string(e.k) + " " + to_string(e.half) + ": " +
                                   (e.note.empty() ? "not certified" : e.note));
    if (n > 0 && rep.min_separation <= opt.distinct_tol && rep.eigs.size() > 1)
        rep.failures.push_back("two reported eigenvalues coincide");
    rep.complete = rep.failures.empty();
    return rep;
}

/// Eigenvalues of the real 2N x 2N error matrix by a dense Schur-based solver.
/// Independent of the characteristic-function path; capped at N <= 64.
inline std::vector<cplx> dense_oracle_spectrum(const SystemSpec& sys) {
    if (sys.size() > 64)
        throw invalid_argument("dense oracle is limited to N <= 64");
    Eigen::EigenSolver<Eigen::MatrixXd> es(assemble_real_generator(sys), false);
    if (es.info() != Eigen::Success)
        throw convergence_error("dense eigensolver failed");
    std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return v;
}

/// Minimum-cost perfect matching between two equal-size point sets (Hungarian algorithm
/// on |a_i - b_j|); returns the largest distance within the optimal matching.
inline double matching_distance(const std::vector<cplx>& a, const std::vector<cplx>& b) {
    if (a.size() != b.size())
        throw invalid_argument("matching requires equal-size sets");
    const std::size_t n = a.size();
    if (n == 0)
        return 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    // 1-based potentials formulation
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            const std::size_t i0 = p[j0];
            double delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j])
                    continue;
                const double cur = std::abs(a[i0 - 1] - b[j - 1]) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    double worst = 0.0;
    for (std::size_t j = 1; j <= n; ++j)
        worst = std::max(worst, std::abs(a[p[j] - 1] - b[j - 1]));
    return worst;
}

} // namespace polystab
