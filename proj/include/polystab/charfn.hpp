#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include "polystab/model.hpp"

namespace polystab {

namespace detail {

inline double pole_guard(double scale) { return 1e-15 * std::max(1.0, scale); }

inline void check_not_pole(const SystemSpec& sys, cplx lambda, std::optional<std::size_t> skip_upper = {}) {
    if (std::abs(lambda) <= pole_guard(0.0))
        throw pole_error("characteristic function has a pole at lambda = 0");
    for (std::size_t k = 1; k <= sys.size(); ++k) {
        const double w = sys.omega_at(k);
        if (std::abs(lambda + I * w) <= pole_guard(w))
            throw pole_error("pole at -i omega_" + std::to_string(k));
        if (skip_upper != k && std::abs(lambda - I * w) <= pole_guard(w))
            throw pole_error("pole at i omega_" + std::to_string(k));
    }
}

/// Distance from lambda to the nearest singularity of f: {0, +-i omega_j}.
inline double distance_to_poles(const SystemSpec& sys, cplx lambda) {
    double d = std::abs(lambda);
    for (std::size_t k = 1; k <= sys.size(); ++k) {
        const double w = sys.omega_at(k);
        d = std::min({d, std::abs(lambda - I * w), std::abs(lambda + I * w)});
    }
    return d;
}

} // namespace detail

/// Characteristic function
///   f(lambda) = sum_j (c_j^2/omega_j) (1/(lambda - i omega_j) - 1/(lambda + i omega_j)) + 2i/(gamma lambda),
/// whose zeros are the eigenvalues of the error generator. Summed in index order.
inline cplx eval_f(const SystemSpec& sys, cplx lambda) {
    detail::check_not_pole(sys, lambda);
    cplx s = 0.0;
    for (std::size_t k = 1; k <= sys.size(); ++k) {
        const double w = sys.omega_at(k), c = sys.c_at(k);
        s += (c * c / w) * (1.0 / (lambda - I * w) - 1.0 / (lambda + I * w));
    }
    return s + 2.0 * I / (sys.gamma() * lambda);
}

/// Same function in the form 2i [sum_j c_j^2/(omega_j^2 + lambda^2) + 1/(gamma lambda)].
inline cplx eval_f_rational(const SystemSpec& sys, cplx lambda) {
    detail::check_not_pole(sys, lambda);
    cplx s = 0.0;
    for (std::size_t k = 1; k <= sys.size(); ++k) {
        const double w = sys.omega_at(k), c = sys.c_at(k);
        s += c * c / (w * w + lambda * lambda);
    }
    return 2.0 * I * (s + 1.0 / (sys.gamma() * lambda));
}

inline cplx eval_df(const SystemSpec& sys, cplx lambda) {
    detail::check_not_pole(sys, lambda);
    cplx s = 0.0;
    for (std::size_t k = 1; k <= sys.size(); ++k) {
        const double w = sys.omega_at(k), c = sys.c_at(k);
        const cplx a = lambda - I * w, b = lambda + I * w;
        s += (c * c / w) * (1.0 / (b * b) - 1.0 / (a * a));
    }
    return s - 2.0 * I / (sys.gamma() * lambda * lambda);
}

/// Expansion center i omega_k for the 1-based mode k.
struct CharContext {
    const SystemSpec& sys;
    std::size_t k;

    CharContext(const SystemSpec& s, std::size_t mode) : sys(s), k(mode) {
        if (k < 1 || k > sys.size())
            throw invalid_argument("mode index outside 1..N");
    }

    double omega() const { return sys.omega_at(k); }
    double c() const { return sys.c_at(k); }
    cplx center() const { return I * omega(); }
};

/// F(lambda) = (lambda - i omega_k) f(lambda) with the k-th pole divided out,
/// so F is analytic at i omega_k.
inline cplx eval_F(const CharContext& ctx, cplx lambda) {
    const SystemSpec& sys = ctx.sys;
    detail::check_not_pole(sys, lambda, ctx.k);
    const cplx u = lambda - ctx.center();
    cplx s = 0.0;
    for (std::size_t j = 1; j <= sys.size(); ++j) {
        if (j == ctx.k)
            continue;
        const double w = sys.omega_at(j), c = sys.c_at(j);
        s += (c * c / w) * (1.0 / (lambda - I * w) - 1.0 / (lambda + I * w));
    }
    s += 2.0 * I / (sys.gamma() * lambda);
    return u * s + 2.0 * I * ctx.c() * ctx.c() / (lambda + ctx.center());
}

/// F(i omega_k) = c_k^2 / omega_k.
inline cplx F_at_center(const CharContext& ctx) { return ctx.c() * ctx.c() / ctx.omega(); }

/// sum_{j != k} c_j^2/(omega_j^2 - omega_k^2), the real coupling sum of mode k.
inline double off_mode_sum(const CharContext& ctx) {
    const double wk = ctx.omega();
    double s = 0.0;
    for (std::size_t j = 1; j <= ctx.sys.size(); ++j) {
        if (j == ctx.k)
            continue;
        const double w = ctx.sys.omega_at(j), c = ctx.sys.c_at(j);
        s += c * c / ((w - wk) * (w + wk));
    }
    return s;
}

/// F'(i omega_k) = 2i sum_{j!=k} c_j^2/(omega_j^2 - omega_k^2) + i c_k^2/(2 omega_k^2) + 2/(gamma omega_k).
inline cplx dF_at_center(const CharContext& ctx) {
    const double wk = ctx.omega(), ck = ctx.c();
    const double im = 2.0 * off_mode_sum(ctx) + ck * ck / (2.0 * wk * wk);
    return {2.0 / (ctx.sys.gamma() * wk), im};
}

/// Root of the linearization g(lambda) = F(i omega_k) + (lambda - i omega_k) F'(i omega_k):
/// the first-order eigenvalue prediction for mode k.
inline cplx lambda_star(const CharContext& ctx) {
    return -F_at_center(ctx) / dF_at_center(ctx) + ctx.center();
}

/// Real and imaginary parts of lambda_k* in closed form. With
/// S = 2 sum_{j!=k} c_j^2/(omega_j^2-omega_k^2) + c_k^2/(2 omega_k^2):
///   Re = -2 gamma c_k^2 / (4 + gamma^2 omega_k^2 S^2),
///   Im = omega_k + (c_k^2/omega_k) S / (4/(gamma^2 omega_k^2) + S^2).
/// The sign of Re is the one obtained by expanding the definition above.
inline cplx lambda_star_closed_form(const CharContext& ctx) {
    const double g = ctx.sys.gamma(), wk = ctx.omega(), ck2 = ctx.c() * ctx.c();
    const double S = 2.0 * off_mode_sum(ctx) + ck2 / (2.0 * wk * wk);
    const double re = -2.0 * g * ck2 / (4.0 + g * g * wk * wk * S * S);
    const double im = wk + (ck2 / wk) * S / (4.0 / (g * g * wk * wk) + S * S);
    return {re, im};
}

/// Radius of the largest disk around i omega_k free of other singularities of f:
/// min(omega_k - omega_{k-1}, omega_{k+1} - omega_k, omega_k), boundary terms dropped.
inline double expansion_radius(const CharContext& ctx) {
    double r = ctx.omega();
    if (ctx.k > 1)
        r = std::min(r, ctx.omega() - ctx.sys.omega_at(ctx.k - 1));
    if (ctx.k < ctx.sys.size())
        r = std::min(r, ctx.sys.omega_at(ctx.k + 1) - ctx.omega());
    return r;
}

/// rho(lambda) = (F(lambda) - F(i omega_k) - (lambda - i omega_k) F'(i omega_k)) / (lambda - i omega_k)^2.
inline cplx eval_rho(const CharContext& ctx, cplx lambda) {
    const cplx u = lambda - ctx.center();
    return (eval_F(ctx, lambda) - F_at_center(ctx) - u * dF_at_center(ctx)) / (u * u);
}

/// Sampled estimate of sup |rho| over the closed disk |lambda - i omega_k| <= R1: by the
/// maximum principle the sup sits on the boundary circle, sampled at `samples` equispaced
/// points and scaled by `safety`.
inline double estimate_M(const CharContext& ctx, double R1, int samples = 256, double safety = 1.25) {
    const double R0 = expansion_radius(ctx);
    if (!(R1 > 0.0) || !(R1 < R0))
        throw invalid_argument("R1 must satisfy 0 < R1 < R0 = " + std::to_string(R0));
    if (samples < 8)
        throw invalid_argument("need at least 8 boundary samples");
    double m = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = 2.0 * std::numbers::pi * double(i) / double(samples);
        m = std::max(m, std::abs(eval_rho(ctx, ctx.center() + R1 * std::polar(1.0, t))));
    }
    return safety * m;
}

struct MEstimateOptions {
    int initial_samples = 256;
    int max_samples = 4096;
    double safety = 1.25;
    double rel_change = 0.02;
};

/// estimate_M with sample doubling until two successive estimates differ by < rel_change.
inline double estimate_M_refined(const CharContext& ctx, double R1, const MEstimateOptions& opt = {}) {
    int n = opt.initial_samples;
    double m = estimate_M(ctx, R1, n, opt.safety);
    while (n < opt.max_samples) {
        n *= 2;
        const double next = estimate_M(ctx, R1, n, opt.safety);
        const bool settled = std::abs(next - m) <= opt.rel_change * std::max(next, m);
        m = next;
        if (settled)
            break;
    }
    return m;
}

/// Rouche enclosure data for one mode.
struct LocalizationCertificate {
    std::size_t k = 0;
    cplx lambda_star;
    cplx F0;
    cplx F1;
    double M = 0.0;
    double R0 = 0.0;
    double R1 = 0.0;
    double b = 0.0;
    double c_const = 0.0;
    double Rk = 0.0;
    double theta_frac = 0.5;
    bool cond_Mneq1 = false;   ///< 0 < M < |F1|^2 / (4|F0|)
    bool cond_Mneq2 = false;   ///< M < gamma omega_k |F1|^3 / (c_k^2 (gamma omega_k |F1| + 1)^2)
    bool interval_ok = false;  ///< sqrt(Rk) inside (b - sqrt(b^2-c), b + sqrt(b^2-c))
    bool separated = false;    ///< Rk <= theta |Re lambda_k*|
    bool inside_gamma1 = false;///< closure of the disk lies in |lambda - i omega_k| <= R1
    bool omega_gt_one = false;
    bool half_re_below_b2 = false; ///< (1/2)|Re lambda_k*| < b^2
    double gain_product = 0.0;     ///< gamma omega_k |F1|, always > 1

    /// Every hypothesis of the one-zero enclosure holds.
    bool rouche_ready() const { return cond_Mneq1 && interval_ok && inside_gamma1; }
    /// Separation hypotheses: the disk stays clear of the imaginary axis.
    bool separation_ready() const { return rouche_ready() && cond_Mneq2 && separated && omega_gt_one; }
    cplx disk_center() const { return lambda_star; }
};

struct LocalizeOptions {
    double r1_fraction = 0.9;
    MEstimateOptions m_estimate{};
};

/// Computes the enclosure disk around lambda_k* and reports which hypotheses hold.
/// Failed conditions are reported through flags; the only hard error is an empty
/// radius interval (b^2 <= c).
inline LocalizationCertificate localize(const CharContext& ctx, double theta_frac = 0.5,
                                        const LocalizeOptions& opt = {}) {
    if (!(theta_frac > 0.0 && theta_frac < 1.0))
        throw invalid_argument("theta_frac must lie in (0, 1)");
    LocalizationCertificate cert;
    cert.k = ctx.k;
    cert.theta_frac = theta_frac;
    cert.F0 = F_at_center(ctx);
    cert.F1 = dF_at_center(ctx);
    cert.lambda_star = lambda_star(ctx);
    cert.R0 = expansion_radius(ctx);
    cert.R1 = opt.r1_fraction * cert.R0;
    cert.M = estimate_M_refined(ctx, cert.R1, opt.m_estimate);

    const double g = ctx.sys.gamma(), wk = ctx.omega(), ck2 = ctx.c() * ctx.c();
    const double f1 = std::abs(cert.F1), f0 = std::abs(cert.F0);
    cert.gain_product = g * wk * f1;
    cert.omega_gt_one = wk > 1.0;
    cert.cond_Mneq1 = cert.M > 0.0 && cert.M < f1 * f1 / (4.0 * f0);
    cert.cond_Mneq2 = cert.M < g * wk * f1 * f1 * f1 / (ck2 * (g * wk * f1 + 1.0) * (g * wk * f1 + 1.0));
    cert.b = std::sqrt(f1 / (4.0 * cert.M));
    cert.c_const = f0 / f1;

    const double b2 = cert.b * cert.b;
    const double half_re = std::abs(cert.lambda_star.real());
    cert.half_re_below_b2 = 0.5 * half_re < b2;
    if (!(b2 > cert.c_const))
        throw empty_interval("mode " + std::to_string(ctx.k) +
                             ": b^2 <= c, the Rouche radius interval is empty");

    const double d = std::sqrt(b2 - cert.c_const);
    const double lo = (cert.b - d) * (cert.b - d), hi = (cert.b + d) * (cert.b + d);
    const double target = theta_frac * half_re;
    const double rk = std::min(target, 0.25 * (cert.b + d) * (cert.b + d));
    if (rk > lo && rk < hi) {
        cert.Rk = rk;
        cert.interval_ok = true;
        cert.separated = rk <= target;
    } else {
        // No admissible radius keeps the disk separated from the axis.
        cert.Rk = target;
        cert.interval_ok = false;
        cert.separated = false;
    }
    cert.inside_gamma1 = cert.c_const + cert.Rk <= cert.R1;
    return cert;
}

/// Samples the contour |lambda - lambda_k*| = Rk and checks |r| < |g| with
/// g(lambda) = F1 (lambda - lambda_k*) and r = F - g.
inline bool rouche_hypothesis_sampled(const CharContext& ctx, const LocalizationCertificate& cert,
                                      int samples = 64) {
    for (int i = 0; i < samples; ++i) {
        const double t = 2.0 * std::numbers::pi * double(i) / double(samples);
        const cplx lam = cert.lambda_star + cert.Rk * std::polar(1.0, t);
        const cplx g = cert.F1 * (lam - cert.lambda_star);
        const cplx r = eval_F(ctx, lam) - g;
        if (!(std::abs(r) < std::abs(g)))
            return false;
    }
    return true;
}

} // namespace polystab
