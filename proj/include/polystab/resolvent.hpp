#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/SVD>

#include "polystab/fit.hpp"
#include "polystab/spectrum.hpp"
#include "polystab/state.hpp"

namespace polystab {

namespace detail {

/// k with lambda == sign * i omega_k (within rounding), or nullopt.
inline std::optional<std::size_t> on_frequency(const SystemSpec& sys, cplx lambda, double sign) {
    for (std::size_t k = 1; k <= sys.size(); ++k) {
        const double w = sys.omega_at(k);
        if (std::abs(lambda - sign * I * w) <= pole_guard(w))
            return k;
    }
    return std::nullopt;
}

// lambda = i omega_k: the k-th p-equation degenerates into a constraint fixing phi.
inline StateVector resolvent_at_upper(const SystemSpec& sys, std::size_t k, const StateVector& rhs) {
    const Eigen::Index n = Eigen::Index(sys.size()), kk = Eigen::Index(k - 1);
    const cplx lambda = I * sys.omega_at(k);
    const double g = sys.gamma(), ck = sys.c_at(k);
    const cplx pk_hat = rhs.p(kk);
    StateVector out = StateVector::zero(sys.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = sys.omega()(j), c = sys.c()(j);
        out.q(j) = -(rhs.q(j) - (c / ck) * pk_hat) / (I * w + lambda);
        if (j != kk)
            out.p(j) = (rhs.p(j) - (c / ck) * pk_hat) / (I * w - lambda);
    }
    cplx s = sys.c().cast<cplx>().dot(out.q);
    for (Eigen::Index j = 0; j < n; ++j)
        if (j != kk)
            s += sys.c()(j) * out.p(j);
    out.p(kk) = -(2.0 / (g * ck) * pk_hat + s) / ck;
    return out;
}

// lambda = -i omega_k: mirror image, the k-th q-equation is the constraint.
inline StateVector resolvent_at_lower(const SystemSpec& sys, std::size_t k, const StateVector& rhs) {
    const Eigen::Index n = Eigen::Index(sys.size()), kk = Eigen::Index(k - 1);
    const cplx lambda = -I * sys.omega_at(k);
    const double g = sys.gamma(), ck = sys.c_at(k);
    const cplx qk_hat = rhs.q(kk);
    StateVector out = StateVector::zero(sys.size());
    for (Eigen::Index j = 0; j < n; ++j) {
        const double w = sys.omega()(j), c = sys.c()(j);
        if (j != kk)
            out.q(j) = -(rhs.q(j) - (c / ck) * qk_hat) / (I * w + lambda);
        out.p(j) = (rhs.p(j) - (c / ck) * qk_hat) / (I * w - lambda);
    }
    cplx s = sys.c().cast<cplx>().dot(out.p);
    for (Eigen::Index j = 0; j < n; ++j)
        if (j != kk)
            s += sys.c()(j) * out.q(j);
    out.q(kk) = -(2.0 / (g * ck) * qk_hat + s) / ck;
    return out;
}

} // namespace detail

/// Solves (A - lambda I) eps = rhs in closed form. For lambda off {+-i omega_j} the
/// coupling functional phi = sum c_j (q_j + p_j) is eliminated first; at lambda = +-i omega_k
/// the dedicated singular-case formulas are used.
inline StateVector apply_resolvent(const SystemSpec& sys, cplx lambda, const StateVector& rhs) {
    if (rhs.size() != sys.size())
        throw invalid_argument("state dimension does not match the system");
    if (std::abs(lambda) <= detail::pole_guard(0.0))
        throw spectrum_proximity("resolvent is not constructed at lambda = 0");
    if (auto k = detail::on_frequency(sys, lambda, 1.0))
        return detail::resolvent_at_upper(sys, *k, rhs);
    if (auto k = detail::on_frequency(sys, lambda, -1.0))
        return detail::resolvent_at_lower(sys, *k, rhs);

    const double g = sys.gamma();
    cplx coupling = 0.0, num = 0.0;
    for (std::size_t j = 1; j <= sys.size(); ++j) {
        const double w = sys.omega_at(j), c = sys.c_at(j);
        const cplx a = lambda - I * w, b = lambda + I * w;
        const Eigen::Index jj = Eigen::Index(j - 1);
        coupling += c * c / (a * b);
        // c/(omega^2+lambda^2) ((i omega - lambda) q_hat - (i omega + lambda) p_hat)
        num += c * (-rhs.q(jj) / b - rhs.p(jj) / a);
    }
    const cplx denom = 1.0 + g * lambda * coupling;
    if (std::abs(denom) < 1e-12)
        throw spectrum_proximity("lambda is numerically an eigenvalue (coupling denominator vanishes)");
    const cplx phi = num / denom;

    StateVector out = StateVector::zero(sys.size());
    for (std::size_t j = 1; j <= sys.size(); ++j) {
        const double w = sys.omega_at(j), c = sys.c_at(j);
        const Eigen::Index jj = Eigen::Index(j - 1);
        const cplx forcing = 0.5 * g * c * phi;
        out.q(jj) = -(forcing + rhs.q(jj)) / (I * w + lambda);
        out.p(jj) = (forcing + rhs.p(jj)) / (I * w - lambda);
    }
    return out;
}

/// ||(A - lambda I) eps - rhs||.
inline double resolvent_residual(const SystemSpec& sys, cplx lambda, const StateVector& eps,
                                 const StateVector& rhs) {
    StateVector r = apply_generator(sys, eps);
    r.q -= lambda * eps.q + rhs.q;
    r.p -= lambda * eps.p + rhs.p;
    return r.norm();
}

enum class NormMode { exact, diag };

/// sqrt(sup_j |conj(lambda_j) - lambda|^-2 + sup_j |lambda_j - lambda|^-2): the norm bound of the
/// resolvent of the diagonalized generator.
inline double diagonal_resolvent_bound(const SpectrumReport& spec, cplx lambda) {
    double lower = 0.0, upper = 0.0;
    for (const auto& e : spec.eigs) {
        if (e.half != Half::upper)
            continue;
        const double du = std::abs(e.lambda - lambda), dl = std::abs(std::conj(e.lambda) - lambda);
        if (du == 0.0 || dl == 0.0)
            throw spectrum_proximity("lambda coincides with an eigenvalue");
        upper = std::max(upper, 1.0 / (du * du));
        lower = std::max(lower, 1.0 / (dl * dl));
    }
    return std::sqrt(lower + upper);
}

/// Operator norm of the resolvent at lambda. `diag` needs a complete spectrum report;
/// `exact` takes the inverse of the smallest singular value of A - lambda I (N <= 64).
inline double resolvent_norm(const SystemSpec& sys, cplx lambda, NormMode mode,
                             const SpectrumReport* spec = nullptr) {
    if (mode == NormMode::diag) {
        if (spec == nullptr || !spec->complete)
            throw invalid_argument("diag resolvent norm requires a completed spectrum report");
        return diagonal_resolvent_bound(*spec, lambda);
    }
    if (sys.size() > 64)
        throw invalid_argument("exact resolvent norm is limited to N <= 64");
    Eigen::MatrixXcd a = assemble_generator(sys);
    a.diagonal().array() -= lambda;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    const double smin = svd.singularValues().minCoeff();
    if (smin <= 0.0)
        throw spectrum_proximity("A - lambda I is singular");
    return 1.0 / smin;
}

struct AxisSegment {
    std::size_t k;
    double s_lo;
    double s_hi;
    double sup;          ///< on [s_lo, s_hi]
    double sup_mirror;   ///< on [-s_hi, -s_lo]
    double star_bound;   ///< 2 sqrt(6) / |Re lambda*_{k+1}|
    bool bound_applies;  ///< separation certificates hold on k-1, k, k+1
    double center() const { return 0.5 * (s_lo + s_hi); }
};

struct AxisSample {
    double s;
    double norm_bound;
};

struct AxisScan {
    std::vector<AxisSegment> segments;
    std::vector<AxisSample> samples; ///< both mirror images, sorted by s
    LineFit alpha_fit;               ///< log(sup) against log(segment center)
};

/// Scans the diagonal resolvent bound over the segments
/// I_k = [(omega_{k-1}+omega_k)/2, (omega_k+omega_{k+1})/2] (and their mirror images),
/// takes per-segment suprema and fits their log-log growth in s.
inline AxisScan axis_scan(const SystemSpec& sys, const SpectrumReport& spec, std::size_t k_min,
                          std::size_t k_max, int pts_per_segment = 33) {
    if (!spec.complete)
        throw invalid_argument("axis scan needs a completed spectrum report");
    if (k_min < 2 || k_max > sys.size() - 1 || k_min >= k_max)
        throw invalid_argument("axis scan needs 2 <= k_min < k_max <= N-1");
    if (pts_per_segment < 2)
        throw invalid_argument("need at least two points per segment");

    auto separation = [&](std::size_t k) {
        const auto& loc = spec.localization.at(k - 1);
        return loc && loc->separation_ready() && spec.at(k, Half::upper).source == CertSource::rouche;
    };

    AxisScan scan;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        AxisSegment seg{};
        seg.k = k;
        seg.s_lo = 0.5 * (sys.omega_at(k - 1) + sys.omega_at(k));
        seg.s_hi = 0.5 * (sys.omega_at(k) + sys.omega_at(k + 1));
        std::vector<double> ss;
        for (int i = 0; i < pts_per_segment; ++i)
            ss.push_back(seg.s_lo + (seg.s_hi - seg.s_lo) * double(i) / double(pts_per_segment - 1));
        // The supremum is attained next to Im lambda_k.
        const double peak = spec.upper(k).imag();
        if (peak > seg.s_lo && peak < seg.s_hi)
            ss.push_back(peak);
        std::sort(ss.begin(), ss.end());
        for (double s : ss) {
            const double up = diagonal_resolvent_bound(spec, I * s);
            const double dn = diagonal_resolvent_bound(spec, -I * s);
            seg.sup = std::max(seg.sup, up);
            seg.sup_mirror = std::max(seg.sup_mirror, dn);
            scan.samples.push_back({s, up});
            scan.samples.push_back({-s, dn});
        }
        seg.star_bound = 2.0 * std::sqrt(6.0) / std::abs(lambda_star(CharContext(sys, k + 1)).real());
        seg.bound_applies = separation(k - 1) && separation(k) && separation(k + 1);
        scan.segments.push_back(seg);
    }
    std::sort(scan.samples.begin(), scan.samples.end(),
              [](const AxisSample& a, const AxisSample& b) { return a.s < b.s; });

    std::vector<double> x, y;
    for (const auto& seg : scan.segments) {
        x.push_back(std::log(seg.center()));
        y.push_back(std::log(seg.sup));
    }
    if (x.size() < 3)
        throw fit_error("axis fit needs at least 3 segments");
    scan.alpha_fit = fit_line(x, y);
    return scan;
}

} // namespace polystab
