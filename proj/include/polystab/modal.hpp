#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "polystab/spectrum.hpp"
#include "polystab/state.hpp"

namespace polystab {

/// Eigenvector for eigenvalue lambda: q_j = -c_j/(i omega_j + lambda), p_j = c_j/(i omega_j - lambda),
/// scaled so the own component equals 1 (p_n for the upper root, q_n for the lower root).
inline StateVector eigenvector(const SystemSpec& sys, cplx lambda, std::size_t n, Half half,
                               double residual_tol = 1e-9) {
    if (n < 1 || n > sys.size())
        throw invalid_argument("mode index outside 1..N");
    StateVector v = StateVector::zero(sys.size());
    for (std::size_t j = 1; j <= sys.size(); ++j) {
        const double w = sys.omega_at(j), c = sys.c_at(j);
        const cplx dq = I * w + lambda, dp = I * w - lambda;
        if (std::abs(dq) <= detail::pole_guard(w) || std::abs(dp) <= detail::pole_guard(w))
            throw pole_error("eigenvector requested at a pole +-i omega_" + std::to_string(j));
        v.q(Eigen::Index(j - 1)) = -c / dq;
        v.p(Eigen::Index(j - 1)) = c / dp;
    }
    const double wn = sys.omega_at(n), cn = sys.c_at(n);
    const cplx scale = half == Half::upper ? (I * wn - lambda) / cn : -(I * wn + lambda) / cn;
    v.q *= scale;
    v.p *= scale;

    StateVector r = apply_generator(sys, v);
    r.q -= lambda * v.q;
    r.p -= lambda * v.p;
    if (r.norm() > residual_tol * v.norm())
        throw convergence_error("eigenvector residual too large: lambda is not an eigenvalue");
    return v;
}

/// Largest singular value of a linear map by power iteration on M^H M.
inline double power_norm(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                         const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply_adjoint,
                         Eigen::Index dim, double tol = 1e-8, int max_iters = 500) {
    Eigen::VectorXcd x = Eigen::VectorXcd::Ones(dim) / std::sqrt(double(dim));
    double est = 0.0;
    for (int it = 0; it < max_iters; ++it) {
        Eigen::VectorXcd y = apply_adjoint(apply(x));
        const double nrm = y.norm();
        if (nrm == 0.0)
            return 0.0;
        const double next = std::sqrt(nrm);
        x = y / nrm;
        if (std::abs(next - est) <= tol * next)
            return next;
        est = next;
    }
    return est;
}

/// Eigenvector basis, its comparison basis of canonical vectors and the factorization
/// A = Q G Q^{-1}. Columns of Q are ordered (eps_{-1}, ..., eps_{-N}, eps_1, ..., eps_N)
/// and G = diag(conj-side roots, upper roots) in the same order.
struct ModalBasis {
    std::vector<StateVector> lower; ///< eps_{-n}, n = 1..N
    std::vector<StateVector> upper; ///< eps_n
    Eigen::MatrixXcd Q;
    Eigen::VectorXcd G;
    Eigen::PartialPivLU<Eigen::MatrixXcd> lu;
    double beta1 = 0.0;  ///< ||Q||
    double beta2 = 0.0;  ///< ||Q^{-1}||
    double cond_Q = 0.0;
    double factorization_residual = 0.0; ///< ||AQ - QG||_F / ||A||_F
    std::vector<double> increments;      ///< ||eps_n - e~_n||^2 + ||eps_{-n} - e~_{-n}||^2
    std::vector<double> closeness;       ///< partial sums of increments

    std::size_t size() const { return upper.size(); }
    double closeness_tail() const { return closeness.empty() ? 0.0 : closeness.back(); }
};

struct BasisOptions {
    double max_cond = 1e12;
    double residual_tol = 1e-8;
    Eigen::Index svd_limit = 128; ///< above this dimension norms come from power iteration
};

inline ModalBasis build_basis(const SystemSpec& sys, const SpectrumReport& spec, const BasisOptions& opt = {}) {
    if (!spec.complete)
        throw invalid_argument("modal basis needs a complete certified spectrum");
    const std::size_t n = sys.size();
    const Eigen::Index dim = Eigen::Index(2 * n);
    ModalBasis b;
    b.Q.resize(dim, dim);
    b.G.resize(dim);
    for (std::size_t k = 1; k <= n; ++k) {
        const cplx lo = spec.at(k, Half::lower).lambda, up = spec.at(k, Half::upper).lambda;
        b.lower.push_back(eigenvector(sys, lo, k, Half::lower));
        b.upper.push_back(eigenvector(sys, up, k, Half::upper));
        b.Q.col(Eigen::Index(k - 1)) = b.lower.back().flat();
        b.Q.col(Eigen::Index(n + k - 1)) = b.upper.back().flat();
        b.G(Eigen::Index(k - 1)) = lo;
        b.G(Eigen::Index(n + k - 1)) = up;
    }
    b.lu.compute(b.Q);

    if (dim <= opt.svd_limit) {
        Eigen::JacobiSVD<Eigen::MatrixXcd> svd(b.Q);
        const auto& sv = svd.singularValues();
        b.beta1 = sv(0);
        b.beta2 = sv(sv.size() - 1) > 0.0 ? 1.0 / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    } else {
        const Eigen::MatrixXcd& Q = b.Q;
        b.beta1 = power_norm([&](const Eigen::VectorXcd& x) { return Eigen::VectorXcd(Q * x); },
                             [&](const Eigen::VectorXcd& x) { return Eigen::VectorXcd(Q.adjoint() * x); }, dim);
        const Eigen::MatrixXcd Qh = Q.adjoint();
        Eigen::PartialPivLU<Eigen::MatrixXcd> luh(Qh);
        b.beta2 = power_norm([&](const Eigen::VectorXcd& x) { return Eigen::VectorXcd(b.lu.solve(x)); },
                             [&](const Eigen::VectorXcd& x) { return Eigen::VectorXcd(luh.solve(x)); }, dim);
    }
    b.cond_Q = b.beta1 * b.beta2;
    if (!std::isfinite(b.cond_Q) || b.cond_Q > opt.max_cond)
        throw singular_basis("eigenvector matrix is numerically singular (cond = " + std::to_string(b.cond_Q) + ")");

    const Eigen::MatrixXcd A = assemble_generator(sys);
    b.factorization_residual = (A * b.Q - b.Q * b.G.asDiagonal()).norm() / A.norm();
    if (b.factorization_residual > opt.residual_tol)
        throw convergence_error("factorization residual ||AQ - QG|| too large");

    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        Eigen::VectorXcd du = b.upper[k].flat(), dl = b.lower[k].flat();
        du(Eigen::Index(n + k)) -= 1.0; // e~_n: unit p-component
        dl(Eigen::Index(k)) -= 1.0;     // e~_{-n}: unit q-component
        const double inc = du.squaredNorm() + dl.squaredNorm();
        b.increments.push_back(inc);
        acc += inc;
        b.closeness.push_back(acc);
    }
    return b;
}

/// Coordinates upsilon = Q^{-1} eps in the eigenvector basis.
inline StateVector to_diagonal_coords(const ModalBasis& basis, const StateVector& eps) {
    if (eps.size() != basis.size())
        throw invalid_argument("state dimension does not match the basis");
    return StateVector::from_flat(basis.lu.solve(eps.flat()));
}

inline StateVector from_diagonal_coords(const ModalBasis& basis, const StateVector& ups) {
    return StateVector::from_flat(basis.Q * ups.flat());
}

/// Exact solution Q exp(G t) Q^{-1} eps0.
inline StateVector modal_solution(const ModalBasis& basis, const StateVector& eps0, double t) {
    Eigen::VectorXcd u = basis.lu.solve(eps0.flat());
    u.array() *= (basis.G.array() * t).exp();
    return StateVector::from_flat(basis.Q * u);
}

} // namespace polystab
