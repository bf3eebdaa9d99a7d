#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "polystab/model.hpp"

namespace polystab {

/// Complex modal error state eps = (q; p), both of length N.
struct StateVector {
    Eigen::VectorXcd q;
    Eigen::VectorXcd p;

    StateVector() = default;
    StateVector(Eigen::VectorXcd q_, Eigen::VectorXcd p_) : q(std::move(q_)), p(std::move(p_)) {
        if (q.size() != p.size())
            throw invalid_argument("state halves differ in length");
    }

    static StateVector zero(std::size_t n) {
        return {Eigen::VectorXcd::Zero(Eigen::Index(n)), Eigen::VectorXcd::Zero(Eigen::Index(n))};
    }

    /// Stacked (q; p) of length 2N.
    Eigen::VectorXcd flat() const {
        Eigen::VectorXcd v(2 * q.size());
        v << q, p;
        return v;
    }

    static StateVector from_flat(const Eigen::VectorXcd& v) {
        if (v.size() % 2 != 0)
            throw invalid_argument("flat state must have even length");
        const Eigen::Index n = v.size() / 2;
        return {v.head(n), v.tail(n)};
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(q.size()); }

    /// Plain l2 x l2 norm.
    double norm() const { return std::sqrt(q.squaredNorm() + p.squaredNorm()); }
};

/// Real observation error e = (Delta; delta).
///
/// With q = Delta + i delta and p = Delta - i delta, |q_j|^2 + |p_j|^2 = 2(Delta_j^2 + delta_j^2),
/// so the complex norm is sqrt(2) times the real norm.
struct RealState {
    Eigen::VectorXd Delta;
    Eigen::VectorXd delta;

    StateVector to_complex() const {
        const Eigen::VectorXcd d = Delta.cast<cplx>();
        const Eigen::VectorXcd e = delta.cast<cplx>();
        return {d + I * e, d - I * e};
    }

    /// Inverse of to_complex: Delta = (q + p)/2, delta = (q - p)/(2i). Imaginary parts,
    /// nonzero only for states outside the real subspace, are discarded.
    static RealState from_complex(const StateVector& s) {
        return {((s.q + s.p) * 0.5).real(), ((s.q - s.p) / (2.0 * I)).real()};
    }

    Eigen::VectorXd flat() const {
        Eigen::VectorXd v(2 * Delta.size());
        v << Delta, delta;
        return v;
    }

    double norm() const { return std::sqrt(Delta.squaredNorm() + delta.squaredNorm()); }
};

inline constexpr double complex_to_real_norm_factor = 1.4142135623730951; // sqrt(2)

/// eps -> A eps without forming the rank-one blocks:
/// phi = sum c_j (q_j + p_j), (A eps)_q = -i omega q - (gamma/2) c phi, (A eps)_p = i omega p - (gamma/2) c phi.
inline StateVector apply_generator(const SystemSpec& sys, const StateVector& eps) {
    if (eps.size() != sys.size())
        throw invalid_argument("state dimension does not match the system");
    const Eigen::VectorXcd c = sys.c().cast<cplx>();
    const Eigen::VectorXcd w = sys.omega().cast<cplx>();
    const cplx phi = c.dot(eps.q + eps.p); // dot() conjugates its left operand; c is real
    const Eigen::VectorXcd damp = (0.5 * sys.gamma()) * phi * c;
    return {(-I * w.array() * eps.q.array()).matrix() - damp,
            (I * w.array() * eps.p.array()).matrix() - damp};
}

/// Dense 2N x 2N complex generator A = [[-i Omega + Ac, Ac], [Ac, i Omega + Ac]], Ac = -(gamma/2) c c^T.
inline Eigen::MatrixXcd assemble_generator(const SystemSpec& sys) {
    const Eigen::Index n = Eigen::Index(sys.size());
    const Eigen::MatrixXcd ac = (-0.5 * sys.gamma() * sys.c() * sys.c().transpose()).cast<cplx>();
    Eigen::MatrixXcd a(2 * n, 2 * n);
    a << ac, ac, ac, ac;
    for (Eigen::Index j = 0; j < n; ++j) {
        a(j, j) += -I * sys.omega()(j);
        a(n + j, n + j) += I * sys.omega()(j);
    }
    return a;
}

/// Dense real error generator [[-gamma c c^T, Omega], [-Omega, 0]].
inline Eigen::MatrixXd assemble_real_generator(const SystemSpec& sys) {
    const Eigen::Index n = Eigen::Index(sys.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    a.topLeftCorner(n, n) = -sys.gamma() * sys.c() * sys.c().transpose();
    a.topRightCorner(n, n) = sys.omega().asDiagonal();
    a.bottomLeftCorner(n, n) = -Eigen::MatrixXd(sys.omega().asDiagonal());
    return a;
}

/// e -> A_hat e in O(N).
inline RealState apply_real_generator(const SystemSpec& sys, const RealState& e) {
    const double y = sys.c().dot(e.Delta);
    return {(-sys.gamma() * y) * sys.c() + sys.omega().cwiseProduct(e.delta),
            -sys.omega().cwiseProduct(e.Delta)};
}

} // namespace polystab
