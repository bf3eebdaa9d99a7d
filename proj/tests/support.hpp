#pragma once

// Independent reference computations and random generators shared by the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <random>
#include <vector>

#include "polystab/polystab.hpp"

namespace oracle {

using polystab::cplx;
using lcplx = std::complex<long double>;

/// f(lambda) summed term by term in long double.
inline cplx char_fn(const polystab::SystemSpec& sys, cplx lambda) {
    const lcplx l(lambda.real(), lambda.imag()), i(0.0L, 1.0L);
    lcplx s = 0.0L;
    for (std::size_t k = 1; k <= sys.size(); ++k) {
        const long double w = sys.omega_at(k), c = sys.c_at(k);
        s += (c * c / w) * (1.0L / (l - i * w) - 1.0L / (l + i * w));
    }
    s += 2.0L * i / ((long double)sys.gamma() * l);
    return {double(s.real()), double(s.imag())};
}

/// Roots of lambda^2 + gamma c^2 lambda + omega^2 = 0, upper root first.
inline std::array<cplx, 2> single_mode_roots(double gamma, double omega, double c) {
    const cplx b = gamma * c * c;
    const cplx disc = std::sqrt(b * b - 4.0 * omega * omega);
    cplx r1 = 0.5 * (-b + disc), r2 = 0.5 * (-b - disc);
    if (r1.imag() < r2.imag())
        std::swap(r1, r2);
    return {r1, r2};
}

/// exp(M t) for a real 2x2 matrix with distinct eigenvalues, by Sylvester's formula.
inline Eigen::Matrix2cd expm2(const Eigen::Matrix2d& m, double t) {
    const double tr = m.trace(), det = m.determinant();
    const cplx disc = std::sqrt(cplx(tr * tr - 4.0 * det));
    const cplx m1 = 0.5 * (tr + disc), m2 = 0.5 * (tr - disc);
    const Eigen::Matrix2cd mc = m.cast<cplx>(), id = Eigen::Matrix2cd::Identity();
    return (m1 * std::exp(m2 * t) - m2 * std::exp(m1 * t)) / (m1 - m2) * id +
           (std::exp(m1 * t) - std::exp(m2 * t)) / (m1 - m2) * mc;
}

/// Central finite difference of a complex function.
template <class Fn>
cplx derivative(Fn&& fn, cplx z, double h = 1e-5) {
    return (fn(z + h) - fn(z - h)) / (2.0 * h);
}

} // namespace oracle

namespace gen {

/// Random admissible system: N modes with gaps in [1, 4], c_j = +-[0.2, 1.5], gamma in [0.2, 2].
inline polystab::SystemSpec random_system(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> gap(1.0, 4.0), mag(0.2, 1.5), gam(0.2, 2.0);
    std::bernoulli_distribution sign(0.5);
    std::vector<double> w, c;
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        acc += gap(rng);
        w.push_back(acc);
        c.push_back(sign(rng) ? mag(rng) : -mag(rng));
    }
    return polystab::build_system(gam(rng), w, c);
}

inline polystab::StateVector random_state(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<double> d;
    polystab::StateVector s = polystab::StateVector::zero(n);
    for (std::size_t j = 0; j < n; ++j) {
        s.q(Eigen::Index(j)) = {d(rng), d(rng)};
        s.p(Eigen::Index(j)) = {d(rng), d(rng)};
    }
    return s;
}

inline polystab::cplx random_point(std::mt19937_64& rng, double scale) {
    std::uniform_real_distribution<double> u(-scale, scale);
    return {u(rng), u(rng)};
}

} // namespace gen
