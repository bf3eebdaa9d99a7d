#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "polystab/error.hpp"

namespace polystab {

using cplx = std::complex<double>;
inline constexpr cplx I{0.0, 1.0};

/// Parameters of the flexible-beam family: omega_j = theta * j^2, c_j = sigma / j.
struct BeamParams {
    double theta;
    double sigma;
};

/// Truncated modal system: gain gamma, strictly increasing frequencies omega_j > 0
/// and nonzero output coefficients c_j, j = 1..N.
///
/// Vectors are stored 0-based; functions taking a mode index `k` use the 1-based
/// convention of the modal expansion and document it.
class SystemSpec {
public:
    SystemSpec(double gamma, Eigen::VectorXd omega, Eigen::VectorXd c,
               std::optional<BeamParams> beam = std::nullopt)
        : gamma_(gamma), omega_(std::move(omega)), c_(std::move(c)), beam_(beam) {
        validate();
    }

    double gamma() const noexcept { return gamma_; }
    std::size_t size() const noexcept { return static_cast<std::size_t>(omega_.size()); }
    const Eigen::VectorXd& omega() const noexcept { return omega_; }
    const Eigen::VectorXd& c() const noexcept { return c_; }

    /// omega_k for the 1-based mode index k.
    double omega_at(std::size_t k) const { return omega_(index(k)); }
    /// c_k for the 1-based mode index k.
    double c_at(std::size_t k) const { return c_(index(k)); }

    /// Set when the system came from beam_example; enables closed-form tail bounds.
    const std::optional<BeamParams>& beam() const noexcept { return beam_; }

    bool operator==(const SystemSpec& o) const {
        return gamma_ == o.gamma_ && omega_ == o.omega_ && c_ == o.c_ &&
               beam_.has_value() == o.beam_.has_value() &&
               (!beam_ || (beam_->theta == o.beam_->theta && beam_->sigma == o.beam_->sigma));
    }

private:
    Eigen::Index index(std::size_t k) const {
        if (k < 1 || k > size())
            throw invalid_argument("mode index " + std::to_string(k) + " outside 1.." +
                                   std::to_string(size()));
        return static_cast<Eigen::Index>(k - 1);
    }

    void validate() const {
        if (!(gamma_ > 0.0) || !std::isfinite(gamma_))
            throw invalid_system("gain gamma must be positive and finite");
        if (omega_.size() == 0)
            throw invalid_system("system needs at least one mode");
        if (omega_.size() != c_.size())
            throw invalid_system("omega and c sequences differ in length");
        for (Eigen::Index j = 0; j < omega_.size(); ++j) {
            if (!std::isfinite(omega_(j)) || !std::isfinite(c_(j)))
                throw invalid_system("non-finite mode data at j=" + std::to_string(j + 1));
            if (!(omega_(j) > 0.0))
                throw invalid_system("omega_" + std::to_string(j + 1) + " must be positive");
            if (c_(j) == 0.0)
                throw invalid_system("zero output coefficient c_" + std::to_string(j + 1));
            if (j > 0 && !(omega_(j) > omega_(j - 1)))
                throw invalid_system("frequencies must be strictly increasing (repeated or "
                                     "decreasing omega at j=" + std::to_string(j + 1) + ")");
        }
    }

    double gamma_;
    Eigen::VectorXd omega_;
    Eigen::VectorXd c_;
    std::optional<BeamParams> beam_;
};

inline SystemSpec build_system(double gamma, const std::vector<double>& omegas,
                               const std::vector<double>& cs) {
    if (omegas.size() != cs.size())
        throw invalid_system("omega and c sequences differ in length");
    Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(omegas.data(), Eigen::Index(omegas.size()));
    Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(cs.data(), Eigen::Index(cs.size()));
    return SystemSpec(gamma, std::move(w), std::move(c));
}

/// omega_j = theta j^2, c_j = sigma / j for j = 1..n.
inline SystemSpec beam_example(double theta, double sigma, long n, double gamma = 1.0) {
    if (!(theta > 0.0) || !(sigma > 0.0))
        throw invalid_system("beam parameters theta and sigma must be positive");
    if (n < 1)
        throw invalid_system("truncation order must be at least 1");
    Eigen::VectorXd w(n), c(n);
    for (long j = 1; j <= n; ++j) {
        w(j - 1) = theta * double(j) * double(j);
        c(j - 1) = sigma / double(j);
    }
    return SystemSpec(gamma, std::move(w), std::move(c), BeamParams{theta, sigma});
}

/// Partial sum of c_j^2 / omega_j with an upper bound on the omitted tail when the
/// generator makes it available (beam: sigma^2/theta * sum_{j>N} j^-4 <= sigma^2/(3 theta N^3)).
struct SeriesSum {
    double partial;
    std::optional<double> tail_bound;
};

inline SeriesSum coupling_series(const SystemSpec& sys) {
    double s = 0.0;
    for (std::size_t j = 0; j < sys.size(); ++j)
        s += sys.c()(Eigen::Index(j)) * sys.c()(Eigen::Index(j)) / sys.omega()(Eigen::Index(j));
    std::optional<double> tail;
    if (sys.beam()) {
        const double n = double(sys.size());
        tail = sys.beam()->sigma * sys.beam()->sigma / (3.0 * sys.beam()->theta * n * n * n);
    }
    return {s, tail};
}

/// Radius (gamma/2)|lambda| sum_j c_j^2/omega_j of the disks around +-i omega_j that
/// must contain every eigenvalue (truncated sum).
inline double enclosure_radius(const SystemSpec& sys, cplx lambda) {
    return 0.5 * sys.gamma() * std::abs(lambda) * coupling_series(sys).partial;
}

/// Outcome of checking the gap and coefficient-decay assumptions on the truncated system.
/// The decay check is necessarily finite-range: it certifies k0 <= k <= N only.
struct AssumptionCertificate {
    double kappa;                ///< min_j (omega_{j+1} - omega_j); +inf when N = 1
    std::optional<double> alpha; ///< smallest grid alpha satisfying the decay bound, if any
    double beta;
    std::size_t k0;
    bool holds_A2;
    bool holds_A3;
};

/// alpha grid {0.1, 0.2, ..., 8.0}.
inline std::vector<double> alpha_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 80; ++i)
        g.push_back(double(i) / 10.0);
    return g;
}

inline AssumptionCertificate certify_assumptions(const SystemSpec& sys, double beta,
                                                 std::size_t k0 = 2) {
    if (!(beta > 0.0))
        throw invalid_argument("beta must be positive");
    if (k0 < 1 || k0 > sys.size())
        throw invalid_argument("k0 must lie in 1..N");

    double kappa = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < sys.size(); ++j)
        kappa = std::min(kappa, sys.omega()(Eigen::Index(j)) - sys.omega()(Eigen::Index(j - 1)));

    // Relative slack absorbs rounding in |c_k| omega_k^{alpha/2}, e.g. (1/49)*49 < 1.
    constexpr double slack = 1e-12;
    std::optional<double> alpha;
    for (double a : alpha_grid()) {
        bool ok = true;
        for (std::size_t k = k0; k <= sys.size() && ok; ++k)
            ok = std::abs(sys.c_at(k)) * std::pow(sys.omega_at(k), 0.5 * a) >= beta * (1.0 - slack);
        if (ok) {
            alpha = a;
            break;
        }
    }
    return {kappa, alpha, beta, k0, kappa > 0.0, alpha.has_value()};
}

} // namespace polystab
