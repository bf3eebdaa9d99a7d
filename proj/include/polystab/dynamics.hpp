#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "polystab/fit.hpp"
#include "polystab/integrator.hpp"
#include "polystab/modal.hpp"
#include "polystab/spectrum.hpp"
#include "polystab/state.hpp"

namespace polystab {

struct SimulationOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double omega_dt_limit = 0.5; ///< max omega_N * dt
    bool keep_states = false;
    double cross_check_tol = 1e-6;
};

struct TrajectoryPoint {
    double t;
    double norm;
};

struct Trajectory {
    std::vector<TrajectoryPoint> points;
    std::vector<StateVector> states;           ///< filled when keep_states is set
    std::optional<double> modal_defect;        ///< relative gap to Q e^{Gt} Q^{-1} eps0 at the final time
    bool cross_validated = false;
    long steps = 0;
};

namespace detail {

inline void check_grid(const std::vector<double>& t_grid) {
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw invalid_argument("time grid must start at t = 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (!(t_grid[i] > t_grid[i - 1]))
            throw invalid_argument("time grid must be strictly increasing");
}

inline IntegratorOptions integrator_options(const SystemSpec& sys, const SimulationOptions& opt) {
    IntegratorOptions io;
    io.rtol = opt.rtol;
    io.atol = opt.atol;
    io.max_step = opt.omega_dt_limit / sys.omega()(Eigen::Index(sys.size() - 1));
    return io;
}

} // namespace detail

/// Integrates d eps/dt = A eps on t_grid with the embedded 5(4) pair. When a basis is
/// given the final state is compared with the modal solution.
inline Trajectory simulate_error(const SystemSpec& sys, const StateVector& eps0, const std::vector<double>& t_grid,
                                 const SimulationOptions& opt = {}, const ModalBasis* basis = nullptr) {
    detail::check_grid(t_grid);
    if (eps0.size() != sys.size())
        throw invalid_argument("state dimension does not match the system");
    const Eigen::Index n = Eigen::Index(sys.size());
    Dopri5<Eigen::VectorXcd> stepper(
        [&sys, n](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dy) {
            const cplx phi = sys.c().cast<cplx>().dot(y.head(n) + y.tail(n));
            const double half_gamma = 0.5 * sys.gamma();
            for (Eigen::Index j = 0; j < n; ++j) {
                const double w = sys.omega()(j);
                const cplx d = half_gamma * sys.c()(j) * phi;
                dy(j) = -I * w * y(j) - d;
                dy(n + j) = I * w * y(n + j) - d;
            }
        },
        detail::integrator_options(sys, opt));
    const auto ys = stepper.integrate(eps0.flat(), t_grid);

    Trajectory tr;
    tr.steps = stepper.steps();
    for (std::size_t i = 0; i < ys.size(); ++i) {
        tr.points.push_back({t_grid[i], ys[i].norm()});
        if (opt.keep_states)
            tr.states.push_back(StateVector::from_flat(ys[i]));
    }
    if (basis != nullptr) {
        const StateVector exact = modal_solution(*basis, eps0, t_grid.back());
        const double ref = exact.norm();
        tr.modal_defect = (ys.back() - exact.flat()).norm() / (ref > 0.0 ? ref : 1.0);
        tr.cross_validated = *tr.modal_defect <= opt.cross_check_tol;
    }
    return tr;
}

/// Same dynamics in real coordinates, d e/dt = A_hat e. Returns ||e(t)||.
inline std::vector<TrajectoryPoint> simulate_error_real(const SystemSpec& sys, const RealState& e0,
                                                        const std::vector<double>& t_grid,
                                                        const SimulationOptions& opt = {}) {
    detail::check_grid(t_grid);
    const Eigen::Index n = Eigen::Index(sys.size());
    Dopri5<Eigen::VectorXd> stepper(
        [&sys, n](double, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
            const double out = sys.c().dot(y.head(n));
            dy.head(n) = -sys.gamma() * out * sys.c() + sys.omega().cwiseProduct(y.tail(n));
            dy.tail(n) = -sys.omega().cwiseProduct(y.head(n));
        },
        detail::integrator_options(sys, opt));
    const auto ys = stepper.integrate(e0.flat(), t_grid);
    std::vector<TrajectoryPoint> pts;
    for (std::size_t i = 0; i < ys.size(); ++i)
        pts.push_back({t_grid[i], ys[i].norm()});
    return pts;
}

/// Plant, actuator matrix and control signal for the plant/observer co-simulation.
/// The observer gain is fixed by the system: f_j = gamma c_j, g_j = 0.
struct ObserverSetup {
    SystemSpec sys;
    Eigen::MatrixXd B1;                                ///< N x (m+1)
    std::function<Eigen::VectorXd(double)> u;          ///< control, length m+1
};

struct ObserverPoint {
    double t;
    double error_norm;
    double plant_norm;
};

/// Co-integrates the plant  xi' = Omega eta, eta' = -Omega xi + B1 u  and the observer
///   xi~' = Omega eta~ - gamma c (c.xi~) + gamma c y,  eta~' = -Omega xi~ + B1 u,  y = c.xi.
/// Step control acts on the error e = z - z~ only, so the accepted steps match those
/// of simulate_error_real for the same initial error.
inline std::vector<ObserverPoint> simulate_observer(const ObserverSetup& setup, const RealState& z0,
                                                    const RealState& zt0, const std::vector<double>& t_grid,
                                                    const SimulationOptions& opt = {}) {
    detail::check_grid(t_grid);
    const SystemSpec& sys = setup.sys;
    const Eigen::Index n = Eigen::Index(sys.size());
    if (setup.B1.rows() != n || z0.Delta.size() != n || zt0.Delta.size() != n)
        throw invalid_argument("observer setup dimensions are inconsistent");
    if (!setup.u)
        throw invalid_argument("observer setup needs a control signal");

    // state = (xi, eta, xi~, eta~)
    auto rhs = [&sys, &setup, n](double t, const Eigen::VectorXd& y, Eigen::VectorXd& dy) {
        const Eigen::VectorXd bu = setup.B1 * setup.u(t);
        const auto xi = y.segment(0, n), eta = y.segment(n, n), xit = y.segment(2 * n, n), etat = y.segment(3 * n, n);
        const double out = sys.c().dot(xi);
        const double est = sys.c().dot(xit);
        dy.segment(0, n) = sys.omega().cwiseProduct(eta);
        dy.segment(n, n) = -sys.omega().cwiseProduct(xi) + bu;
        dy.segment(2 * n, n) = sys.omega().cwiseProduct(etat) - sys.gamma() * (est - out) * sys.c();
        dy.segment(3 * n, n) = -sys.omega().cwiseProduct(xit) + bu;
    };
    const double atol = opt.atol, rtol = opt.rtol;
    auto error_norm = [n, atol, rtol](const Eigen::VectorXd& y0, const Eigen::VectorXd& y1, const Eigen::VectorXd& err) {
        const Eigen::VectorXd e0 = y0.head(2 * n) - y0.tail(2 * n);
        const Eigen::VectorXd e1 = y1.head(2 * n) - y1.tail(2 * n);
        const Eigen::VectorXd ee = err.head(2 * n) - err.tail(2 * n);
        return rms_error_norm(e0, e1, ee, atol, rtol);
    };
    Dopri5<Eigen::VectorXd> stepper(rhs, detail::integrator_options(sys, opt), error_norm);
    Eigen::VectorXd y0(4 * n);
    y0 << z0.Delta, z0.delta, zt0.Delta, zt0.delta;
    const auto ys = stepper.integrate(y0, t_grid);
    std::vector<ObserverPoint> pts;
    for (std::size_t i = 0; i < ys.size(); ++i)
        pts.push_back({t_grid[i], (ys[i].head(2 * n) - ys[i].tail(2 * n)).norm(), ys[i].head(2 * n).norm()});
    return pts;
}

enum class FitMode { trajectory, envelope };

inline const char* to_string(FitMode m) { return m == FitMode::trajectory ? "trajectory" : "envelope"; }

/// Power-law fit  y(t) ~ prefactor * (1+t)^exponent  over a window.
struct DecayFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double t_lo = 0.0;
    double t_hi = 0.0;
    double r2 = 0.0;
    double r2_exponential = 0.0; ///< r^2 of log y against t on the same window
    bool polynomial = false;     ///< power law explains the data better than an exponential
    bool clipped = false;        ///< window shortened to the truncation-valid range
    FitMode mode = FitMode::envelope;
    std::optional<std::uint64_t> seed;
    std::optional<double> beta_tilde; ///< smallest constant with ||eps(t)|| <= b (1+t)^{-1/alpha} ||A eps0||
    std::optional<bool> monotone;     ///< norm nonincreasing along the trajectory
};

struct DecayWindowOptions {
    bool clip_to_truncation = true;
    double truncation_factor = 0.1; ///< polynomial behaviour trusted for t <= factor / floor_rate
    double min_t = 1.0;
    double min_decades = 1.5;
};

namespace detail {

inline std::pair<double, double> decay_window(const std::vector<double>& t_grid, double floor_rate,
                                              const DecayWindowOptions& w, bool& clipped) {
    double lo = std::max(w.min_t, t_grid.front());
    double hi = t_grid.back();
    clipped = false;
    if (w.clip_to_truncation && floor_rate > 0.0 && w.truncation_factor / floor_rate < hi) {
        hi = w.truncation_factor / floor_rate;
        clipped = true;
    }
    if (!(hi > lo) || std::log10(hi / lo) < w.min_decades)
        throw fit_error("decay fit window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                        "] spans fewer than " + std::to_string(w.min_decades) + " decades");
    return {lo, hi};
}

inline DecayFit fit_decay(const std::vector<double>& t, const std::vector<double>& y, double lo, double hi) {
    std::vector<double> lx, ly, tx;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < lo || t[i] > hi || !(y[i] > 0.0))
            continue;
        lx.push_back(std::log1p(t[i]));
        ly.push_back(std::log(y[i]));
        tx.push_back(t[i]);
    }
    if (lx.size() < 3)
        throw fit_error("decay fit needs at least 3 samples inside the window");
    const LineFit power = fit_line(lx, ly);
    const LineFit expo = fit_line(tx, ly);
    DecayFit f;
    f.exponent = power.slope;
    f.prefactor = std::exp(power.intercept);
    f.r2 = power.r2;
    f.r2_exponential = expo.r2;
    f.polynomial = power.r2 > expo.r2;
    f.t_lo = lo;
    f.t_hi = hi;
    return f;
}

} // namespace detail

/// Worst-case modal envelope E(t) = max_k e^{Re lambda_k t} / |lambda_k|, the diagonal value of
/// ||e^{tG} G^{-1}||, sampled on t_grid.
inline std::vector<double> envelope_values(const SpectrumReport& spec, const std::vector<double>& t_grid) {
    std::vector<double> e;
    for (double t : t_grid) {
        double m = 0.0;
        for (const auto& eig : spec.eigs)
            m = std::max(m, std::exp(eig.lambda.real() * t) / std::abs(eig.lambda));
        e.push_back(m);
    }
    return e;
}

/// Fits log E(t) against log(1+t); the exponent approximates -1/alpha.
inline DecayFit decay_envelope(const SystemSpec& sys, const SpectrumReport& spec, const std::vector<double>& t_grid,
                               const DecayWindowOptions& w = {}) {
    (void)sys;
    if (t_grid.size() < 3)
        throw fit_error("envelope needs at least 3 time samples");
    if (!spec.complete)
        throw invalid_argument("envelope needs a certified spectrum");
    bool clipped = false;
    const auto [lo, hi] = detail::decay_window(t_grid, spec.floor_rate(), w, clipped);
    DecayFit f = detail::fit_decay(t_grid, envelope_values(spec, t_grid), lo, hi);
    f.mode = FitMode::envelope;
    f.clipped = clipped;
    return f;
}

/// Initial data with modal amplitudes omega_k^{-3/2} and seeded random phases:
/// eps0 = Q upsilon0, upsilon0_{+-k} = omega_k^{-3/2} e^{i phi}.
inline StateVector domain_initial_data(const SystemSpec& sys, const ModalBasis& basis, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const std::size_t n = sys.size();
    Eigen::VectorXcd ups(Eigen::Index(2 * n));
    for (std::size_t i = 0; i < 2 * n; ++i) {
        const double w = sys.omega()(Eigen::Index(i % n));
        // 53 random bits -> [0, 1); avoids implementation-defined distributions.
        const double u = double(rng() >> 11) * 0x1.0p-53;
        ups(Eigen::Index(i)) = std::polar(std::pow(w, -1.5), 2.0 * std::numbers::pi * u);
    }
    return StateVector::from_flat(basis.Q * ups);
}

/// Simulates from eps0 and fits ||eps(t)|| / ||A eps0|| against (1+t). Also reports the
/// smallest beta~ for which ||eps(t)|| <= beta~ (1+t)^{-1/alpha} ||A eps0|| holds at every
/// grid time (t = 0 included) and whether the norm is nonincreasing.
inline DecayFit decay_fit_trajectory(const SystemSpec& sys, const ModalBasis& basis, const StateVector& eps0,
                                     const std::vector<double>& t_grid, double alpha,
                                     const DecayWindowOptions& w = {}, const SimulationOptions& sim = {},
                                     Trajectory* trajectory_out = nullptr) {
    if (!(alpha > 0.0))
        throw invalid_argument("alpha must be positive");
    const double a_norm = apply_generator(sys, eps0).norm();
    if (!(a_norm > 0.0))
        throw invalid_argument("initial state must not be zero");
    Trajectory tr = simulate_error(sys, eps0, t_grid, sim, &basis);

    double floor_rate = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < basis.G.size(); ++i)
        floor_rate = std::min(floor_rate, std::abs(basis.G(i).real()));
    bool clipped = false;
    const auto [lo, hi] = detail::decay_window(t_grid, floor_rate, w, clipped);

    std::vector<double> ratio;
    double beta = 0.0;
    bool monotone = true;
    for (std::size_t i = 0; i < tr.points.size(); ++i) {
        const auto& p = tr.points[i];
        ratio.push_back(p.norm / a_norm);
        beta = std::max(beta, p.norm / a_norm * std::pow(1.0 + p.t, 1.0 / alpha));
        // Integrator noise allowance well below the requested tolerance.
        if (i > 0 && p.norm > tr.points[i - 1].norm * (1.0 + 1e-10))
            monotone = false;
    }
    DecayFit f = detail::fit_decay(t_grid, ratio, lo, hi);
    f.mode = FitMode::trajectory;
    f.clipped = clipped;
    f.beta_tilde = beta;
    f.monotone = monotone;
    if (trajectory_out != nullptr)
        *trajectory_out = std::move(tr);
    return f;
}

/// n log-spaced times in [lo, hi] preceded by t = 0.
inline std::vector<double> log_time_grid(double lo, double hi, int n) {
    std::vector<double> t{0.0};
    for (int i = 0; i < n; ++i)
        t.push_back(lo * std::pow(hi / lo, double(i) / double(n - 1)));
    return t;
}

} // namespace polystab
