#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "polystab/error.hpp"

namespace polystab {

struct IntegratorOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    double max_step = std::numeric_limits<double>::infinity();
    double min_step = 1e-14;     ///< relative to max(1, |t|); below this the run is aborted
    long max_steps = 50'000'000;
    double initial_step = 0.0;   ///< 0 picks a starting step automatically
};

/// Scaled RMS error norm over all components (Hairer-Wanner convention).
template <class Vector>
double rms_error_norm(const Vector& y0, const Vector& y1, const Vector& err, double atol, double rtol) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = atol + rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
        const double e = std::abs(err(i)) / sc;
        acc += e * e;
    }
    return std::sqrt(acc / double(std::max<Eigen::Index>(1, err.size())));
}

/// Dormand-Prince 5(4) embedded pair with FSAL and a standard step controller.
/// Output times are hit exactly. The error norm is pluggable so that a composite
/// state (plant + observer) can be controlled on a derived quantity only.
template <class Vector>
class Dopri5 {
public:
    using Rhs = std::function<void(double, const Vector&, Vector&)>;
    using ErrorNorm = std::function<double(const Vector& y0, const Vector& y1, const Vector& err)>;

    Dopri5(Rhs rhs, IntegratorOptions opt = {}, ErrorNorm norm = {})
        : rhs_(std::move(rhs)), opt_(opt), norm_(std::move(norm)) {
        if (!norm_) {
            const double a = opt_.atol, r = opt_.rtol;
            norm_ = [a, r](const Vector& y0, const Vector& y1, const Vector& e) {
                return rms_error_norm(y0, y1, e, a, r);
            };
        }
    }

    /// Integrates from times.front() with state y0 and returns the state at every time.
    std::vector<Vector> integrate(const Vector& y0, const std::vector<double>& times) {
        if (times.empty())
            return {};
        for (std::size_t i = 1; i < times.size(); ++i)
            if (!(times[i] > times[i - 1]))
                throw invalid_argument("output times must be strictly increasing");
        std::vector<Vector> out;
        out.reserve(times.size());
        out.push_back(y0);
        Vector y = y0;
        double t = times.front();
        Vector k1(y.size());
        rhs_(t, y, k1);
        double h = opt_.initial_step > 0.0 ? opt_.initial_step : initial_step(t, y, k1);
        steps_ = rejected_ = 0;
        for (std::size_t i = 1; i < times.size(); ++i) {
            advance_to(times[i], t, y, k1, h);
            out.push_back(y);
        }
        return out;
    }

    long steps() const { return steps_; }
    long rejected() const { return rejected_; }

private:
    double initial_step(double t, const Vector& y, const Vector& f0) const {
        const double d0 = norm_(y, y, y), d1 = norm_(y, y, f0);
        double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h0 = std::min(h0, opt_.max_step);
        Vector y1 = y + h0 * f0, f1(y.size());
        rhs_(t + h0, y1, f1);
        const double d2 = norm_(y, y, Vector(f1 - f0)) / h0;
        const double h1 = std::max(d1, d2) <= 1e-15 ? std::max(1e-6, h0 * 1e-3)
                                                     : std::pow(0.01 / std::max(d1, d2), 0.2);
        return std::min({100.0 * h0, h1, opt_.max_step});
    }

    void advance_to(double t_end, double& t, Vector& y, Vector& k1, double& h) {
        // Dormand-Prince coefficients.
        constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
        constexpr double a21 = 1.0 / 5;
        constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                         a65 = -5103.0 / 18656;
        constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                         e6 = 22.0 / 525, e7 = -1.0 / 40;

        const Eigen::Index n = y.size();
        Vector k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
        while (t < t_end) {
            if (++steps_ > opt_.max_steps)
                throw integration_error("maximum number of integration steps exceeded", t);
            const double hmin = opt_.min_step * std::max(1.0, std::abs(t));
            double hs = std::min(h, opt_.max_step);
            bool last = false;
            if (t + hs >= t_end || t_end - (t + hs) < hmin) {
                hs = t_end - t;
                last = true;
            }
            ytmp = y + hs * a21 * k1;
            rhs_(t + c2 * hs, ytmp, k2);
            ytmp = y + hs * (a31 * k1 + a32 * k2);
            rhs_(t + c3 * hs, ytmp, k3);
            ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
            rhs_(t + c4 * hs, ytmp, k4);
            ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
            rhs_(t + c5 * hs, ytmp, k5);
            ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            rhs_(t + hs, ytmp, k6);
            ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            rhs_(t + hs, ynew, k7);
            err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

            const double en = norm_(y, ynew, err);
            if (!std::isfinite(en))
                throw integration_error("non-finite error estimate", t);
            const double fac = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, 5.0);
            if (en <= 1.0) {
                t = last ? t_end : t + hs;
                y.swap(ynew);
                k1.swap(k7);
                // A step shortened to land on an output time does not shrink the controller step.
                h = last ? std::max(h, hs * fac) : hs * fac;
            } else {
                ++rejected_;
                h = hs * std::min(1.0, fac);
                if (h < hmin)
                    throw integration_error("step size underflow", t);
            }
        }
    }

    Rhs rhs_;
    IntegratorOptions opt_;
    ErrorNorm norm_;
    long steps_ = 0;
    long rejected_ = 0;
};

} // namespace polystab
