#pragma once

#include <stdexcept>
#include <string>

namespace polystab {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The system data violates a standing assumption (ordering, nonzero coefficients, gain).
class invalid_system : public error {
public:
    using error::error;
};

/// A precondition on an argument other than the system itself failed.
class invalid_argument : public error {
public:
    using error::error;
};

/// Evaluation requested at (or numerically on top of) a singularity.
class pole_error : public error {
public:
    using error::error;
};

/// An iterative method exhausted its budget without meeting its tolerance.
class convergence_error : public error {
public:
    using error::error;
};

/// Localization interval is empty (b^2 <= c): no disk radius can satisfy the Rouche bound.
class empty_interval : public error {
public:
    using error::error;
};

/// lambda lies (numerically) in the spectrum, so the resolvent does not exist there.
class spectrum_proximity : public error {
public:
    using error::error;
};

/// The eigenvector matrix is numerically singular.
class singular_basis : public error {
public:
    using error::error;
};

/// Adaptive integration could not proceed.
class integration_error : public error {
public:
    integration_error(const std::string& what, double t) : error(what), time_(t) {}
    double time() const noexcept { return time_; }

private:
    double time_;
};

/// A least-squares fit had too little data or too narrow a window.
class fit_error : public error {
public:
    using error::error;
};

} // namespace polystab
