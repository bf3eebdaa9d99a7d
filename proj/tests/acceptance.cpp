// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace polystab;

namespace {

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const SystemSpec& beam23() {
    static const SystemSpec s = beam_example(1.0, 1.0, 23);
    return s;
}

const SpectrumReport& beam23_report() {
    static const SpectrumReport r = full_spectrum(beam23());
    return r;
}

Outcome oracle_equivalence() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    bool ok = true;
    for (long n : {1L, 2L, 4L, 8L}) {
        const SystemSpec s = beam_example(1.0, 1.0, n);
        const auto rep = full_spectrum(s);
        const double d = matching_distance(rep.values(), dense_oracle_spectrum(s));
        worst = std::max(worst, d);
        ok = ok && rep.complete && d <= 1e-8;
    }
    const double secs = seconds_since(t0);
    std::ostringstream os;
    os << "max matched distance " << worst << ", " << secs << " s";
    return {ok && secs < 5.0, os.str()};
}

Outcome beam23_reproduction() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = full_spectrum(beam23());
    const double secs = seconds_since(t0);
    double max_re = -1e300;
    for (const auto& e : rep.eigs)
        max_re = std::max(max_re, e.lambda.real());
    const bool ok = rep.eigs.size() == 46 && rep.complete && max_re < 0.0 && rep.symmetry_defect <= 1e-9 &&
                    rep.enclosure_defect == 0.0 && secs < 10.0;
    std::ostringstream os;
    os << rep.eigs.size() << " eigenvalues, max Re " << max_re << ", symmetry " << rep.symmetry_defect
       << ", enclosure defect " << rep.enclosure_defect << ", " << secs << " s";
    return {ok, os.str()};
}

Outcome rouche_certification() {
    const auto& rep = beam23_report();
    int checked = 0;
    bool ok = true;
    std::string bad;
    for (std::size_t k = 1; k <= beam23().size(); ++k) {
        const CharContext ctx(beam23(), k);
        if (!(ctx.omega() > 1.0))
            continue;
        LocalizationCertificate c;
        try {
            c = localize(ctx, 0.5);
        } catch (const empty_interval&) {
            continue;
        }
        if (!(c.cond_Mneq2 && c.rouche_ready()))
            continue;
        ++checked;
        const int w = winding_number(beam23(), {c.lambda_star, c.Rk});
        const bool inside = std::abs(rep.upper(k) - c.lambda_star) < c.Rk;
        const bool sampled = rouche_hypothesis_sampled(ctx, c, 64);
        if (w != 1 || !inside || !sampled) {
            ok = false;
            bad += " k=" + std::to_string(k);
        }
    }
    std::ostringstream os;
    os << checked << " certified modes checked" << (bad.empty() ? "" : ", failing:" + bad);
    return {ok && checked > 0, os.str()};
}

Outcome resolvent_contract() {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    int done = 0;
    while (done < 100) {
        const SystemSpec s = gen::random_system(rng, std::size_t(1 + done % 10));
        const auto eigs = dense_oracle_spectrum(s);
        const cplx lam = gen::random_point(rng, 1.2 * s.omega().maxCoeff());
        double d = std::abs(lam);
        for (cplx z : eigs)
            d = std::min(d, std::abs(z - lam));
        if (d < 1e-3)
            continue;
        const StateVector rhs = gen::random_state(rng, s.size());
        worst = std::max(worst, resolvent_residual(s, lam, apply_resolvent(s, lam, rhs), rhs) / rhs.norm());
        ++done;
    }
    double singular = 0.0;
    for (std::size_t k = 1; k <= beam23().size(); ++k)
        for (double sgn : {1.0, -1.0}) {
            const cplx lam = sgn * I * beam23().omega_at(k);
            const StateVector rhs = gen::random_state(rng, beam23().size());
            singular = std::max(singular, resolvent_residual(beam23(), lam, apply_resolvent(beam23(), lam, rhs), rhs) /
                                              rhs.norm());
        }
    std::ostringstream os;
    os << "random worst " << worst << ", singular worst " << singular;
    return {worst <= 1e-10 && singular <= 1e-10, os.str()};
}

Outcome axis_exponent() {
    const auto scan = axis_scan(beam23(), beam23_report(), 3, 20);
    int applied = 0;
    bool bound_ok = true;
    for (const auto& seg : scan.segments)
        if (seg.bound_applies) {
            ++applied;
            bound_ok = bound_ok && seg.sup <= seg.star_bound;
        }
    std::ostringstream os;
    os << "slope " << scan.alpha_fit.slope << ", r2 " << scan.alpha_fit.r2 << ", bound checked on " << applied
       << " segments";
    return {std::abs(scan.alpha_fit.slope - 1.0) <= 0.15 && scan.alpha_fit.r2 >= 0.95 && bound_ok, os.str()};
}

Outcome decay_exponent() {
    const auto env = decay_envelope(beam23(), beam23_report(), log_time_grid(1.0, 200.0, 200));
    const auto basis = build_basis(beam23(), beam23_report());
    const StateVector eps0 = domain_initial_data(beam23(), basis, 7);
    Trajectory tr;
    const auto fit = decay_fit_trajectory(beam23(), basis, eps0, log_time_grid(1.0, 200.0, 100), 1.0, {}, {}, &tr);
    const double a_norm = apply_generator(beam23(), eps0).norm();
    bool pointwise = fit.beta_tilde.has_value() && std::isfinite(*fit.beta_tilde);
    if (pointwise)
        for (const auto& p : tr.points)
            pointwise = pointwise && p.norm <= *fit.beta_tilde * a_norm / (1.0 + p.t) * (1.0 + 1e-12);
    const bool monotone = fit.monotone.value_or(false);
    std::ostringstream os;
    os << "envelope exponent " << env.exponent << " on [" << env.t_lo << ", " << env.t_hi << "]"
       << (env.clipped ? " (clipped)" : "") << ", trajectory beta~ " << fit.beta_tilde.value_or(NAN)
       << ", monotone " << monotone;
    return {std::abs(env.exponent + 1.0) <= 0.2 && pointwise && monotone, os.str()};
}

Outcome diagonalization() {
    double worst = 0.0;
    for (long n : {1L, 2L, 4L, 8L, 23L}) {
        const SystemSpec s = beam_example(1.0, 1.0, n);
        const auto b = build_basis(s, full_spectrum(s));
        const Eigen::MatrixXcd g = b.G.asDiagonal();
        worst = std::max(worst, (b.lu.solve(assemble_generator(s) * b.Q) - g).norm() / g.norm());
    }
    const auto b = build_basis(beam23(), beam23_report());
    double scaled = 0.0;
    for (std::size_t n = 2; n <= 23; ++n)
        scaled = std::max(scaled, b.increments[n - 1] * std::pow(double(n), 4));
    std::ostringstream os;
    os << "relative defect " << worst << ", max increment*n^4 " << scaled;
    return {worst <= 1e-7 && std::isfinite(scaled) && scaled < 1.0, os.str()};
}

Outcome u_invariance() {
    const SystemSpec s = beam_example(1.0, 1.0, 8);
    Eigen::MatrixXd b1 = Eigen::MatrixXd::Zero(8, 2);
    for (Eigen::Index j = 0; j < 8; ++j) {
        b1(j, 0) = 1.0 / double(j + 1);
        b1(j, 1) = (j % 2 ? -1.0 : 1.0) * 0.5;
    }
    const ObserverSetup quiet{s, b1, [](double) { return Eigen::VectorXd::Zero(2); }};
    const ObserverSetup driven{s, b1, [](double t) {
                                   Eigen::VectorXd u(2);
                                   u << 2.0 * std::sin(3.0 * t), std::cos(0.7 * t) - 0.5;
                                   return u;
                               }};
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    RealState z0{Eigen::VectorXd(8), Eigen::VectorXd(8)}, zt0{Eigen::VectorXd::Zero(8), Eigen::VectorXd::Zero(8)};
    for (Eigen::Index j = 0; j < 8; ++j) {
        z0.Delta(j) = nd(rng);
        z0.delta(j) = nd(rng);
    }
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i)
        grid.push_back(0.2 * i);
    const auto a = simulate_observer(quiet, z0, zt0, grid), b = simulate_observer(driven, z0, zt0, grid);
    double gap = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        gap = std::max(gap, std::abs(a[i].error_norm - b[i].error_norm));
    std::ostringstream os;
    os << "max trace gap " << gap;
    return {gap <= 1e-10, os.str()};
}

Outcome determinism() {
    const json doc = json::parse(R"({"gamma": 1.0,
        "generator": {"type": "beam", "theta": 1.0, "sigma": 1.0, "N": 23},
        "tasks": ["verify", "localize", "spectrum", "resolvent-scan", "envelope", "simulate"], "seed": 7})");
    Pipeline first(parse_config(doc)), second(parse_config(doc));
    const auto a = first.report(), b = second.report();
    std::size_t differing = 0;
    for (const auto& [name, content] : a.files) {
        const auto it = b.files.find(name);
        if (it == b.files.end() || it->second != content)
            ++differing;
    }
    differing += b.files.size() > a.files.size() ? b.files.size() - a.files.size() : 0;
    std::ostringstream os;
    os << a.files.size() << " files compared, " << differing << " differ";
    return {differing == 0 && !a.files.empty(), os.str()};
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"oracle spectral equivalence", oracle_equivalence},
        {"N=23 beam spectrum", beam23_reproduction},
        {"Rouche certification", rouche_certification},
        {"resolvent contract", resolvent_contract},
        {"axis-scan exponent", axis_exponent},
        {"decay exponent", decay_exponent},
        {"diagonalization", diagonalization},
        {"u-invariance", u_invariance},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str());
    }
    std::fflush(stdout);
    return failed == 0 ? 0 : 1;
}
