#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polystab/io.hpp"

namespace polystab {

/// Raised for malformed or inconsistent run configurations (CLI exit code 2).
class config_error : public error {
public:
    using error::error;
};

/// Every numeric threshold used by the pipeline. All values can be overridden from the
/// "tolerances" object of a config and are echoed in every report.
struct Tolerances {
    double beta = 1.0;              ///< decay-assumption constant
    std::size_t k0 = 2;             ///< first index checked by the decay assumption
    double theta_frac = 0.5;
    double r1_fraction = 0.9;
    double newton_tol = 1e-12;
    double winding_integer_tol = 1e-6;
    double residual_factor = 1e-10;
    std::size_t scan_k_min = 3;
    std::size_t scan_k_max = 20;    ///< clamped to N-1
    int scan_points = 33;
    double alpha_slope_tol = 0.15;
    double alpha_r2_min = 0.95;
    double t_lo = 1.0;
    double t_hi = 200.0;
    int envelope_samples = 200;
    int trajectory_samples = 100;
    double exponent_tol = 0.2;
    bool clip_to_truncation = true;
    double truncation_factor = 0.1;
    double min_decades = 1.5;
    double sim_rtol = 1e-9;
    double sim_atol = 1e-12;
    double omega_dt_limit = 0.5;
    double trajectory_slope_min = -1.6;
    double trajectory_slope_max = -0.8;
    double max_cond = 1e12;
};

inline const std::vector<std::string>& known_tasks() {
    static const std::vector<std::string> t{"verify",   "localize", "spectrum", "resolvent-scan",
                                            "simulate", "envelope", "report"};
    return t;
}

struct RunConfig {
    SystemSpec system;
    std::vector<std::string> tasks;
    std::uint64_t seed = 0;
    std::filesystem::path output_dir = ".";
    Tolerances tol;
    bool strict = false;
};

/// Command-line values that take precedence over the config file.
struct ConfigOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<long> n;
    std::optional<std::filesystem::path> output_dir;
    bool strict = false;
};

namespace detail {

template <class T>
void read_field(const json& obj, const char* key, T& out) {
    if (obj.contains(key))
        out = obj.at(key).get<T>();
}

} // namespace detail

inline json to_json(const Tolerances& t) {
    return {{"beta", t.beta},
            {"k0", t.k0},
            {"theta_frac", t.theta_frac},
            {"r1_fraction", t.r1_fraction},
            {"newton_tol", t.newton_tol},
            {"winding_integer_tol", t.winding_integer_tol},
            {"residual_factor", t.residual_factor},
            {"scan_k_min", t.scan_k_min},
            {"scan_k_max", t.scan_k_max},
            {"scan_points", t.scan_points},
            {"alpha_slope_tol", t.alpha_slope_tol},
            {"alpha_r2_min", t.alpha_r2_min},
            {"t_lo", t.t_lo},
            {"t_hi", t.t_hi},
            {"envelope_samples", t.envelope_samples},
            {"trajectory_samples", t.trajectory_samples},
            {"exponent_tol", t.exponent_tol},
            {"clip_to_truncation", t.clip_to_truncation},
            {"truncation_factor", t.truncation_factor},
            {"min_decades", t.min_decades},
            {"sim_rtol", t.sim_rtol},
            {"sim_atol", t.sim_atol},
            {"omega_dt_limit", t.omega_dt_limit},
            {"trajectory_slope_min", t.trajectory_slope_min},
            {"trajectory_slope_max", t.trajectory_slope_max},
            {"max_cond", t.max_cond}};
}

/// Applies overrides from a "tolerances" object. Unknown keys are rejected.
inline void apply_tolerances(const json& j, Tolerances& t) {
    if (!j.is_object())
        throw config_error("\"tolerances\" must be an object");
    const json known = to_json(t);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key()))
            throw config_error("unknown tolerance \"" + it.key() + "\"");
    try {
        detail::read_field(j, "beta", t.beta);
        detail::read_field(j, "k0", t.k0);
        detail::read_field(j, "theta_frac", t.theta_frac);
        detail::read_field(j, "r1_fraction", t.r1_fraction);
        detail::read_field(j, "newton_tol", t.newton_tol);
        detail::read_field(j, "winding_integer_tol", t.winding_integer_tol);
        detail::read_field(j, "residual_factor", t.residual_factor);
        detail::read_field(j, "scan_k_min", t.scan_k_min);
        detail::read_field(j, "scan_k_max", t.scan_k_max);
        detail::read_field(j, "scan_points", t.scan_points);
        detail::read_field(j, "alpha_slope_tol", t.alpha_slope_tol);
        detail::read_field(j, "alpha_r2_min", t.alpha_r2_min);
        detail::read_field(j, "t_lo", t.t_lo);
        detail::read_field(j, "t_hi", t.t_hi);
        detail::read_field(j, "envelope_samples", t.envelope_samples);
        detail::read_field(j, "trajectory_samples", t.trajectory_samples);
        detail::read_field(j, "exponent_tol", t.exponent_tol);
        detail::read_field(j, "clip_to_truncation", t.clip_to_truncation);
        detail::read_field(j, "truncation_factor", t.truncation_factor);
        detail::read_field(j, "min_decades", t.min_decades);
        detail::read_field(j, "sim_rtol", t.sim_rtol);
        detail::read_field(j, "sim_atol", t.sim_atol);
        detail::read_field(j, "omega_dt_limit", t.omega_dt_limit);
        detail::read_field(j, "trajectory_slope_min", t.trajectory_slope_min);
        detail::read_field(j, "trajectory_slope_max", t.trajectory_slope_max);
        detail::read_field(j, "max_cond", t.max_cond);
    } catch (const json::exception& e) {
        throw config_error(std::string("bad tolerance value: ") + e.what());
    }
    if (!(t.beta > 0.0) || t.k0 < 1 || !(t.theta_frac > 0.0 && t.theta_frac < 1.0) ||
        !(t.r1_fraction > 0.0 && t.r1_fraction < 1.0) || !(t.t_lo > 0.0 && t.t_hi > t.t_lo) ||
        t.envelope_samples < 3 || t.trajectory_samples < 3 || t.scan_points < 2)
        throw config_error("tolerance values out of range");
}

/// Builds a RunConfig from a config document: the system schema plus optional
/// "tasks", "seed", "beta", "k0" and "tolerances".
inline RunConfig parse_config(const json& doc, const ConfigOverrides& ov = {}) {
    if (!doc.is_object())
        throw config_error("config must be a JSON object");
    RunConfig cfg{system_from_json(doc, ov.n), {}, 0, ".", {}, ov.strict};
    try {
        if (doc.contains("tasks")) {
            if (!doc.at("tasks").is_array())
                throw config_error("\"tasks\" must be an array");
            for (const json& t : doc.at("tasks")) {
                const std::string name = t.get<std::string>();
                if (std::find(known_tasks().begin(), known_tasks().end(), name) == known_tasks().end())
                    throw config_error("unknown task \"" + name + "\"");
                cfg.tasks.push_back(name);
            }
        }
        detail::read_field(doc, "seed", cfg.seed);
        if (doc.contains("output_dir"))
            cfg.output_dir = doc.at("output_dir").get<std::string>();
        if (doc.contains("tolerances"))
            apply_tolerances(doc.at("tolerances"), cfg.tol);
        json top = json::object();
        for (const char* key : {"beta", "k0"})
            if (doc.contains(key))
                top[key] = doc.at(key);
        apply_tolerances(top, cfg.tol);
    } catch (const json::exception& e) {
        throw config_error(std::string("malformed config: ") + e.what());
    }
    if (ov.seed)
        cfg.seed = *ov.seed;
    if (ov.output_dir)
        cfg.output_dir = *ov.output_dir;
    return cfg;
}

/// Outcome of one pipeline task: pass/fail, a JSON summary and the files it produced.
struct TaskResult {
    std::string task;
    bool pass = true;
    json summary;
    std::map<std::string, std::string> files; ///< file name -> contents
};

/// Runs tasks against one configuration, caching the spectrum and modal basis.
class Pipeline {
public:
    explicit Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {}

    const RunConfig& config() const { return cfg_; }

    const SpectrumReport& spectrum() {
        if (!spectrum_) {
            SpectrumOptions o;
            o.theta_frac = cfg_.tol.theta_frac;
            o.localize.r1_fraction = cfg_.tol.r1_fraction;
            o.newton.tol = cfg_.tol.newton_tol;
            o.winding.integer_tol = cfg_.tol.winding_integer_tol;
            o.residual_factor = cfg_.tol.residual_factor;
            spectrum_ = full_spectrum(cfg_.system, o);
        }
        return *spectrum_;
    }

    const AssumptionCertificate& assumptions() {
        if (!assumptions_)
            assumptions_ = certify_assumptions(cfg_.system, cfg_.tol.beta, std::min(cfg_.tol.k0, cfg_.system.size()));
        return *assumptions_;
    }

    const ModalBasis& basis() {
        if (!basis_) {
            BasisOptions o;
            o.max_cond = cfg_.tol.max_cond;
            basis_ = build_basis(cfg_.system, spectrum(), o);
        }
        return *basis_;
    }

    TaskResult verify() {
        const auto& a = assumptions();
        TaskResult r{"verify", a.holds_A2 && a.holds_A3, to_json(a), {}};
        r.files["assumptions.json"] = r.summary.dump(2) + "\n";
        return r;
    }

    TaskResult localize_modes() {
        TaskResult r{"localize", true, json::object(), {}};
        const auto& rep = spectrum();
        json modes = json::array();
        std::size_t ready = 0;
        for (std::size_t k = 1; k <= cfg_.system.size(); ++k) {
            const auto& loc = rep.localization[k - 1];
            if (!loc) {
                modes.push_back({{"k", k}, {"error", "empty Rouche radius interval"}});
                continue;
            }
            json m = to_json(*loc);
            const bool ok = loc->rouche_ready();
            m["rouche_ready"] = ok;
            if (ok) {
                ++ready;
                m["hypothesis_sampled"] = rouche_hypothesis_sampled(CharContext(cfg_.system, k), *loc, 64);
            }
            modes.push_back(m);
        }
        r.summary = {{"modes", modes}, {"rouche_ready", ready}, {"N", cfg_.system.size()}};
        r.pass = !cfg_.strict || ready == cfg_.system.size();
        r.files["localization.json"] = r.summary.dump(2) + "\n";
        r.files["localization.csv"] = localization_csv(rep);
        return r;
    }

    TaskResult spectrum_task() {
        const auto& rep = spectrum();
        TaskResult r{"spectrum", rep.complete || !cfg_.strict, to_json(rep), {}};
        r.files["spectrum.json"] = r.summary.dump(2) + "\n";
        r.files["spectrum.csv"] = spectrum_csv(rep);
        r.files["spectrum_plot.csv"] = spectrum_plot_csv(rep);
        return r;
    }

    TaskResult resolvent_scan() {
        const auto& rep = spectrum();
        const std::size_t n = cfg_.system.size();
        const std::size_t k_max = std::min(cfg_.tol.scan_k_max, n > 0 ? n - 1 : 0);
        if (cfg_.tol.scan_k_min < 2 || k_max < cfg_.tol.scan_k_min + 2)
            throw config_error("resolvent scan needs at least three segments in 2 <= k <= N-1");
        const AxisScan scan = axis_scan(cfg_.system, rep, cfg_.tol.scan_k_min, k_max, cfg_.tol.scan_points);
        const auto alpha = assumptions().alpha;
        bool bound_ok = true;
        for (const auto& s : scan.segments)
            if (s.bound_applies && std::max(s.sup, s.sup_mirror) > s.star_bound)
                bound_ok = false;
        const bool slope_ok = alpha && std::abs(scan.alpha_fit.slope - *alpha) <= cfg_.tol.alpha_slope_tol &&
                              scan.alpha_fit.r2 >= cfg_.tol.alpha_r2_min;
        TaskResult r{"resolvent-scan", slope_ok && bound_ok, to_json(scan, alpha), {}};
        r.summary["slope_ok"] = slope_ok;
        r.summary["segment_bound_ok"] = bound_ok;
        r.files["axis_fit.json"] = r.summary.dump(2) + "\n";
        r.files["axis_scan.csv"] = axis_scan_csv(scan);
        return r;
    }

    TaskResult envelope() {
        const auto& rep = spectrum();
        const auto t = log_time_grid(cfg_.tol.t_lo, cfg_.tol.t_hi, cfg_.tol.envelope_samples);
        const DecayFit fit = decay_envelope(cfg_.system, rep, t, window());
        const auto alpha = assumptions().alpha;
        const bool ok = alpha && std::abs(fit.exponent + 1.0 / *alpha) <= cfg_.tol.exponent_tol;
        TaskResult r{"envelope", ok, to_json(fit), {}};
        r.summary["expected_exponent"] = alpha ? json(-1.0 / *alpha) : json(nullptr);
        r.files["envelope_fit.json"] = r.summary.dump(2) + "\n";
        r.files["envelope.csv"] = envelope_csv(t, envelope_values(rep, t));
        return r;
    }

    TaskResult simulate() {
        const auto& b = basis();
        const auto alpha = assumptions().alpha;
        if (!alpha)
            throw config_error("simulate needs the decay assumption to hold (no alpha found)");
        const StateVector eps0 = domain_initial_data(cfg_.system, b, cfg_.seed);
        const auto t = log_time_grid(cfg_.tol.t_lo, cfg_.tol.t_hi, cfg_.tol.trajectory_samples);
        SimulationOptions sim;
        sim.rtol = cfg_.tol.sim_rtol;
        sim.atol = cfg_.tol.sim_atol;
        sim.omega_dt_limit = cfg_.tol.omega_dt_limit;
        Trajectory tr;
        DecayFit fit = decay_fit_trajectory(cfg_.system, b, eps0, t, *alpha, window(), sim, &tr);
        fit.seed = cfg_.seed;
        const bool ok = fit.beta_tilde && std::isfinite(*fit.beta_tilde) && fit.monotone && *fit.monotone &&
                        fit.exponent >= cfg_.tol.trajectory_slope_min && fit.exponent <= cfg_.tol.trajectory_slope_max;
        TaskResult r{"simulate", ok, to_json(fit), {}};
        r.summary["modal_defect"] = tr.modal_defect ? json(*tr.modal_defect) : json(nullptr);
        r.summary["cross_validated"] = tr.cross_validated;
        r.summary["steps"] = tr.steps;
        r.summary["basis"] = to_json(b);
        r.files["trajectory_fit.json"] = r.summary.dump(2) + "\n";
        r.files["trajectory.csv"] = trajectory_csv(tr);
        r.files["basis.json"] = to_json(b).dump(2) + "\n";
        r.files["Q.bin"] = q_binary(b);
        return r;
    }

    /// Dispatches a single task by name; "report" runs the configured task list.
    TaskResult run(const std::string& task) {
        if (task == "verify")
            return verify();
        if (task == "localize")
            return localize_modes();
        if (task == "spectrum")
            return spectrum_task();
        if (task == "resolvent-scan")
            return resolvent_scan();
        if (task == "envelope")
            return envelope();
        if (task == "simulate")
            return simulate();
        if (task == "report")
            return report();
        throw config_error("unknown task \"" + task + "\"");
    }

    /// Runs every configured task inline and consolidates the results.
    TaskResult report() {
        std::vector<std::string> tasks;
        for (const auto& t : cfg_.tasks)
            if (t != "report" && std::find(tasks.begin(), tasks.end(), t) == tasks.end())
                tasks.push_back(t);
        if (tasks.empty())
            throw config_error("report needs a nonempty \"tasks\" list");
        TaskResult r{"report", true, json::object(), {}};
        json results = json::object();
        for (const auto& t : tasks) {
            TaskResult sub = run(t);
            r.pass = r.pass && sub.pass;
            results[t] = {{"pass", sub.pass}, {"result", sub.summary}};
            for (auto& [name, content] : sub.files)
                r.files[name] = std::move(content);
        }
        r.summary = {{"system", system_to_json(cfg_.system)},
                     {"seed", cfg_.seed},
                     {"strict", cfg_.strict},
                     {"tolerances", to_json(cfg_.tol)},
                     {"tasks", tasks},
                     {"results", results},
                     {"pass", r.pass}};
        r.files["report.json"] = r.summary.dump(2) + "\n";
        r.files["report.txt"] = summary_text(r.summary);
        return r;
    }

private:
    DecayWindowOptions window() const {
        DecayWindowOptions w;
        w.clip_to_truncation = cfg_.tol.clip_to_truncation;
        w.truncation_factor = cfg_.tol.truncation_factor;
        w.min_t = cfg_.tol.t_lo;
        w.min_decades = cfg_.tol.min_decades;
        return w;
    }

    static std::string summary_text(const json& rep) {
        std::ostringstream os;
        os << "polystab report (seed " << rep.at("seed").get<std::uint64_t>() << ")\n";
        const json& res = rep.at("results");
        for (const auto& t : rep.at("tasks")) {
            const std::string name = t.get<std::string>();
            const json& e = res.at(name);
            os << "  " << (e.at("pass").get<bool>() ? "PASS" : "FAIL") << "  " << name;
            const json& s = e.at("result");
            if (name == "verify")
                os << "  kappa=" << s.at("kappa") << " alpha=" << s.at("alpha");
            else if (name == "spectrum")
                os << "  eigenvalues=" << s.at("count") << " complete=" << s.at("complete");
            else if (name == "localize")
                os << "  rouche_ready=" << s.at("rouche_ready") << "/" << s.at("N");
            else if (name == "resolvent-scan")
                os << "  slope=" << s.at("slope") << " r2=" << s.at("r2");
            else if (name == "envelope" || name == "simulate")
                os << "  exponent=" << s.at("exponent") << " window=" << s.at("window");
            if (name == "simulate")
                os << " beta_tilde=" << s.at("beta_tilde") << " cond_Q=" << s.at("basis").at("cond_Q");
            os << "\n";
        }
        os << (rep.at("pass").get<bool>() ? "overall: PASS\n" : "overall: FAIL\n");
        return os.str();
    }

    RunConfig cfg_;
    std::optional<SpectrumReport> spectrum_;
    std::optional<AssumptionCertificate> assumptions_;
    std::optional<ModalBasis> basis_;
};

/// Writes every file of a task result into dir.
inline void write_outputs(const TaskResult& r, const std::filesystem::path& dir) {
    for (const auto& [name, content] : r.files)
        write_atomic(dir / name, content);
}

} // namespace polystab
