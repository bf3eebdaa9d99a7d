#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "polystab/dynamics.hpp"
#include "polystab/model.hpp"
#include "polystab/modal.hpp"
#include "polystab/resolvent.hpp"
#include "polystab/spectrum.hpp"

namespace polystab {

using json = nlohmann::json;

/// Shortest round-trip representation of a double for CSV output.
inline std::string fmt_num(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// JSON has no infinities; they are written as null.
inline json num_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

// ---- model ----------------------------------------------------------------

/// Accepts {"gamma", "modes": [{"omega", "c"}...]} or {"gamma", "generator": {"type": "beam", ...}}.
/// `n_override` replaces the generator's N.
inline SystemSpec system_from_json(const json& j, std::optional<long> n_override = std::nullopt) {
    try {
        if (!j.is_object() || !j.contains("gamma"))
            throw invalid_system("system document needs a numeric \"gamma\"");
        const double gamma = j.at("gamma").get<double>();
        if (j.contains("generator")) {
            const json& g = j.at("generator");
            const std::string type = g.value("type", "beam");
            if (type != "beam")
                throw invalid_system("unknown generator type \"" + type + "\"");
            const long n = n_override ? *n_override : g.at("N").get<long>();
            return beam_example(g.at("theta").get<double>(), g.at("sigma").get<double>(), n, gamma);
        }
        if (!j.contains("modes"))
            throw invalid_system("system document needs \"modes\" or \"generator\"");
        if (n_override)
            throw invalid_system("--n applies only to generator-based systems");
        std::vector<double> w, c;
        for (const json& m : j.at("modes")) {
            w.push_back(m.at("omega").get<double>());
            c.push_back(m.at("c").get<double>());
        }
        return build_system(gamma, w, c);
    } catch (const json::exception& e) {
        throw invalid_system(std::string("malformed system document: ") + e.what());
    }
}

inline json system_to_json(const SystemSpec& sys) {
    json j;
    j["gamma"] = sys.gamma();
    if (sys.beam()) {
        j["generator"] = {{"type", "beam"}, {"theta", sys.beam()->theta}, {"sigma", sys.beam()->sigma},
                          {"N", sys.size()}};
        return j;
    }
    json modes = json::array();
    for (std::size_t k = 1; k <= sys.size(); ++k)
        modes.push_back({{"omega", sys.omega_at(k)}, {"c", sys.c_at(k)}});
    j["modes"] = modes;
    return j;
}

inline json to_json(const AssumptionCertificate& a) {
    return {{"kappa", num_or_null(a.kappa)},
            {"alpha", a.alpha ? json(*a.alpha) : json(nullptr)},
            {"beta", a.beta},
            {"k0", a.k0},
            {"holds_A1", true},
            {"holds_A2", a.holds_A2},
            {"holds_A3", a.holds_A3},
            {"A3_range", "k0..N"}};
}

// ---- localization ----------------------------------------------------------

inline json to_json(const LocalizationCertificate& c) {
    return {{"k", c.k},
            {"lambda_star", cplx_json(c.lambda_star)},
            {"F0", cplx_json(c.F0)},
            {"F1", cplx_json(c.F1)},
            {"M", c.M},
            {"R0", c.R0},
            {"R1", c.R1},
            {"b", c.b},
            {"c", c.c_const},
            {"Rk", c.Rk},
            {"theta_frac", c.theta_frac},
            {"cond_Mneq1", c.cond_Mneq1},
            {"cond_Mneq2", c.cond_Mneq2},
            {"interval_ok", c.interval_ok},
            {"separated", c.separated},
            {"inside_gamma1", c.inside_gamma1},
            {"omega_gt_one", c.omega_gt_one},
            {"half_re_below_b2", c.half_re_below_b2},
            {"gain_product", c.gain_product}};
}

inline std::string localization_csv(const SpectrumReport& rep) {
    std::ostringstream os;
    os << "k,re_lambda_star,im_lambda_star,M,b,c,Rk,cond_Mneq1,cond_Mneq2,interval_ok,separated,inside_gamma1\n";
    for (std::size_t i = 0; i < rep.localization.size(); ++i) {
        const auto& c = rep.localization[i];
        if (!c) {
            os << i + 1 << ",,,,,,,0,0,0,0,0\n";
            continue;
        }
        os << c->k << ',' << fmt_num(c->lambda_star.real()) << ',' << fmt_num(c->lambda_star.imag()) << ','
           << fmt_num(c->M) << ',' << fmt_num(c->b) << ',' << fmt_num(c->c_const) << ',' << fmt_num(c->Rk) << ','
           << c->cond_Mneq1 << ',' << c->cond_Mneq2 << ',' << c->interval_ok << ',' << c->separated << ','
           << c->inside_gamma1 << '\n';
    }
    return os.str();
}

// ---- spectrum ---------------------------------------------------------------

inline json to_json(const EigenCertificate& e) {
    return {{"k", e.k},
            {"half", to_string(e.half)},
            {"lambda", cplx_json(e.lambda)},
            {"residual", e.residual},
            {"disk", {{"center", cplx_json(e.disk.center)}, {"radius", e.disk.radius}}},
            {"winding", e.winding},
            {"certified", e.certified},
            {"newton_iters", e.newton_iters},
            {"source", to_string(e.source)},
            {"note", e.note}};
}

inline json to_json(const SpectrumReport& r) {
    json eigs = json::array();
    for (const auto& e : r.eigs)
        eigs.push_back(to_json(e));
    return {{"count", r.eigs.size()},
            {"complete", r.complete},
            {"symmetry_defect", r.symmetry_defect},
            {"enclosure_defect", r.enclosure_defect},
            {"min_separation", num_or_null(r.min_separation)},
            {"failures", r.failures},
            {"eigenvalues", eigs}};
}

inline std::string spectrum_csv(const SpectrumReport& r) {
    std::ostringstream os;
    os << "k,half,re,im,residual,certified,winding\n";
    for (const auto& e : r.eigs)
        os << e.k << ',' << to_string(e.half) << ',' << fmt_num(e.lambda.real()) << ',' << fmt_num(e.lambda.imag())
           << ',' << fmt_num(e.residual) << ',' << e.certified << ',' << e.winding << '\n';
    return os.str();
}

/// Two-column scatter data of the spectrum.
inline std::string spectrum_plot_csv(const SpectrumReport& r) {
    std::ostringstream os;
    os << "re,im\n";
    for (const auto& e : r.eigs)
        os << fmt_num(e.lambda.real()) << ',' << fmt_num(e.lambda.imag()) << '\n';
    return os.str();
}

// ---- resolvent ----------------------------------------------------------------

inline std::string axis_scan_csv(const AxisScan& s) {
    std::ostringstream os;
    os << "s,norm_bound\n";
    for (const auto& p : s.samples)
        os << fmt_num(p.s) << ',' << fmt_num(p.norm_bound) << '\n';
    return os.str();
}

inline json to_json(const AxisScan& s, std::optional<double> alpha_expected) {
    json segs = json::array();
    for (const auto& g : s.segments)
        segs.push_back({{"k", g.k},
                        {"s_lo", g.s_lo},
                        {"s_hi", g.s_hi},
                        {"sup", g.sup},
                        {"sup_mirror", g.sup_mirror},
                        {"star_bound", g.star_bound},
                        {"bound_applies", g.bound_applies}});
    return {{"slope", s.alpha_fit.slope},
            {"intercept", s.alpha_fit.intercept},
            {"r2", s.alpha_fit.r2},
            {"alpha_expected", alpha_expected ? json(*alpha_expected) : json(nullptr)},
            {"segments", segs}};
}

// ---- modal ------------------------------------------------------------------

inline json to_json(const ModalBasis& b) {
    return {{"beta1", b.beta1},
            {"beta2", b.beta2},
            {"cond_Q", b.cond_Q},
            {"closeness_tail", b.closeness_tail()},
            {"factorization_residual", b.factorization_residual},
            {"closeness_increments", b.increments}};
}

/// Q as row-major complex pairs: little-endian IEEE-754 doubles, re then im.
inline std::string q_binary(const ModalBasis& b) {
    static_assert(std::numeric_limits<double>::is_iec559);
    std::string out;
    out.reserve(std::size_t(b.Q.size()) * 16);
    auto put = [&out](double v) {
        std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i)
            out.push_back(char((bits >> (8 * i)) & 0xff));
    };
    for (Eigen::Index r = 0; r < b.Q.rows(); ++r)
        for (Eigen::Index c = 0; c < b.Q.cols(); ++c) {
            put(b.Q(r, c).real());
            put(b.Q(r, c).imag());
        }
    return out;
}

// ---- dynamics -----------------------------------------------------------------

inline json to_json(const DecayFit& f) {
    json j = {{"exponent", f.exponent},
              {"prefactor", f.prefactor},
              {"window", {f.t_lo, f.t_hi}},
              {"r2", f.r2},
              {"r2_exponential", f.r2_exponential},
              {"polynomial", f.polynomial},
              {"clipped", f.clipped},
              {"mode", to_string(f.mode)},
              {"seed", f.seed ? json(*f.seed) : json(nullptr)}};
    if (f.beta_tilde)
        j["beta_tilde"] = *f.beta_tilde;
    if (f.monotone)
        j["monotone"] = *f.monotone;
    return j;
}

inline std::string trajectory_csv(const Trajectory& tr) {
    std::ostringstream os;
    os << "t,norm\n";
    for (const auto& p : tr.points)
        os << fmt_num(p.t) << ',' << fmt_num(p.norm) << '\n';
    return os.str();
}

inline std::string envelope_csv(const std::vector<double>& t, const std::vector<double>& e) {
    std::ostringstream os;
    os << "t,envelope\n";
    for (std::size_t i = 0; i < t.size(); ++i)
        os << fmt_num(t[i]) << ',' << fmt_num(e[i]) << '\n';
    return os.str();
}

// ---- files -------------------------------------------------------------------

/// Writes to a sibling temporary and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path())
        std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os)
            throw error("cannot open " + tmp.string() + " for writing");
        os.write(content.data(), std::streamsize(content.size()));
        if (!os)
            throw error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is)
        throw invalid_system("cannot read config " + path.string());
    try {
        return json::parse(is);
    } catch (const json::exception& e) {
        throw invalid_system("config is not valid JSON: " + std::string(e.what()));
    }
}

} // namespace polystab
