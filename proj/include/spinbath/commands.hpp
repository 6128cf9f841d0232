#pragma once

// The three command-line actions, writing to caller-supplied streams so they
// can be driven from tests as well as from the executable.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "spinbath/config.hpp"
#include "spinbath/diagnostics.hpp"
#include "spinbath/ensemble.hpp"

namespace spinbath {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitConfig = 2, kExitAborted = 3 };

// 16 significant digits, fixed layout, locale independent.
inline std::string format_real(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    std::array<char, 40> buf{};
    const auto r = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::scientific, 15);
    return std::string(buf.data(), r.ptr);
}

inline void write_row(std::ostream& out, std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
        if (!first)
            out << ',';
        out << format_real(v);
        first = false;
    }
    out << '\n';
}

inline void write_series_csv(std::ostream& out, const ObservableSeries& s) {
    out << "t,sigma_z,sigma_z_err,sigma_x,sigma_x_err,abs2_bohr,abs2_geo\n";
    for (std::size_t j = 0; j < s.size(); ++j)
        write_row(out, {s.times[j], s.sigma_z[j], s.sigma_z_err[j], s.sigma_x[j], s.sigma_x_err[j],
                        s.abs2_bohr[j], s.abs2_geo[j]});
}

inline int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    const ObservableSeries s = ensemble_average(cfg);
    if (!s.aborted.empty()) {
        err << "simulate: " << s.aborted.size() << " of " << s.samples << " samples aborted:";
        for (auto i : s.aborted)
            err << ' ' << i;
        err << '\n';
        return kExitAborted;
    }
    write_series_csv(out, s);
    return kExitOk;
}

// Initial spin of the trajectory command: cfg.initial_spin rescaled onto the
// sphere of radius p.radius.
inline SpinVector trajectory_start(const RunConfig& cfg) {
    const double scale = cfg.params.radius / cfg.initial_spin.norm();
    return {cfg.initial_spin.sx * scale, cfg.initial_spin.sy * scale, cfg.initial_spin.sz * scale};
}

inline int cmd_trajectory(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    validate(cfg);
    const ModelParams& p = cfg.params;
    const SpinVector s0 = trajectory_start(cfg);
    const std::size_t n = cfg.n_steps();
    const std::size_t stride = cfg.output_stride();
    std::string body;
    std::size_t k = 0;
    try {
        const Stepper stepper(cfg.surface, cfg.scheme, cfg.policy, s0, p);
        PhaseAccumulator phases(p, s0, cfg.dt);
        SpinVector s = s0;
        std::ostringstream rows;
        for (;; ++k) {
            if (k % stride == 0)
                write_row(rows, {static_cast<double>(k) * cfg.dt, s.sx, s.sy, s.sz,
                                 surface_hamiltonian(cfg.surface, s, p), s.norm2(), phases.bohr(),
                                 phases.geometric()});
            if (k == n)
                break;
            s = stepper.step(s, cfg.dt, k);
            if (!s.finite())
                throw error("non-finite spin");
            phases.push(s);
        }
        body = rows.str();
    } catch (const error& e) {
        err << "trajectory: integration aborted at step " << k << ": " << e.what() << '\n';
        return kExitAborted;
    }
    out << "t,Sx,Sy,Sz,H_surface,casimir,bohr,geometric\n" << body;
    return kExitOk;
}

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace detail {

inline CheckResult run_check(const std::string& name, const std::function<CheckResult()>& body) {
    try {
        CheckResult r = body();
        r.name = name;
        return r;
    } catch (const std::exception& e) {
        return {name, false, e.what()};
    }
}

inline std::string fmt_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

struct OrderPlan {
    double t_end;
    std::vector<double> taus;
    double expected;
    double tolerance;
};

inline OrderPlan order_plan(Scheme scheme) {
    switch (scheme) {
    case Scheme::Trotter: return {1.0, {0.02, 0.01, 0.005}, 2.0, 0.2};
    case Scheme::Yoshida4: return {1.0, {0.1, 0.05, 0.025, 0.0125}, 4.0, 0.3};
    case Scheme::Yoshida6: return {1.0, {0.2, 0.1, 0.05}, 6.0, 0.5};
    }
    return {};
}

}  // namespace detail

// Reversibility, convergence order, conservation and a reference-integrator
// comparison on every surface for the configured scheme and step.
inline std::vector<CheckResult> run_checks(const RunConfig& cfg) {
    validate(cfg);
    const ModelParams& p = cfg.params;
    const SpinVector s0 = trajectory_start(cfg);
    std::vector<CheckResult> out;
    for (Surface surf : kAllSurfaces) {
        const std::string tag = std::string(" ") + to_string(surf);
        out.push_back(detail::run_check("reversibility" + tag, [&] {
            const double d = reversibility_defect(s0, surf, p, cfg.dt, 10000, cfg.policy, cfg.scheme);
            return CheckResult{{}, d < 1e-9, "defect " + detail::fmt_short(d) + " (< 1e-09)"};
        }));
        out.push_back(detail::run_check("drift" + tag, [&] {
            const Trajectory t = integrate_trajectory(s0, surf, p, cfg.dt, cfg.n_steps(), cfg.policy, cfg.scheme);
            const DriftReport r = drift_report(t, p);
            const double energy_tol = surf == Surface::S12 ? 1e-8 : 1e-4;
            return CheckResult{{}, r.casimir_rel_drift < 1e-6 && r.energy_rel_drift < energy_tol,
                               "casimir " + detail::fmt_short(r.casimir_rel_drift) + " (< 1e-06), energy " +
                                   detail::fmt_short(r.energy_rel_drift) + " (< " +
                                   detail::fmt_short(energy_tol) + ")"};
        }));
        out.push_back(detail::run_check("order" + tag, [&] {
            const auto plan = detail::order_plan(cfg.scheme);
            const auto m = convergence_order(surf, cfg.scheme, cfg.policy, s0, p, plan.t_end, plan.taus);
            return CheckResult{{}, std::abs(m.slope - plan.expected) <= plan.tolerance,
                               "slope " + detail::fmt_short(m.slope) + " (" + detail::fmt_short(plan.expected) +
                                   " +- " + detail::fmt_short(plan.tolerance) + ")"};
        }));
        out.push_back(detail::run_check("oracle" + tag, [&] {
            const double t_end = std::min(cfg.t_end, 1.0);
            const auto n = static_cast<std::size_t>(std::llround(t_end / cfg.dt));
            const double t = static_cast<double>(n) * cfg.dt;
            const Stepper stepper(surf, cfg.scheme, cfg.policy, s0, p);
            SpinVector s = s0;
            for (std::size_t k = 0; k < n; ++k)
                s = stepper.step(s, cfg.dt, k);
            const SpinVector ref = surf == Surface::S12 ? mean_surface_exact(s0, p, t)
                                                        : reference_integrate(s0, surf, p, t, 1e-12).spins.back();
            const double d = max_abs_diff(s, ref);
            return CheckResult{{}, d < 1e-6, "deviation " + detail::fmt_short(d) + " at t=" +
                                                 detail::fmt_short(t) + " (< 1e-06)"};
        }));
    }
    return out;
}

inline int cmd_check(const RunConfig& cfg, std::ostream& out) {
    const auto results = run_checks(cfg);
    bool all = true;
    for (const auto& r : results) {
        out << (r.pass ? "PASS  " : "FAIL  ") << r.name << ": " << r.detail << '\n';
        all = all && r.pass;
    }
    try {
        const auto res = paper_frame_residuals(trajectory_start(cfg), cfg.params);
        out << "info  closed-form eigenvector residuals: " << detail::fmt_short(res.level1) << ", "
            << detail::fmt_short(res.level2) << '\n';
    } catch (const std::exception& e) {
        out << "info  closed-form eigenvectors unavailable: " << e.what() << '\n';
    }
    out << (all ? "all checks passed\n" : "some checks failed\n");
    return all ? kExitOk : kExitCheckFailed;
}

}  // namespace spinbath
