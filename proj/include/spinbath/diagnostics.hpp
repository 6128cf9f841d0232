#pragma once

// Conservation, reversibility and convergence-order measurements, plus the
// independent adaptive integrator they are checked against.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "spinbath/errors.hpp"
#include "spinbath/model.hpp"
#include "spinbath/splitting.hpp"
#include "spinbath/trajectory.hpp"

namespace spinbath {

// dS_I/dt = eps_IJK S_K dH/dS_J, i.e. dS/dt = grad H x S.
inline SpinVector spin_velocity(Surface surf, const SpinVector& s, const ModelParams& p) {
    const auto g = surface_gradient(surf, s, p);
    return {s.sz * g[1] - s.sy * g[2], s.sx * g[2] - s.sz * g[0], s.sy * g[0] - s.sx * g[1]};
}

struct ReferenceSolution {
    std::vector<double> times;
    std::vector<SpinVector> spins;
};

// Adaptive Runge-Kutta-Fehlberg 7(8) on the full equations of motion with
// absolute and relative tolerance `tol`. Step sizes are clipped so the
// integrator lands on every requested time; no interpolation is involved.
inline ReferenceSolution reference_integrate(const SpinVector& s0, Surface surf, const ModelParams& p,
                                             std::span<const double> times, double tol) {
    namespace ode = boost::numeric::odeint;
    using state = std::array<double, 3>;
    if (!(tol >= 1e-14 && tol <= 1e-6))
        throw error("reference_integrate: tol must lie in [1e-14, 1e-6]");
    ReferenceSolution out;
    if (times.empty())
        return out;
    out.times.assign(times.begin(), times.end());
    out.spins.reserve(times.size());

    auto rhs = [&](const state& x, state& dxdt, double) {
        const auto v = spin_velocity(surf, {x[0], x[1], x[2]}, p);
        dxdt = {v.sx, v.sy, v.sz};
    };
    auto observe = [&](const state& x, double) { out.spins.push_back({x[0], x[1], x[2]}); };
    state x{s0.sx, s0.sy, s0.sz};
    // Absolute per-step tolerance: |S| is O(radius), and a relative term would double the allowed error.
    auto stepper = ode::make_controlled(tol, 0.0, ode::runge_kutta_fehlberg78<state>());
    try {
        ode::integrate_times(stepper, rhs, x, times.begin(), times.end(), 1e-3, observe,
                             ode::max_step_checker(1'000'000));
    } catch (const DegenerateGap&) {
        throw;
    } catch (const std::exception& e) {
        throw StiffnessFailure(std::string("reference_integrate: ") + e.what());
    }
    return out;
}

inline ReferenceSolution reference_integrate(const SpinVector& s0, Surface surf, const ModelParams& p,
                                             double t_end, double tol, std::size_t intervals = 1) {
    std::vector<double> times(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i)
        times[i] = t_end * static_cast<double>(i) / static_cast<double>(intervals);
    return reference_integrate(s0, surf, p, times, tol);
}

// Exact mean-surface solution: rotation about z at rate Sz - c2 b.
inline SpinVector mean_surface_exact(const SpinVector& s0, const ModelParams& p, double t) {
    const double angle = (s0.sz - p.c2 * p.b) * t;
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {s0.sx * c - s0.sy * s, s0.sx * s + s0.sy * c, s0.sz};
}

// Runs indices n-1 ... 0 backwards with -tau from `end`.
inline SpinVector integrate_backward(const Stepper& stepper, SpinVector s, double tau, std::size_t n_steps) {
    for (std::size_t k = n_steps; k-- > 0;)
        s = stepper.step(s, -tau, k);
    return s;
}

// Max per-component error after n_steps forward and the same steps backward.
inline double reversibility_defect(const SpinVector& s0, Surface surf, const ModelParams& p, double tau,
                                   std::size_t n_steps, VariantPolicy policy, Scheme scheme) {
    const Stepper stepper(surf, scheme, policy, s0, p);
    SpinVector s = s0;
    for (std::size_t k = 0; k < n_steps; ++k)
        s = stepper.step(s, tau, k);
    return max_abs_diff(integrate_backward(stepper, s, tau, n_steps), s0);
}

struct DriftReport {
    double casimir_rel_drift = 0.0;
    double energy_rel_drift = 0.0;   // relative to |H(0)|; absolute when H(0) == 0
    double reversibility_defect = 0.0;
    double measured_order = 0.0;     // filled by convergence_order; 0 when not measured
};

inline DriftReport drift_report(const Trajectory& traj, const ModelParams& p) {
    DriftReport r;
    if (traj.spins.size() < 2)
        return r;
    const SpinVector& s0 = traj.spins.front();
    const double c0 = s0.norm2();
    const double h0 = surface_hamiltonian(traj.surface, s0, p);
    const double h_scale = h0 != 0.0 ? std::abs(h0) : 1.0;
    for (const auto& s : traj.spins) {
        r.casimir_rel_drift = std::max(r.casimir_rel_drift, std::abs(s.norm2() - c0) / c0);
        r.energy_rel_drift =
            std::max(r.energy_rel_drift, std::abs(surface_hamiltonian(traj.surface, s, p) - h0) / h_scale);
    }
    const Stepper stepper(traj.surface, traj.scheme, traj.policy, s0, p);
    const SpinVector back = integrate_backward(stepper, traj.spins.back(), traj.dt, traj.spins.size() - 1);
    r.reversibility_defect = max_abs_diff(back, s0);
    return r;
}

struct OrderMeasurement {
    double slope = 0.0;
    std::vector<double> taus;
    std::vector<double> errors;
};

// Least-squares slope of log(error at t_end) against log(tau). The reference
// is the closed-form rotation on the mean surface and reference_integrate at
// tol = 1e-13 elsewhere.
inline OrderMeasurement convergence_order(Surface surf, Scheme scheme, VariantPolicy policy, const SpinVector& s0,
                                          const ModelParams& p, double t_end, std::span<const double> taus) {
    if (taus.size() < 3)
        throw error("convergence_order: need at least three step sizes");
    const SpinVector exact = surf == Surface::S12 ? mean_surface_exact(s0, p, t_end)
                                                  : reference_integrate(s0, surf, p, t_end, 1e-13).spins.back();
    OrderMeasurement m;
    m.taus.assign(taus.begin(), taus.end());
    for (double tau : taus) {
        const auto n = static_cast<std::size_t>(std::llround(t_end / tau));
        const Stepper stepper(surf, scheme, policy, s0, p);
        SpinVector s = s0;
        for (std::size_t k = 0; k < n; ++k)
            s = stepper.step(s, tau, k);
        m.errors.push_back(max_abs_diff(s, exact));
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double n = static_cast<double>(taus.size());
    for (std::size_t i = 0; i < taus.size(); ++i) {
        const double lx = std::log(m.taus[i]);
        const double ly = std::log(m.errors[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    m.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return m;
}

}  // namespace spinbath
