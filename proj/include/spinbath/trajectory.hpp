#pragma once

#include <cstddef>
#include <vector>

#include "spinbath/errors.hpp"
#include "spinbath/phases.hpp"
#include "spinbath/splitting.hpp"

namespace spinbath {

struct Trajectory {
    Surface surface = Surface::S11;
    Scheme scheme = Scheme::Trotter;
    VariantPolicy policy = VariantPolicy::cycle();
    double dt = 0.0;
    std::vector<double> times;
    std::vector<SpinVector> spins;
    PhaseSeries phases;

    std::size_t size() const noexcept { return spins.size(); }
};

// Stores every step. Phase integrals are co-accumulated along the way.
inline Trajectory integrate_trajectory(const SpinVector& s0, Surface surf, const ModelParams& p, double tau,
                                       std::size_t n_steps, VariantPolicy policy = VariantPolicy::cycle(),
                                       Scheme scheme = Scheme::Trotter) {
    if (!(tau > 0.0))
        throw error("integrate_trajectory: tau must be positive");
    if (!s0.finite())
        throw error("integrate_trajectory: initial spin is not finite");
    Trajectory traj;
    traj.surface = surf;
    traj.scheme = scheme;
    traj.policy = policy;
    traj.dt = tau;
    traj.times.reserve(n_steps + 1);
    traj.spins.reserve(n_steps + 1);
    traj.phases.bohr.reserve(n_steps + 1);
    traj.phases.geometric.reserve(n_steps + 1);

    const Stepper stepper(surf, scheme, policy, s0, p);
    SpinVector s = s0;
    std::size_t k = 0;
    try {
        PhaseAccumulator phases(p, s0, tau);
        traj.times.push_back(0.0);
        traj.spins.push_back(s);
        traj.phases.bohr.push_back(0.0);
        traj.phases.geometric.push_back(0.0);
        for (; k < n_steps; ++k) {
            s = stepper.step(s, tau, k);
            if (!s.finite())
                throw error("non-finite spin");
            phases.push(s);
            traj.times.push_back(static_cast<double>(k + 1) * tau);
            traj.spins.push_back(s);
            traj.phases.bohr.push_back(phases.bohr());
            traj.phases.geometric.push_back(phases.geometric());
        }
    } catch (const IntegrationAborted&) {
        throw;
    } catch (const error& e) {
        throw IntegrationAborted(k, e.what());
    }
    return traj;
}

inline PhaseSeries accumulate_phases(const Trajectory& traj, const ModelParams& p) {
    if (traj.spins.empty())
        throw error("accumulate_phases: empty trajectory");
    return accumulate_phases(traj.spins, traj.dt, p);
}

}  // namespace spinbath
