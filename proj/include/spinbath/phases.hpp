#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "spinbath/model.hpp"

namespace spinbath {

// omega_12 = (E1 - E2)/hbar = 2 gap.
inline double bohr_frequency(const SpinVector& s, const ModelParams& p) noexcept {
    return 2.0 * adiabatic_scalars(s, p).gap;
}

enum class PauliAxis { X = 0, Y = 1, Z = 2 };

// V^dag sigma V with V = [v1 v2] from adiabatic_frame.
inline Matrix2c pauli_adiabatic(PauliAxis which, const AdiabaticFrame& frame) {
    const Matrix2c v = frame.basis();
    return v.adjoint() * pauli(static_cast<int>(which)) * v;
}

inline Matrix2c pauli_adiabatic(PauliAxis which, const SpinVector& s, const ModelParams& p) {
    return pauli_adiabatic(which, adiabatic_frame(s, p));
}

// Phase integrals along a trajectory, one entry per stored point.
//   bohr[k]      = int_0^{t_k} omega_12 dt
//   geometric[k] = int_0^{t_k} Im(<1|d/dt|1> - <2|d/dt|2>) dt
struct PhaseSeries {
    std::vector<double> bohr;
    std::vector<double> geometric;
};

// arg<1_a|1_b> - arg<2_a|2_b>: one Pancharatnam step of the geometric phase.
// Sums of increments around a closed path do not depend on the gauge.
inline double pancharatnam_increment(const AdiabaticFrame& a, const AdiabaticFrame& b) {
    return std::arg(a.v1.dot(b.v1)) - std::arg(a.v2.dot(b.v2));
}

// Streaming accumulation: trapezoidal Bohr integral and Pancharatnam
// (discrete overlap) geometric phase, which is gauge invariant.
class PhaseAccumulator {
public:
    PhaseAccumulator(const ModelParams& p, const SpinVector& s0, double dt)
        : params_(p), dt_(dt), frame_(adiabatic_frame(s0, p)), omega_(2.0 * frame_.e1) {}

    void push(const SpinVector& s) {
        AdiabaticFrame next = adiabatic_frame(s, params_);
        const double omega = 2.0 * next.e1;
        bohr_ += 0.5 * dt_ * (omega_ + omega);
        geometric_ += pancharatnam_increment(frame_, next);
        frame_ = std::move(next);
        omega_ = omega;
    }

    double bohr() const noexcept { return bohr_; }
    double geometric() const noexcept { return geometric_; }
    const AdiabaticFrame& frame() const noexcept { return frame_; }

private:
    ModelParams params_;
    double dt_;
    AdiabaticFrame frame_;
    double omega_;
    double bohr_ = 0.0;
    double geometric_ = 0.0;
};

inline PhaseSeries accumulate_phases(std::span<const SpinVector> spins, double dt, const ModelParams& p) {
    PhaseSeries out;
    if (spins.empty())
        return out;
    out.bohr.reserve(spins.size());
    out.geometric.reserve(spins.size());
    PhaseAccumulator acc(p, spins.front(), dt);
    out.bohr.push_back(0.0);
    out.geometric.push_back(0.0);
    for (std::size_t k = 1; k < spins.size(); ++k) {
        acc.push(spins[k]);
        out.bohr.push_back(acc.bohr());
        out.geometric.push_back(acc.geometric());
    }
    return out;
}

}  // namespace spinbath
