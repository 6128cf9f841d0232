#pragma once

// Initial conditions: the subsystem density matrix in the sigma_z and
// adiabatic bases, and importance sampling of the classical spin on a sphere.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "spinbath/model.hpp"

namespace spinbath {

inline constexpr double kGammaEpsilon = 1e-8;

// Hermitian, unit trace.
struct DensityMatrix2 {
    Matrix2c m = Matrix2c::Zero();

    complex operator()(int i, int j) const { return m(i, j); }
    double trace() const { return m.trace().real(); }
};

// |Psi> = (2|1> - |2>)/sqrt(5) in the sigma_z basis.
inline DensityMatrix2 rho_subsystem() {
    DensityMatrix2 r;
    r.m << 4.0 / 5.0, -2.0 / 5.0, -2.0 / 5.0, 1.0 / 5.0;
    return r;
}

inline DensityMatrix2 to_adiabatic(const DensityMatrix2& rho, const AdiabaticFrame& frame) {
    const Matrix2c v = frame.basis();
    return {v.adjoint() * rho.m * v};
}

// rho_s in the adiabatic basis of adiabatic_frame(s): the basis the
// observables are evaluated in.
inline DensityMatrix2 rho_adiabatic(const SpinVector& s, const ModelParams& p) {
    return to_adiabatic(rho_subsystem(), adiabatic_frame(s, p));
}

// Closed form in terms of G = (-Omega~ + gap)/gamma, valid in the basis of
// paper_eigenvectors(). Falls back to rho_adiabatic when |gamma| < eps.
inline DensityMatrix2 rho_adiabatic_closed_form(const SpinVector& s, const ModelParams& p,
                                                double gamma_epsilon = kGammaEpsilon) {
    const auto a = adiabatic_scalars(s, p);
    if (std::abs(a.gamma) < gamma_epsilon)
        return rho_adiabatic(s, p);
    const double g = (-a.omega_tilde + a.gap) / a.gamma;
    const double e = a.eta / a.gamma;
    const double n = 2.0 * (1.0 + g * g + e * e);
    const double r11 = ((3.0 + g) * (3.0 + g) + 9.0 * e * e) / 5.0;
    const double r22 = ((1.0 - 3.0 * g) * (1.0 - 3.0 * g) + e * e) / 5.0;
    const complex r12 = complex(3.0 + g, 3.0 * e) * complex(1.0 - 3.0 * g, e) / 5.0;
    DensityMatrix2 r;
    r.m << r11 / n, r12 / n, std::conj(r12) / n, r22 / n;
    return r;
}

// Deterministic per-sample random stream keyed by (seed, index), so samples
// can be drawn in any order by any number of workers.
class SampleStream {
public:
    SampleStream(std::uint64_t seed, std::uint64_t index) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
        engine_.seed(seq);
    }

    // Uniform on [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 engine_;
};

struct WeightedSample {
    SpinVector spin;
    double weight = 1.0;
};

// cos(theta) ~ U(-1, 1), phi ~ U(0, 2 pi) on the sphere of radius p.radius,
// weighted by exp(-beta * scale * Sz^2 / 2). Estimators must be
// self-normalized by the weight sum.
inline WeightedSample sample_initial_spin(SampleStream& rng, const ModelParams& p, double weight_scale = 1.0) {
    const double cos_theta = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
    WeightedSample out;
    out.spin = {p.radius * sin_theta * std::cos(phi), p.radius * sin_theta * std::sin(phi),
                p.radius * cos_theta};
    out.weight = std::exp(-0.5 * p.beta * weight_scale * out.spin.sz * out.spin.sz);
    return out;
}

}  // namespace spinbath
