#pragma once

// Closed-form adiabatic structure of a two-level system coupled to a classical
// spin in a constant field along z:
//
//   H(S) = h(S) - c2 b Sz + Sz^2/2,   h(S) = -Omega sx - c1 b sz - mu S.sigma
//
// Units are dimensionless with hbar = 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <utility>

#include <Eigen/Core>

#include "spinbath/errors.hpp"

namespace spinbath {

using complex = std::complex<double>;
using Matrix2c = Eigen::Matrix2cd;
using Vector2c = Eigen::Vector2cd;

inline constexpr double kGapEpsilon = 1e-12;

struct SpinVector {
    double sx = 0.0;
    double sy = 0.0;
    double sz = 0.0;

    constexpr double norm2() const noexcept { return sx * sx + sy * sy + sz * sz; }
    double norm() const noexcept { return std::sqrt(norm2()); }
    bool finite() const noexcept {
        return std::isfinite(sx) && std::isfinite(sy) && std::isfinite(sz);
    }
    constexpr double operator[](int i) const noexcept { return i == 0 ? sx : (i == 1 ? sy : sz); }

    friend constexpr bool operator==(const SpinVector&, const SpinVector&) = default;
};

inline double max_abs_diff(const SpinVector& a, const SpinVector& b) noexcept {
    return std::max({std::abs(a.sx - b.sx), std::abs(a.sy - b.sy), std::abs(a.sz - b.sz)});
}

struct ModelParams {
    double omega = 1.0;
    double b = 1.0;
    double c1 = 0.01;
    double c2 = 0.1;
    double mu = 0.25;
    double beta = 0.3;
    double radius = 1.0;

    bool valid() const noexcept {
        return std::isfinite(omega) && std::isfinite(b) && std::isfinite(c1) && std::isfinite(c2) &&
               std::isfinite(mu) && std::isfinite(beta) && std::isfinite(radius) && beta > 0.0 &&
               radius > 0.0;
    }

    // Omega^2 + c1^2 b^2 + mu^2 |S|^2 for a spin of squared length s2.
    double c_squared(double s2) const noexcept {
        return omega * omega + c1 * c1 * b * b + mu * mu * s2;
    }
};

// The (2,1) surface carries the same classical flow as (1,2).
enum class Surface { S11, S22, S12 };

inline constexpr std::array<Surface, 3> kAllSurfaces{Surface::S11, Surface::S22, Surface::S12};

inline const char* to_string(Surface s) noexcept {
    switch (s) {
    case Surface::S11: return "S11";
    case Surface::S22: return "S22";
    case Surface::S12: return "S12";
    }
    return "?";
}

// +1 on (1,1), -1 on (2,2), 0 on the mean surface: the weight of the level
// energy in H_{aa'}.
constexpr double gap_sign(Surface s) noexcept {
    return s == Surface::S11 ? 1.0 : (s == Surface::S22 ? -1.0 : 0.0);
}

struct AdiabaticScalars {
    double gamma = 0.0;        // c1 b + mu Sz
    double eta = 0.0;          // -mu Sy
    double omega_tilde = 0.0;  // Omega + mu Sx
    double gap = 0.0;          // sqrt(omega_tilde^2 + gamma^2 + eta^2)
};

inline AdiabaticScalars adiabatic_scalars(const SpinVector& s, const ModelParams& p) noexcept {
    AdiabaticScalars a;
    a.gamma = p.c1 * p.b + p.mu * s.sz;
    a.eta = -p.mu * s.sy;
    a.omega_tilde = p.omega + p.mu * s.sx;
    a.gap = std::sqrt(a.omega_tilde * a.omega_tilde + a.gamma * a.gamma + a.eta * a.eta);
    return a;
}

inline Matrix2c hamiltonian_matrix(const SpinVector& s, const ModelParams& p) {
    const auto a = adiabatic_scalars(s, p);
    Matrix2c h;
    h(0, 0) = -a.gamma;
    h(1, 1) = a.gamma;
    h(0, 1) = complex(-a.omega_tilde, -a.eta);
    h(1, 0) = complex(-a.omega_tilde, a.eta);
    return h;
}

inline Matrix2c pauli(int which) {
    Matrix2c m;
    switch (which) {
    case 0: m << 0.0, 1.0, 1.0, 0.0; break;
    case 1: m << 0.0, complex(0.0, -1.0), complex(0.0, 1.0), 0.0; break;
    default: m << 1.0, 0.0, 0.0, -1.0; break;
    }
    return m;
}

struct AdiabaticFrame {
    double e1 = 0.0;
    double e2 = 0.0;
    Vector2c v1;
    Vector2c v2;

    // Columns are the eigenvectors; V^dag A V takes an operator to the
    // adiabatic basis.
    Matrix2c basis() const {
        Matrix2c v;
        v.col(0) = v1;
        v.col(1) = v2;
        return v;
    }
};

namespace detail {

// Unit eigenvector of the Hermitian [[a, c], [conj(c), d]] for eigenvalue
// lambda, picked from the better conditioned of the two null-space candidates.
inline Vector2c hermitian_eigenvector(double a, complex c, double d, double lambda) {
    Vector2c u(c, complex(lambda - a));
    Vector2c w(complex(lambda - d), std::conj(c));
    Vector2c v = u.squaredNorm() >= w.squaredNorm() ? u : w;
    return v / v.norm();
}

// Largest-magnitude component real and positive.
inline Vector2c fix_gauge_largest(Vector2c v) {
    const int k = std::abs(v(0)) >= std::abs(v(1)) ? 0 : 1;
    return v * (std::abs(v(k)) / v(k));
}

}  // namespace detail

// Eigen-decomposition of h(S) with e1 = +gap, e2 = -gap.
inline AdiabaticFrame adiabatic_frame(const SpinVector& s, const ModelParams& p,
                                      double gap_epsilon = kGapEpsilon) {
    const auto a = adiabatic_scalars(s, p);
    if (!(a.gap >= gap_epsilon))
        throw DegenerateGap(a.gap);
    const complex c(-a.omega_tilde, -a.eta);
    AdiabaticFrame f;
    f.e1 = a.gap;
    f.e2 = -a.gap;
    f.v1 = detail::fix_gauge_largest(detail::hermitian_eigenvector(-a.gamma, c, a.gamma, f.e1));
    f.v2 = detail::fix_gauge_largest(detail::hermitian_eigenvector(-a.gamma, c, a.gamma, f.e2));
    return f;
}

// Eigenvector expressions in the form G~ = G + i eta/gamma,
// G = (-Omega~ + gap)/gamma. Only defined for gamma != 0. Diagnostic use:
// these are orthonormal but are not eigenvectors of h(S) when gamma
// dominates, so they never enter the dynamics.
inline std::pair<Vector2c, Vector2c> paper_eigenvectors(const SpinVector& s, const ModelParams& p) {
    const auto a = adiabatic_scalars(s, p);
    if (a.gamma == 0.0)
        throw DegenerateGap(0.0);
    const double g = (-a.omega_tilde + a.gap) / a.gamma;
    const complex gt(g, a.eta / a.gamma);
    const double norm = std::sqrt(2.0 * (1.0 + std::norm(gt)));
    Vector2c v1(1.0 + std::conj(gt), gt - 1.0);
    Vector2c v2(1.0 - std::conj(gt), 1.0 + gt);
    return {v1 / norm, v2 / norm};
}

struct FrameResiduals {
    double level1 = 0.0;  // ||h v1 - e1 v1||
    double level2 = 0.0;
};

inline FrameResiduals paper_frame_residuals(const SpinVector& s, const ModelParams& p) {
    const auto [v1, v2] = paper_eigenvectors(s, p);
    const Matrix2c h = hamiltonian_matrix(s, p);
    const double gap = adiabatic_scalars(s, p).gap;
    return {(h * v1 - gap * v1).norm(), (h * v2 + gap * v2).norm()};
}

inline double bath_energy(const SpinVector& s, const ModelParams& p) noexcept {
    return 0.5 * s.sz * s.sz - p.c2 * p.b * s.sz;
}

inline double surface_hamiltonian(Surface surf, const SpinVector& s, const ModelParams& p) noexcept {
    return bath_energy(s, p) + gap_sign(surf) * adiabatic_scalars(s, p).gap;
}

// (dH/dSx, dH/dSy, dH/dSz). With C^2 = Omega^2 + c1^2 b^2 + mu^2 |S|^2 the
// gap reads sqrt(C^2 + 2 mu (Omega Sx + c1 b Sz)).
inline std::array<double, 3> surface_gradient(Surface surf, const SpinVector& s, const ModelParams& p,
                                              double gap_epsilon = kGapEpsilon) {
    const double dz_bath = s.sz - p.c2 * p.b;
    if (surf == Surface::S12)
        return {0.0, 0.0, dz_bath};
    const double r2 = p.c_squared(s.norm2()) + 2.0 * p.mu * (p.omega * s.sx + p.c1 * p.b * s.sz);
    const double r = std::sqrt(std::max(r2, 0.0));
    if (!(r >= gap_epsilon))
        throw DegenerateGap(r);
    const double k = gap_sign(surf) * p.mu / r;
    return {k * (p.omega + p.mu * s.sx), k * p.mu * s.sy, dz_bath + k * (p.c1 * p.b + p.mu * s.sz)};
}

// Coefficients of the analytically integrable sub-flows. c_squared is the
// cached Omega^2 + c1^2 b^2 + mu^2 |S0|^2 of the trajectory.
//   dSx/dt = +-C3 / sqrt(C2 + C1 Sx),   dSz/dt = +-B3 / sqrt(B2 + B1 Sz)
struct SplitCoeffs {
    double c1c = 0.0;
    double c2c = 0.0;
    double c3c = 0.0;
    double b1c = 0.0;
    double b2c = 0.0;
    double b3c = 0.0;
};

inline SplitCoeffs split_coeffs(const SpinVector& s, const ModelParams& p, double c_squared) noexcept {
    const double mu = p.mu;
    const double c1b = p.c1 * p.b;
    SplitCoeffs k;
    k.c1c = 2.0 * mu * p.omega;
    k.c2c = c_squared + 2.0 * mu * c1b * s.sz;
    // mu^2 Sy Sz - mu Sy (c1 b + mu Sz)
    k.c3c = -mu * c1b * s.sy;
    k.b1c = 2.0 * mu * c1b;
    k.b2c = c_squared + 2.0 * mu * p.omega * s.sx;
    // mu (Omega + mu Sx) Sy - mu^2 Sx Sy
    k.b3c = mu * p.omega * s.sy;
    return k;
}

inline SplitCoeffs split_coeffs(const SpinVector& s, const ModelParams& p) noexcept {
    return split_coeffs(s, p, p.c_squared(s.norm2()));
}

enum class GaugeAnchor { First, Second };

namespace detail {

inline Vector2c anchor_gauge(Vector2c v, GaugeAnchor anchor) {
    const int k = anchor == GaugeAnchor::First ? 0 : 1;
    const double m = std::abs(v(k));
    if (m < 1e-8)
        throw DegenerateGap(m);  // anchor component vanishes: gauge undefined here
    return v * (m / v(k));
}

}  // namespace detail

struct BerryConnection {
    std::array<double, 3> level1{};  // Phi^I_11
    std::array<double, 3> level2{};  // Phi^I_22
};

// Phi^I_aa = -i <a|d/dS_I|a> by central differences, in the smooth gauge where
// the anchor component of each eigenvector is real and positive. The
// connection is gauge dependent; only loop integrals are physical.
inline BerryConnection berry_connection(const SpinVector& s, const ModelParams& p, double step = 1e-6,
                                        GaugeAnchor anchor = GaugeAnchor::First) {
    const auto frame0 = adiabatic_frame(s, p);
    const Vector2c c1 = detail::anchor_gauge(frame0.v1, anchor);
    const Vector2c c2 = detail::anchor_gauge(frame0.v2, anchor);
    BerryConnection out;
    for (int axis = 0; axis < 3; ++axis) {
        SpinVector plus = s;
        SpinVector minus = s;
        double* pp = axis == 0 ? &plus.sx : (axis == 1 ? &plus.sy : &plus.sz);
        double* pm = axis == 0 ? &minus.sx : (axis == 1 ? &minus.sy : &minus.sz);
        *pp += step;
        *pm -= step;
        const auto fp = adiabatic_frame(plus, p);
        const auto fm = adiabatic_frame(minus, p);
        const Vector2c d1 =
            (detail::anchor_gauge(fp.v1, anchor) - detail::anchor_gauge(fm.v1, anchor)) / (2.0 * step);
        const Vector2c d2 =
            (detail::anchor_gauge(fp.v2, anchor) - detail::anchor_gauge(fm.v2, anchor)) / (2.0 * step);
        const complex o1 = c1.dot(d1);  // dot() conjugates the left operand
        const complex o2 = c2.dot(d2);
        if (std::abs(o1.real()) > 1e-8 || std::abs(o2.real()) > 1e-8)
            throw error("berry_connection: <v|dv> has a real part; eigenvectors lost normalization");
        out.level1[axis] = o1.imag();
        out.level2[axis] = o2.imag();
    }
    return out;
}

}  // namespace spinbath
