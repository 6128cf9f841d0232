#pragma once

// Symmetric Trotter splittings of the spin flow dS/dt = B(S) grad H_{aa'} on
// each adiabatic surface, built from exactly integrable one-component maps,
// and their Yoshida compositions.

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "spinbath/errors.hpp"
#include "spinbath/model.hpp"

namespace spinbath {

inline constexpr double kLinearEpsilon = 1e-12;

enum class StepVariant { U1, U2, U3 };

enum class Scheme { Trotter, Yoshida4, Yoshida6 };

inline const char* to_string(Scheme s) noexcept {
    switch (s) {
    case Scheme::Trotter: return "trotter";
    case Scheme::Yoshida4: return "yoshida4";
    case Scheme::Yoshida6: return "yoshida6";
    }
    return "?";
}

// Order of the global error.
constexpr int scheme_order(Scheme s) noexcept {
    return s == Scheme::Trotter ? 2 : (s == Scheme::Yoshida4 ? 4 : 6);
}

// (1,2) admits only U1 and U2.
constexpr int variant_count(Surface s) noexcept { return s == Surface::S12 ? 2 : 3; }

struct VariantPolicy {
    enum class Kind { Fixed, Cycle };

    Kind kind = Kind::Cycle;
    StepVariant fixed = StepVariant::U1;

    static constexpr VariantPolicy cycle() noexcept { return {Kind::Cycle, StepVariant::U1}; }
    static constexpr VariantPolicy fixed_variant(StepVariant v) noexcept { return {Kind::Fixed, v}; }

    // Variant used for step number `step` (0-based).
    constexpr StepVariant at(Surface surf, std::size_t step) const noexcept {
        if (kind == Kind::Fixed)
            return fixed;
        return static_cast<StepVariant>(step % static_cast<std::size_t>(variant_count(surf)));
    }

    friend constexpr bool operator==(const VariantPolicy&, const VariantPolicy&) = default;
};

// Model parameters plus the Casimir-derived C^2 held fixed along a trajectory.
struct SplitContext {
    ModelParams params;
    double c_squared = 0.0;

    static SplitContext for_spin(const SpinVector& s0, const ModelParams& p) noexcept {
        return {p, p.c_squared(s0.norm2())};
    }
};

namespace detail {

// (1 + u)^{2/3} - 1 without cancellation. The binomial series truncated after
// u^6 is exact to round-off for |u| < 1e-3, which covers every step at
// physical parameters and avoids two transcendental calls.
inline double pow_two_thirds_minus_one(double u) noexcept {
    if (std::abs(u) < 1e-3) {
        constexpr double k1 = 2.0 / 3.0, k2 = -1.0 / 9.0, k3 = 4.0 / 81.0, k4 = -7.0 / 243.0,
                         k5 = 14.0 / 729.0, k6 = -91.0 / 6561.0;
        return u * (k1 + u * (k2 + u * (k3 + u * (k4 + u * (k5 + u * k6)))));
    }
    return std::expm1((2.0 / 3.0) * std::log1p(u));
}

// Advance y under dy/dt = k / sqrt(a + c y), where a + c y >= 0. The closed form
// (a + c y)^{3/2} -> (a + c y)^{3/2} + (3/2) c k tau is evaluated through
// log1p/expm1 so that small c does not cancel catastrophically.
inline double sqrt_flow(double y, double a, double c, double k, double tau, const char* name) {
    const double x = a + c * y;
    if (!(x > kGapEpsilon * kGapEpsilon))
        throw DegenerateGap(std::sqrt(std::max(x, 0.0)));
    const double root = std::sqrt(x);
    if (std::abs(c) < kLinearEpsilon)
        return y + tau * k / root;
    const double u = 1.5 * c * k * tau / (x * root);
    if (!(u > -1.0))
        throw BranchViolation(std::string(name) + ": step leaves the analytic branch");
    return y + x * pow_two_thirds_minus_one(u) / c;
}

}  // namespace detail

// Exact flow of dSx/dt = +-C3 / sqrt(C2 + C1 Sx) (+ on S11, - on S22).
inline SpinVector flow_sx_nonlinear(Surface surf, SpinVector s, double tau, const SplitCoeffs& k) {
    if (surf == Surface::S12)
        throw error("flow_sx_nonlinear: not defined on the mean surface");
    s.sx = detail::sqrt_flow(s.sx, k.c2c, k.c1c, gap_sign(surf) * k.c3c, tau, "flow_sx_nonlinear");
    return s;
}

// Exact flow of dSz/dt = +-B3 / sqrt(B2 + B1 Sz).
inline SpinVector flow_sz_nonlinear(Surface surf, SpinVector s, double tau, const SplitCoeffs& k) {
    if (surf == Surface::S12)
        throw error("flow_sz_nonlinear: not defined on the mean surface");
    s.sz = detail::sqrt_flow(s.sz, k.b2c, k.b1c, gap_sign(surf) * k.b3c, tau, "flow_sz_nonlinear");
    return s;
}

enum class ShiftAxis {
    SxPrecession,  // Sx -> Sx - tau Sy (Sz - c2 b), every surface
    Sy,            // Sy -> Sy + tau dSy/dt; depends on Sx, Sz only
};

inline SpinVector flow_shift(Surface surf, ShiftAxis axis, SpinVector s, double tau, const ModelParams& p,
                             double c_squared) {
    const double precession = s.sz - p.c2 * p.b;
    if (axis == ShiftAxis::SxPrecession) {
        s.sx -= tau * s.sy * precession;
        return s;
    }
    double rate = s.sx * precession;
    if (surf != Surface::S12) {
        const double r2 = c_squared + 2.0 * p.mu * (p.omega * s.sx + p.c1 * p.b * s.sz);
        if (!(r2 > kGapEpsilon * kGapEpsilon))
            throw DegenerateGap(std::sqrt(std::max(r2, 0.0)));
        // mu Sx (c1 b + mu Sz) - mu (Omega + mu Sx) Sz
        const double coupling = p.mu * (p.c1 * p.b * s.sx - p.omega * s.sz);
        rate += gap_sign(surf) * coupling / std::sqrt(r2);
    }
    s.sy += tau * rate;
    return s;
}

namespace detail {

enum class Map { X1, X2, Y, Z };

struct Substep {
    Map map;
    double fraction;
};

using Sequence = std::array<Substep, 9>;

// Palindromic sequences on (1,1) and (2,2). X1: nonlinear Sx flow, X2: Sx
// precession shift, Y: Sy shift, Z: nonlinear Sz flow.
inline constexpr std::array<Sequence, 3> kLevelSequences{{
    {{{Map::X1, 0.25}, {Map::X2, 0.5}, {Map::X1, 0.25},
      {Map::Y, 0.5}, {Map::Z, 1.0}, {Map::Y, 0.5},
      {Map::X1, 0.25}, {Map::X2, 0.5}, {Map::X1, 0.25}}},
    {{{Map::Z, 0.5}, {Map::X1, 0.25}, {Map::X2, 0.5},
      {Map::X1, 0.25}, {Map::Y, 1.0}, {Map::X1, 0.25},
      {Map::X2, 0.5}, {Map::X1, 0.25}, {Map::Z, 0.5}}},
    {{{Map::Y, 0.25}, {Map::Z, 0.5}, {Map::Y, 0.25},
      {Map::X1, 0.5}, {Map::X2, 1.0}, {Map::X1, 0.5},
      {Map::Y, 0.25}, {Map::Z, 0.5}, {Map::Y, 0.25}}},
}};

inline SpinVector apply(Map m, Surface surf, const SpinVector& s, double tau, const SplitContext& ctx) {
    switch (m) {
    case Map::X1: return flow_sx_nonlinear(surf, s, tau, split_coeffs(s, ctx.params, ctx.c_squared));
    case Map::X2: return flow_shift(surf, ShiftAxis::SxPrecession, s, tau, ctx.params, ctx.c_squared);
    case Map::Y: return flow_shift(surf, ShiftAxis::Sy, s, tau, ctx.params, ctx.c_squared);
    case Map::Z: return flow_sz_nonlinear(surf, s, tau, split_coeffs(s, ctx.params, ctx.c_squared));
    }
    return s;
}

}  // namespace detail

// One second-order symmetric step. Coefficients are refreshed from the
// current spin before every map; each map moves only a component its own
// coefficients do not depend on, so step(-tau) inverts step(tau).
inline SpinVector trotter_step(Surface surf, StepVariant variant, SpinVector s, double tau,
                               const SplitContext& ctx) {
    const int v = static_cast<int>(variant);
    if (surf == Surface::S12) {
        if (v > 1)
            throw error("trotter_step: the mean surface has only variants U1 and U2");
        const auto outer = v == 0 ? ShiftAxis::SxPrecession : ShiftAxis::Sy;
        const auto inner = v == 0 ? ShiftAxis::Sy : ShiftAxis::SxPrecession;
        s = flow_shift(surf, outer, s, 0.5 * tau, ctx.params, ctx.c_squared);
        s = flow_shift(surf, inner, s, tau, ctx.params, ctx.c_squared);
        return flow_shift(surf, outer, s, 0.5 * tau, ctx.params, ctx.c_squared);
    }
    for (const auto& sub : detail::kLevelSequences[static_cast<std::size_t>(v)])
        s = detail::apply(sub.map, surf, s, sub.fraction * tau, ctx);
    return s;
}

inline SpinVector trotter_step(Surface surf, StepVariant variant, const SpinVector& s, double tau,
                               const ModelParams& p) {
    return trotter_step(surf, variant, s, tau, SplitContext::for_spin(s, p));
}

namespace detail {

inline const double kYoshida4W1 = 1.0 / (2.0 - std::cbrt(2.0));

inline const std::array<double, 3> kYoshida4{kYoshida4W1, 1.0 - 2.0 * kYoshida4W1, kYoshida4W1};

// Yoshida (1990), sixth order, solution A.
inline constexpr double kY6W1 = -1.17767998417887;
inline constexpr double kY6W2 = 0.235573213359357;
inline constexpr double kY6W3 = 0.784513610477560;
inline constexpr double kY6W0 = 1.0 - 2.0 * (kY6W1 + kY6W2 + kY6W3);

inline constexpr std::array<double, 7> kYoshida6{kY6W3, kY6W2, kY6W1, kY6W0, kY6W1, kY6W2, kY6W3};

}  // namespace detail

inline std::span<const double> composition_weights(Scheme scheme) noexcept {
    static constexpr std::array<double, 1> trotter{1.0};
    switch (scheme) {
    case Scheme::Trotter: return trotter;
    case Scheme::Yoshida4: return detail::kYoshida4;
    case Scheme::Yoshida6: return detail::kYoshida6;
    }
    return trotter;
}

// Symmetric composition of trotter_step with substeps (w1 tau, w0 tau, w1 tau).
inline SpinVector yoshida_step(Surface surf, StepVariant variant, SpinVector s, double tau,
                               const SplitContext& ctx, Scheme scheme = Scheme::Yoshida4) {
    for (double w : composition_weights(scheme))
        s = trotter_step(surf, variant, s, w * tau, ctx);
    return s;
}

inline SpinVector yoshida_step(Surface surf, StepVariant variant, const SpinVector& s, double tau,
                               const ModelParams& p, Scheme scheme = Scheme::Yoshida4) {
    return yoshida_step(surf, variant, s, tau, SplitContext::for_spin(s, p), scheme);
}

// Drives one trajectory: surface, scheme and variant policy fixed, C^2 taken
// from the initial spin.
class Stepper {
public:
    Stepper(Surface surface, Scheme scheme, VariantPolicy policy, const SpinVector& s0, const ModelParams& p)
        : surface_(surface), scheme_(scheme), policy_(policy), ctx_(SplitContext::for_spin(s0, p)) {
        if (surface == Surface::S12 && policy.kind == VariantPolicy::Kind::Fixed &&
            policy.fixed == StepVariant::U3)
            throw error("variant U3 is not defined on the mean surface");
    }

    // Step number `index` with signed step tau. Running the same indices in
    // reverse order with -tau undoes a forward run.
    SpinVector step(const SpinVector& s, double tau, std::size_t index) const {
        return yoshida_step(surface_, policy_.at(surface_, index), s, tau, ctx_, scheme_);
    }

    Surface surface() const noexcept { return surface_; }
    Scheme scheme() const noexcept { return scheme_; }
    VariantPolicy policy() const noexcept { return policy_; }
    const SplitContext& context() const noexcept { return ctx_; }

private:
    Surface surface_;
    Scheme scheme_;
    VariantPolicy policy_;
    SplitContext ctx_;
};

}  // namespace spinbath
