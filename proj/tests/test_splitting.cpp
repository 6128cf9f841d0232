#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/numeric/odeint.hpp>
#include <gtest/gtest.h>

#include "spinbath/diagnostics.hpp"
#include "spinbath/splitting.hpp"
#include "spinbath/trajectory.hpp"

using namespace spinbath;

namespace {

SpinVector random_on_sphere(std::mt19937_64& rng, double radius = 1.0) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_real_distribution<double> phi(0.0, 2.0 * std::numbers::pi);
    const double c = u(rng);
    const double sn = std::sqrt(1.0 - c * c);
    const double f = phi(rng);
    return {radius * sn * std::cos(f), radius * sn * std::sin(f), radius * c};
}

// Adaptive Dormand-Prince integration of dy/dt = k / sqrt(a + c y).
double integrate_1d(double y0, double a, double c, double k, double tau) {
    namespace ode = boost::numeric::odeint;
    using state = std::array<double, 1>;
    state y{y0};
    auto stepper = ode::make_controlled(1e-15, 1e-15, ode::runge_kutta_dopri5<state>());
    ode::integrate_adaptive(stepper, [&](const state& x, state& dx, double) { dx[0] = k / std::sqrt(a + c * x[0]); },
                            y, 0.0, tau, tau / 100.0);
    return y[0];
}

constexpr std::array<StepVariant, 3> kVariants{StepVariant::U1, StepVariant::U2, StepVariant::U3};
constexpr std::array<Scheme, 3> kSchemes{Scheme::Trotter, Scheme::Yoshida4, Scheme::Yoshida6};

}  // namespace

TEST(NonlinearFlow, ZeroVelocityWhenSyVanishes) {
    const ModelParams p;
    const SpinVector s{0.3, 0.0, -0.4};
    const auto k = split_coeffs(s, p);
    for (double tau : {0.001, 0.1, 1.0}) {
        EXPECT_EQ(flow_sx_nonlinear(Surface::S11, s, tau, k), s);
        EXPECT_EQ(flow_sz_nonlinear(Surface::S22, s, tau, k), s);
    }
}

TEST(NonlinearFlow, ZeroStepIsIdentity) {
    const ModelParams p;
    const SpinVector s{0.2, 0.3, 0.4};
    const auto k = split_coeffs(s, p);
    for (Surface surf : {Surface::S11, Surface::S22}) {
        EXPECT_EQ(flow_sx_nonlinear(surf, s, 0.0, k), s);
        EXPECT_EQ(flow_sz_nonlinear(surf, s, 0.0, k), s);
    }
}

TEST(NonlinearFlow, MatchesReferenceIntegration) {
    const ModelParams p;
    const SpinVector s{0.2, 0.3, 0.4};
    const double tau = 0.01;
    const auto k = split_coeffs(s, p);
    for (Surface surf : {Surface::S11, Surface::S22}) {
        const double sign = gap_sign(surf);
        const SpinVector x = flow_sx_nonlinear(surf, s, tau, k);
        EXPECT_NEAR(x.sx, integrate_1d(s.sx, k.c2c, k.c1c, sign * k.c3c, tau), 1e-10);
        EXPECT_EQ(x.sy, s.sy);
        EXPECT_EQ(x.sz, s.sz);
        const SpinVector z = flow_sz_nonlinear(surf, s, tau, k);
        EXPECT_NEAR(z.sz, integrate_1d(s.sz, k.b2c, k.b1c, sign * k.b3c, tau), 1e-10);
        EXPECT_EQ(z.sx, s.sx);
        EXPECT_EQ(z.sy, s.sy);
    }
}

TEST(NonlinearFlow, LargeArgumentBranchAndLinearLimit) {
    // Large steps use the transcendental branch; compare once more to the oracle.
    ModelParams p;
    p.mu = 0.75;
    const SpinVector s{-0.5, 0.7, 0.5};
    const auto k = split_coeffs(s, p);
    const SpinVector x = flow_sx_nonlinear(Surface::S11, s, 0.5, k);
    EXPECT_NEAR(x.sx, integrate_1d(s.sx, k.c2c, k.c1c, k.c3c, 0.5), 1e-10);
    SplitCoeffs lin = k;
    lin.b1c = 0.0;
    const SpinVector z = flow_sz_nonlinear(Surface::S11, s, 0.1, lin);
    EXPECT_NEAR(z.sz, s.sz + 0.1 * lin.b3c / std::sqrt(lin.b2c), 1e-15);
}

TEST(NonlinearFlow, BranchViolationOnOversizedStep) {
    ModelParams p;
    p.mu = 2.0;
    const SpinVector s{-0.45, 0.89, 0.0};
    const auto k = split_coeffs(s, p);
    // The flow moves Sx toward the zero of the radicand, which it reaches in finite time.
    const double sign = k.c3c * k.c1c < 0 ? 1.0 : -1.0;
    EXPECT_THROW(flow_sx_nonlinear(Surface::S11, s, sign * 200.0, k), BranchViolation);
}

TEST(NonlinearFlow, RejectsMeanSurface) {
    const ModelParams p;
    const auto k = split_coeffs({0.1, 0.2, 0.3}, p);
    EXPECT_THROW(flow_sx_nonlinear(Surface::S12, {0.1, 0.2, 0.3}, 0.01, k), error);
    EXPECT_THROW(flow_sz_nonlinear(Surface::S12, {0.1, 0.2, 0.3}, 0.01, k), error);
}

TEST(Shift, PrecessionShift) {
    const ModelParams p;
    const SpinVector out = flow_shift(Surface::S11, ShiftAxis::SxPrecession, {1, 1, 1}, 0.1, p, 1.0);
    EXPECT_DOUBLE_EQ(out.sx, 0.91);
    EXPECT_EQ(out.sy, 1.0);
    EXPECT_EQ(out.sz, 1.0);
}

TEST(Shift, MeanSurfaceSyShiftWithoutSx) {
    const ModelParams p;
    const SpinVector s{0.0, 0.4, 0.7};
    EXPECT_EQ(flow_shift(Surface::S12, ShiftAxis::Sy, s, 0.1, p, 1.0), s);
}

TEST(Shift, DecoupledSyShiftEqualsMeanSurface) {
    ModelParams p;
    p.mu = 0.0;
    const SpinVector s{0.3, -0.2, 0.6};
    const double c2 = p.c_squared(s.norm2());
    const SpinVector a = flow_shift(Surface::S11, ShiftAxis::Sy, s, 0.05, p, c2);
    const SpinVector b = flow_shift(Surface::S12, ShiftAxis::Sy, s, 0.05, p, c2);
    EXPECT_EQ(a, b);
    EXPECT_DOUBLE_EQ(a.sy, -0.2 + 0.05 * 0.3 * 0.5);
}

TEST(Shift, SyShiftMatchesEquationOfMotion) {
    // The Sy rate does not depend on Sy, so the shift is the exact flow.
    std::mt19937_64 rng(31);
    ModelParams p;
    p.mu = 0.5;
    for (int i = 0; i < 100; ++i) {
        const SpinVector s = random_on_sphere(rng);
        for (Surface surf : kAllSurfaces) {
            const SpinVector out = flow_shift(surf, ShiftAxis::Sy, s, 1e-3, p, p.c_squared(s.norm2()));
            EXPECT_NEAR((out.sy - s.sy) / 1e-3, spin_velocity(surf, s, p).sy, 1e-12);
        }
    }
}

TEST(TrotterStep, ZeroStepIsIdentity) {
    const ModelParams p;
    const SpinVector s{0.48, 0.36, 0.8};
    for (Surface surf : kAllSurfaces)
        for (StepVariant v : kVariants) {
            if (surf == Surface::S12 && v == StepVariant::U3)
                continue;
            EXPECT_EQ(trotter_step(surf, v, s, 0.0, p), s);
            EXPECT_EQ(yoshida_step(surf, v, s, 0.0, p), s);
        }
}

TEST(TrotterStep, RejectsThirdVariantOnMeanSurface) {
    const ModelParams p;
    EXPECT_THROW(trotter_step(Surface::S12, StepVariant::U3, {0.1, 0.2, 0.3}, 0.01, p), error);
    EXPECT_THROW(Stepper(Surface::S12, Scheme::Trotter, VariantPolicy::fixed_variant(StepVariant::U3),
                         {0.1, 0.2, 0.3}, p),
                 error);
}

TEST(TrotterStep, SingleStepReversibleRandomTrials) {
    std::mt19937_64 rng(37);
    std::uniform_real_distribution<double> tau_dist(1e-4, 0.02);
    std::uniform_real_distribution<double> mu_dist(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        ModelParams p;
        p.mu = mu_dist(rng);
        const SpinVector s = random_on_sphere(rng);
        const double tau = tau_dist(rng);
        const auto ctx = SplitContext::for_spin(s, p);
        for (Surface surf : kAllSurfaces)
            for (StepVariant v : kVariants) {
                if (surf == Surface::S12 && v == StepVariant::U3)
                    continue;
                for (Scheme scheme : kSchemes) {
                    const SpinVector fwd = yoshida_step(surf, v, s, tau, ctx, scheme);
                    const SpinVector back = yoshida_step(surf, v, fwd, -tau, ctx, scheme);
                    worst = std::max(worst, max_abs_diff(back, s));
                }
            }
    }
    EXPECT_LE(worst, 1e-12);
}

TEST(TrotterStep, MeanSurfaceRotation) {
    const ModelParams p;
    const SpinVector s0{1.0, 0.0, 0.0};
    const auto ctx = SplitContext::for_spin(s0, p);
    SpinVector s = s0;
    const std::size_t n = 31416;
    const double tau = 0.001;
    for (std::size_t k = 0; k < n; ++k)
        s = trotter_step(Surface::S12, StepVariant::U1, s, tau, ctx);
    const double w = -0.1;
    const double t = static_cast<double>(n) * tau;
    EXPECT_NEAR(s.sx, std::cos(w * t), 1e-5);
    EXPECT_NEAR(s.sy, std::sin(w * t), 1e-5);
    EXPECT_EQ(s.sz, 0.0);
}

TEST(YoshidaStep, WeightsSumToOne) {
    for (Scheme scheme : kSchemes) {
        double sum = 0.0;
        for (double w : composition_weights(scheme))
            sum += w;
        EXPECT_NEAR(sum, 1.0, 1e-14);
    }
    const auto w4 = composition_weights(Scheme::Yoshida4);
    ASSERT_EQ(w4.size(), 3u);
    EXPECT_NEAR(w4[0], 1.0 / (2.0 - std::cbrt(2.0)), 1e-15);
    EXPECT_EQ(composition_weights(Scheme::Yoshida6).size(), 7u);
}

TEST(VariantPolicy, CyclesPerSurface) {
    const auto c = VariantPolicy::cycle();
    EXPECT_EQ(c.at(Surface::S11, 0), StepVariant::U1);
    EXPECT_EQ(c.at(Surface::S11, 1), StepVariant::U2);
    EXPECT_EQ(c.at(Surface::S11, 2), StepVariant::U3);
    EXPECT_EQ(c.at(Surface::S11, 3), StepVariant::U1);
    EXPECT_EQ(c.at(Surface::S12, 2), StepVariant::U1);
    EXPECT_EQ(c.at(Surface::S12, 3), StepVariant::U2);
    EXPECT_EQ(VariantPolicy::fixed_variant(StepVariant::U2).at(Surface::S22, 7), StepVariant::U2);
}

TEST(Trajectory, ZeroSteps) {
    const ModelParams p;
    const auto t = integrate_trajectory({0.48, 0.36, 0.8}, Surface::S11, p, 0.001, 0);
    ASSERT_EQ(t.size(), 1u);
    EXPECT_EQ(t.spins[0], (SpinVector{0.48, 0.36, 0.8}));
    EXPECT_EQ(t.phases.bohr[0], 0.0);
    EXPECT_EQ(t.phases.geometric[0], 0.0);
}

TEST(Trajectory, RejectsNonPositiveStep) {
    const ModelParams p;
    EXPECT_THROW(integrate_trajectory({0.48, 0.36, 0.8}, Surface::S11, p, 0.0, 10), error);
}

TEST(Trajectory, MeanSurfaceKeepsSz) {
    ModelParams p;
    p.mu = 0.75;
    const auto t = integrate_trajectory({0.48, 0.36, 0.8}, Surface::S12, p, 0.001, 25000);
    for (const auto& s : t.spins)
        ASSERT_EQ(s.sz, 0.8);
    // Transverse radius: no secular trend.
    double st = 0.0, sr = 0.0, stt = 0.0, str = 0.0;
    const double n = static_cast<double>(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        const double r = t.spins[k].sx * t.spins[k].sx + t.spins[k].sy * t.spins[k].sy;
        st += t.times[k];
        sr += r;
        stt += t.times[k] * t.times[k];
        str += t.times[k] * r;
    }
    const double slope = (n * str - st * sr) / (n * stt - st * st);
    EXPECT_LT(std::abs(slope), 1e-8);
}

TEST(Trajectory, UniformTimesAndFiniteSpins) {
    ModelParams p;
    p.mu = 0.5;
    const auto t = integrate_trajectory({0.48, 0.36, 0.8}, Surface::S22, p, 0.002, 1000,
                                        VariantPolicy::cycle(), Scheme::Yoshida4);
    ASSERT_EQ(t.times.size(), 1001u);
    ASSERT_EQ(t.phases.bohr.size(), 1001u);
    for (std::size_t k = 0; k < t.size(); ++k) {
        EXPECT_DOUBLE_EQ(t.times[k], 0.002 * static_cast<double>(k));
        EXPECT_TRUE(t.spins[k].finite());
    }
}

TEST(Trajectory, AbortCarriesStepIndex) {
    ModelParams p;
    p.omega = 1.0;
    p.c1 = 0.0;
    p.mu = 1.0;
    // Starts on the degenerate point of the lower surfaces.
    try {
        integrate_trajectory({-1.0, 0.0, 0.0}, Surface::S11, p, 0.001, 10);
        FAIL() << "expected IntegrationAborted";
    } catch (const IntegrationAborted& e) {
        EXPECT_EQ(e.step(), 0u);
    }
}

TEST(Trajectory, EnergyDriftAtStrongCoupling) {
    ModelParams p;
    p.mu = 0.75;
    const auto t = integrate_trajectory({0.48, 0.36, 0.8}, Surface::S11, p, 0.001, 25000);
    const double h0 = surface_hamiltonian(Surface::S11, t.spins.front(), p);
    double worst = 0.0;
    for (const auto& s : t.spins)
        worst = std::max(worst, std::abs(surface_hamiltonian(Surface::S11, s, p) - h0) / std::abs(h0));
    EXPECT_LT(worst, 1e-4);
}

TEST(Trajectory, CasimirDriftShrinksWithStep) {
    ModelParams p;
    p.mu = 0.75;
    const SpinVector s0{0.48, 0.36, 0.8};
    for (Surface surf : {Surface::S11, Surface::S22}) {
        auto drift = [&](double tau) {
            const auto t = integrate_trajectory(s0, surf, p, tau, static_cast<std::size_t>(std::llround(5.0 / tau)));
            double worst = 0.0;
            for (const auto& s : t.spins)
                worst = std::max(worst, std::abs(s.norm2() - 1.0));
            return worst;
        };
        const double d1 = drift(0.01);
        const double d2 = drift(0.005);
        EXPECT_LT(d1, 1e-4);
        EXPECT_GT(d1 / d2, 3.0) << to_string(surf);
        EXPECT_LT(d1 / d2, 5.0) << to_string(surf);
    }
}

TEST(Trajectory, VariantsAgreeToSecondOrder) {
    ModelParams p;
    p.mu = 0.75;
    const SpinVector s0{0.48, 0.36, 0.8};
    auto end = [&](StepVariant v, double tau) {
        const Stepper st(Surface::S11, Scheme::Trotter, VariantPolicy::fixed_variant(v), s0, p);
        SpinVector s = s0;
        const auto n = static_cast<std::size_t>(std::llround(1.0 / tau));
        for (std::size_t k = 0; k < n; ++k)
            s = st.step(s, tau, k);
        return s;
    };
    for (auto [a, b] : {std::pair{StepVariant::U1, StepVariant::U2}, std::pair{StepVariant::U1, StepVariant::U3},
                        std::pair{StepVariant::U2, StepVariant::U3}}) {
        const double d1 = max_abs_diff(end(a, 0.02), end(b, 0.02));
        const double d2 = max_abs_diff(end(a, 0.01), end(b, 0.01));
        EXPECT_NEAR(d1 / d2, 4.0, 0.4);
    }
}
