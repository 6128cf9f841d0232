#pragma once

// Monte Carlo estimate of <chi>_t = sum_{aa'} int dS rho_{aa'}(S) chi_{a'a}(S, t)
// for chi = sigma_z, sigma_x in the adiabatic approximation. Each sample runs
// three trajectories from the same initial spin: (1,1) and (2,2) carry the
// diagonal terms, the mean surface (1,2) carries the coherence together with
// its Bohr and geometric phase factors.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "spinbath/config.hpp"
#include "spinbath/phases.hpp"
#include "spinbath/sampling.hpp"
#include "spinbath/splitting.hpp"

namespace spinbath {

struct ObservableSeries {
    std::vector<double> times;
    std::vector<double> sigma_z;
    std::vector<double> sigma_z_err;
    std::vector<double> sigma_x;
    std::vector<double> sigma_x_err;
    std::vector<double> abs2_bohr;  // |<exp(i phi_bohr)>|^2 on the mean surface
    std::vector<double> abs2_geo;   // |<exp(i phi_geo)>|^2 on the mean surface
    double max_imag_residual = 0.0;  // largest |Im| of a per-sample estimator before it is dropped
    std::uint64_t samples = 0;
    std::vector<std::uint64_t> aborted;  // indices of samples whose integration failed

    std::size_t size() const noexcept { return times.size(); }
    double aborted_fraction() const noexcept {
        return samples == 0 ? 0.0 : static_cast<double>(aborted.size()) / static_cast<double>(samples);
    }
};

// Per-sample estimator values on the output grid.
struct SampleContribution {
    double weight = 0.0;
    std::vector<double> sigma_z;
    std::vector<double> sigma_x;
    std::vector<complex> bohr_factor;
    std::vector<complex> geo_factor;
    double max_imag = 0.0;
};

struct OutputGrid {
    std::size_t n_steps = 0;
    std::size_t stride = 1;

    std::size_t points() const noexcept { return n_steps / stride + 1; }

    static OutputGrid from(const RunConfig& cfg) noexcept { return {cfg.n_steps(), cfg.output_stride()}; }
};

// Sum_{aa'} rho_{aa'} chi_{a'a}: diagonal entries from the (1,1) and (2,2)
// trajectories, off-diagonal entry chi_21 = exp(-i (bohr + geometric)) sigma_21
// evaluated on the mean-surface trajectory. Returned complex so callers can
// check that the imaginary part vanishes.
inline complex assemble_observable(const DensityMatrix2& rho, const Matrix2c& chi_11_frame,
                                   const Matrix2c& chi_22_frame, const Matrix2c& chi_12_frame,
                                   complex phase_21) {
    const complex chi21 = phase_21 * chi_12_frame(1, 0);
    const complex chi12 = std::conj(phase_21) * chi_12_frame(0, 1);
    return rho(0, 0) * chi_11_frame(0, 0) + rho(1, 1) * chi_22_frame(1, 1) + rho(0, 1) * chi21 +
           rho(1, 0) * chi12;
}

inline SampleContribution evaluate_sample(std::uint64_t index, const RunConfig& cfg, const OutputGrid& grid) {
    const ModelParams& p = cfg.params;
    SampleStream rng(cfg.seed, index);
    const WeightedSample ws = sample_initial_spin(rng, p, cfg.weight_scale);
    const SpinVector s0 = ws.spin;
    const DensityMatrix2 rho = rho_adiabatic(s0, p);
    const std::size_t n_out = grid.points();

    // Sigma matrices in the adiabatic basis along each trajectory, at output points.
    auto run_level = [&](Surface surf) {
        std::vector<std::array<Matrix2c, 2>> out;
        out.reserve(n_out);
        const Stepper stepper(surf, cfg.scheme, cfg.policy, s0, p);
        SpinVector s = s0;
        for (std::size_t k = 0;; ++k) {
            if (k % grid.stride == 0) {
                const auto frame = adiabatic_frame(s, p);
                out.push_back({pauli_adiabatic(PauliAxis::Z, frame), pauli_adiabatic(PauliAxis::X, frame)});
            }
            if (k == grid.n_steps)
                break;
            s = stepper.step(s, cfg.dt, k);
        }
        return out;
    };
    const auto level1 = run_level(Surface::S11);
    const auto level2 = run_level(Surface::S22);

    SampleContribution c;
    c.weight = ws.weight;
    c.sigma_z.reserve(n_out);
    c.sigma_x.reserve(n_out);
    c.bohr_factor.reserve(n_out);
    c.geo_factor.reserve(n_out);

    const Stepper mean(Surface::S12, cfg.scheme, cfg.policy, s0, p);
    PhaseAccumulator phases(p, s0, cfg.dt);
    SpinVector s = s0;
    for (std::size_t k = 0;; ++k) {
        if (k % grid.stride == 0) {
            const std::size_t j = k / grid.stride;
            const auto& frame = phases.frame();
            const complex phase21 = std::polar(1.0, -(phases.bohr() + phases.geometric()));
            const complex z = assemble_observable(rho, level1[j][0], level2[j][0],
                                                  pauli_adiabatic(PauliAxis::Z, frame), phase21);
            const complex x = assemble_observable(rho, level1[j][1], level2[j][1],
                                                  pauli_adiabatic(PauliAxis::X, frame), phase21);
            c.max_imag = std::max({c.max_imag, std::abs(z.imag()), std::abs(x.imag())});
            c.sigma_z.push_back(z.real());
            c.sigma_x.push_back(x.real());
            c.bohr_factor.push_back(std::polar(1.0, phases.bohr()));
            c.geo_factor.push_back(std::polar(1.0, phases.geometric()));
        }
        if (k == grid.n_steps)
            break;
        s = mean.step(s, cfg.dt, k);
        phases.push(s);
    }
    return c;
}

namespace detail {

// Sums of w^2 (y - a) and w^2 (y - a)^2 about a shift a taken from the first
// sample, so the spread is not lost to cancellation when samples agree.
struct ShiftedMoments {
    std::vector<double> shift, s1, s2;

    explicit ShiftedMoments(std::size_t n = 0) : shift(n), s1(n), s2(n) {}

    void add(std::size_t j, double ww, double y, bool first) {
        if (first)
            shift[j] = y;
        const double d = y - shift[j];
        s1[j] += ww * d;
        s2[j] += ww * d * d;
    }

    // Second moment about `b`, given the total squared weight w2.
    double about(std::size_t j, double b, double w2) const {
        const double d = shift[j] - b;
        return s2[j] + 2.0 * d * s1[j] + d * d * w2;
    }

    void merge(const ShiftedMoments& o, double w2, double o_w2) {
        for (std::size_t j = 0; j < shift.size(); ++j) {
            if (w2 == 0.0) {
                shift[j] = o.shift[j];
                s1[j] = o.s1[j];
                s2[j] = o.s2[j];
                continue;
            }
            const double d = o.shift[j] - shift[j];
            s2[j] += o.s2[j] + 2.0 * d * o.s1[j] + d * d * o_w2;
            s1[j] += o.s1[j] + d * o_w2;
        }
    }
};

// Weighted sums over a fixed block of samples, enough for self-normalized
// means and their standard errors.
struct BlockSums {
    double w = 0.0;
    double w2 = 0.0;
    std::vector<double> wz, wx;
    ShiftedMoments mz, mx;
    std::vector<complex> wb, wg;
    double max_imag = 0.0;
    std::vector<std::uint64_t> aborted;

    explicit BlockSums(std::size_t n = 0) : wz(n), wx(n), mz(n), mx(n), wb(n), wg(n) {}

    void add(const SampleContribution& c) {
        const double w1 = c.weight;
        const double ww = w1 * w1;
        const bool first = w2 == 0.0;
        w += w1;
        w2 += ww;
        for (std::size_t j = 0; j < wz.size(); ++j) {
            const double z = c.sigma_z[j];
            const double x = c.sigma_x[j];
            wz[j] += w1 * z;
            wx[j] += w1 * x;
            mz.add(j, ww, z, first);
            mx.add(j, ww, x, first);
            wb[j] += w1 * c.bohr_factor[j];
            wg[j] += w1 * c.geo_factor[j];
        }
        max_imag = std::max(max_imag, c.max_imag);
    }

    void merge(const BlockSums& o) {
        if (o.w2 > 0.0) {
            mz.merge(o.mz, w2, o.w2);
            mx.merge(o.mx, w2, o.w2);
        }
        w += o.w;
        w2 += o.w2;
        for (std::size_t j = 0; j < wz.size(); ++j) {
            wz[j] += o.wz[j];
            wx[j] += o.wx[j];
            wb[j] += o.wb[j];
            wg[j] += o.wg[j];
        }
        max_imag = std::max(max_imag, o.max_imag);
        aborted.insert(aborted.end(), o.aborted.begin(), o.aborted.end());
    }
};

inline constexpr std::uint64_t kBlockSize = 16;

// Standard error of a self-normalized weighted mean.
inline double weighted_stderr(const ShiftedMoments& m, std::size_t j, double w, double w2, double mean) {
    return std::sqrt(std::max(m.about(j, mean, w2), 0.0)) / w;
}

}  // namespace detail

// Samples are grouped into fixed blocks that are each summed in index order,
// and blocks are merged in index order, so the result does not depend on the
// number of workers.
inline ObservableSeries ensemble_average(const RunConfig& cfg) {
    validate(cfg);
    const OutputGrid grid = OutputGrid::from(cfg);
    const std::size_t n_out = grid.points();
    const std::uint64_t n_blocks = (cfg.samples + detail::kBlockSize - 1) / detail::kBlockSize;
    std::vector<detail::BlockSums> blocks(n_blocks);

    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        try {
            for (std::uint64_t b = next++; b < n_blocks; b = next++) {
                detail::BlockSums sums(n_out);
                const std::uint64_t end = std::min(cfg.samples, (b + 1) * detail::kBlockSize);
                for (std::uint64_t i = b * detail::kBlockSize; i < end; ++i) {
                    try {
                        sums.add(evaluate_sample(i, cfg, grid));
                    } catch (const error&) {
                        sums.aborted.push_back(i);
                    }
                }
                blocks[b] = std::move(sums);
            }
        } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure)
                failure = std::current_exception();
        }
    };
    const unsigned n_workers = static_cast<unsigned>(std::min<std::uint64_t>(cfg.workers, n_blocks));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(n_workers);
        for (unsigned t = 0; t < n_workers; ++t)
            pool.emplace_back(worker);
    }
    if (failure)
        std::rethrow_exception(failure);

    detail::BlockSums total(n_out);
    for (const auto& b : blocks)
        total.merge(b);

    ObservableSeries out;
    out.samples = cfg.samples;
    out.aborted = std::move(total.aborted);
    out.max_imag_residual = total.max_imag;
    out.times.resize(n_out);
    out.sigma_z.resize(n_out);
    out.sigma_z_err.resize(n_out);
    out.sigma_x.resize(n_out);
    out.sigma_x_err.resize(n_out);
    out.abs2_bohr.resize(n_out);
    out.abs2_geo.resize(n_out);
    for (std::size_t j = 0; j < n_out; ++j) {
        out.times[j] = static_cast<double>(j * grid.stride) * cfg.dt;
        if (total.w <= 0.0) {
            const double nan = std::nan("");
            out.sigma_z[j] = out.sigma_z_err[j] = out.sigma_x[j] = out.sigma_x_err[j] = nan;
            out.abs2_bohr[j] = out.abs2_geo[j] = nan;
            continue;
        }
        const double z = total.wz[j] / total.w;
        const double x = total.wx[j] / total.w;
        out.sigma_z[j] = z;
        out.sigma_x[j] = x;
        out.sigma_z_err[j] = detail::weighted_stderr(total.mz, j, total.w, total.w2, z);
        out.sigma_x_err[j] = detail::weighted_stderr(total.mx, j, total.w, total.w2, x);
        out.abs2_bohr[j] = std::norm(total.wb[j] / total.w);
        out.abs2_geo[j] = std::norm(total.wg[j] / total.w);
    }
    return out;
}

}  // namespace spinbath
