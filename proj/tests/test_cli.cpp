#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "spinbath/commands.hpp"

using namespace spinbath;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

std::vector<double> fields(const std::string& line) {
    std::vector<double> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');)
        out.push_back(std::stod(f));
    return out;
}

}  // namespace

TEST(FormatReal, SixteenSignificantDigits) {
    EXPECT_EQ(format_real(0.6), "6.000000000000000e-01");
    EXPECT_EQ(format_real(-0.8), "-8.000000000000000e-01");
    EXPECT_EQ(format_real(0.0), "0.000000000000000e+00");
    for (double v : {0.1 + 0.2, 1.0 / 3.0, -2.718281828459045e-7, 6.02214076e23}) {
        const double back = std::stod(format_real(v));
        EXPECT_LE(std::abs(back - v), 1e-15 * std::abs(v));
    }
}

TEST(Simulate, CsvLayoutAndFirstRow) {
    RunConfig cfg;
    cfg.samples = 32;
    cfg.t_end = 0.5;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_simulate(cfg, out, err), kExitOk);
    const auto rows = lines(out.str());
    ASSERT_EQ(rows.front(), "t,sigma_z,sigma_z_err,sigma_x,sigma_x_err,abs2_bohr,abs2_geo");
    ASSERT_EQ(rows.size(), 502u);
    const auto first = fields(rows[1]);
    ASSERT_EQ(first.size(), 7u);
    EXPECT_EQ(first[0], 0.0);
    EXPECT_NEAR(first[1], 0.6, 1e-14);
    EXPECT_NEAR(first[3], -0.8, 1e-14);
    EXPECT_NEAR(first[5], 1.0, 1e-14);
    EXPECT_NEAR(first[6], 1.0, 1e-14);
    EXPECT_TRUE(err.str().empty());
}

TEST(Simulate, WorkerCountByteIdentical) {
    RunConfig cfg;
    cfg.samples = 48;
    cfg.t_end = 1.0;
    std::ostringstream a, b, err;
    cfg.workers = 1;
    cmd_simulate(cfg, a, err);
    cfg.workers = 8;
    cmd_simulate(cfg, b, err);
    EXPECT_EQ(a.str(), b.str());
}

TEST(Trajectory, MeanSurfaceColumns) {
    RunConfig cfg;
    cfg.surface = Surface::S12;
    cfg.params.mu = 0.75;
    std::ostringstream out, err;
    ASSERT_EQ(cmd_trajectory(cfg, out, err), kExitOk);
    const auto rows = lines(out.str());
    ASSERT_EQ(rows.front(), "t,Sx,Sy,Sz,H_surface,casimir,bohr,geometric");
    const auto first = fields(rows[1]);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto f = fields(rows[i]);
        ASSERT_EQ(f.size(), 8u);
        EXPECT_EQ(f[3], first[3]);
        EXPECT_NEAR(f[4], first[4], 1e-8 * std::abs(first[4]));
    }
}

TEST(Trajectory, LevelSurfaceCasimirAndEnergy) {
    RunConfig cfg;
    cfg.params.mu = 0.75;
    for (Surface surf : {Surface::S11, Surface::S22}) {
        cfg.surface = surf;
        std::ostringstream out, err;
        ASSERT_EQ(cmd_trajectory(cfg, out, err), kExitOk);
        const auto rows = lines(out.str());
        const auto first = fields(rows[1]);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const auto f = fields(rows[i]);
            EXPECT_LT(std::abs(f[5] - first[5]) / first[5], 1e-6);
            EXPECT_LT(std::abs(f[4] - first[4]) / std::abs(first[4]), 1e-4);
        }
    }
}

TEST(Trajectory, AbortExitCode) {
    RunConfig cfg;
    cfg.params.c1 = 0.0;
    cfg.params.mu = 1.0;
    cfg.initial_spin = {-1.0, 0.0, 0.0};
    std::ostringstream out, err;
    EXPECT_EQ(cmd_trajectory(cfg, out, err), kExitAborted);
    EXPECT_TRUE(out.str().empty());
    EXPECT_NE(err.str().find("step 0"), std::string::npos);
}

TEST(Check, DefaultConfigPasses) {
    std::ostringstream out;
    EXPECT_EQ(cmd_check(RunConfig{}, out), kExitOk) << out.str();
}

TEST(Check, OversizedStepFails) {
    RunConfig cfg;
    cfg.dt = 0.5;
    std::ostringstream out;
    EXPECT_EQ(cmd_check(cfg, out), kExitCheckFailed);
    EXPECT_NE(out.str().find("FAIL"), std::string::npos);
}

TEST(Check, YoshidaOrderReported) {
    RunConfig cfg;
    cfg.scheme = Scheme::Yoshida4;
    for (const auto& r : run_checks(cfg)) {
        EXPECT_TRUE(r.pass) << r.name << ": " << r.detail;
        if (r.name.rfind("order", 0) == 0) {
            const double slope = std::stod(r.detail.substr(r.detail.find(' ') + 1));
            EXPECT_GE(slope, 3.8);
        }
    }
}
