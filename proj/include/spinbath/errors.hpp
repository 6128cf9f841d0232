#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spinbath {

class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Eigenvectors (and the square-root denominators of the flows) are undefined
// at a conical intersection, where the level gap closes.
class DegenerateGap : public error {
public:
    explicit DegenerateGap(double gap)
        : error("adiabatic gap " + std::to_string(gap) + " below threshold"), gap_(gap) {}
    double gap() const noexcept { return gap_; }

private:
    double gap_;
};

// The analytic solution of a nonlinear sub-flow left its validity interval;
// the caller should reduce the step.
class BranchViolation : public error {
public:
    explicit BranchViolation(const std::string& what) : error(what) {}
};

class StiffnessFailure : public error {
public:
    explicit StiffnessFailure(const std::string& what) : error(what) {}
};

class ConfigError : public error {
public:
    ConfigError(std::string key, std::size_t line, const std::string& why)
        : error(format(key, line, why)), key_(std::move(key)), line_(line), reason_(why) {}

    const std::string& key() const noexcept { return key_; }
    std::size_t line() const noexcept { return line_; }  // 0 when not from a file
    const std::string& reason() const noexcept { return reason_; }

private:
    static std::string format(const std::string& key, std::size_t line, const std::string& why) {
        std::string msg = "config key '" + key + "'";
        if (line > 0)
            msg += " (line " + std::to_string(line) + ")";
        return msg + ": " + why;
    }

    std::string key_;
    std::size_t line_;
    std::string reason_;
};

// Integration failure tagged with the step at which it happened.
class IntegrationAborted : public error {
public:
    IntegrationAborted(std::size_t step, const std::string& cause)
        : error("integration aborted at step " + std::to_string(step) + ": " + cause), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace spinbath
