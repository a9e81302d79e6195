#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace ferl {

// Bad arguments or violated preconditions (maps to CLI exit 2 when config-borne).
class InvalidInput : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A referenced artifact (policy file, cluster model) does not exist (CLI exit 3).
class MissingArtifact : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Simulation or estimator produced a non-finite value (CLI exit 4).
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg, double time = -1.0)
        : std::runtime_error(time >= 0.0 ? msg + " at t=" + std::to_string(time) + " s" : msg),
          time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

// Load angles reached the cos(alpha)/cos(beta) denominator guard.
class SingularityError : public NumericError {
public:
    using NumericError::NumericError;
};

// Training diverged (non-finite loss or weights).
class TrainingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// RLS coefficients not yet physically invertible; caller keeps previous params.
class NotIdentifiable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

constexpr double kPi = 3.14159265358979323846;

// Wrap an angle to [-pi, pi].
inline double wrap_angle(double theta) { return std::remainder(theta, 2.0 * kPi); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

}  // namespace ferl
