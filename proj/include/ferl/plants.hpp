#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "ferl/common.hpp"

namespace ferl {

// ---------------------------------------------------------------------------
// Inverted pendulum (theta = 0 upright, theta = pi hanging down)
// ---------------------------------------------------------------------------

struct PendulumParams {
    double mass = 1.0;      // kg
    double length = 9.81;   // m
    double gravity = 9.81;  // m/s^2

    void validate() const {
        require(mass > 0.0 && length > 0.0 && gravity > 0.0,
                "pendulum params must be strictly positive");
    }
};

struct PendulumState {
    double theta = 0.0;  // rad, reported wrapped to [-pi, pi]
    double omega = 0.0;  // rad/s
};

// (theta_dot, omega_dot) for torque u applied at the pivot.
inline Eigen::Vector2d pendulum_deriv(const PendulumState& s, double torque,
                                      const PendulumParams& p) {
    const double omega_dot =
        (p.gravity / p.length) * std::sin(s.theta) + torque / (p.mass * p.length * p.length);
    return {s.omega, omega_dot};
}

// Total mechanical energy of the unforced pendulum (conserved when u = 0).
inline double pendulum_energy(const PendulumState& s, const PendulumParams& p) {
    return 0.5 * p.mass * p.length * p.length * s.omega * s.omega +
           p.mass * p.gravity * p.length * std::cos(s.theta);
}

// ---------------------------------------------------------------------------
// Quadrotor with slung load (translational dynamics + load angles)
// ---------------------------------------------------------------------------

struct QuadSlungParams {
    double quad_mass = 1.264;    // kg
    double load_mass = 0.062;    // kg
    double cable_length = 0.75;  // m
    double gravity = 9.81;       // m/s^2

    double coupling() const { return load_mass * cable_length; }
    double total_mass() const { return quad_mass + load_mass; }
    double hover_thrust() const { return total_mass() * gravity; }

    void validate() const {
        require(quad_mass > 0.0 && load_mass > 0.0 && cable_length > 0.0 && gravity > 0.0,
                "quad slung params must be strictly positive");
    }
};

struct QuadSlungState {
    Eigen::Vector3d position = Eigen::Vector3d::Zero();  // m
    Eigen::Vector3d velocity = Eigen::Vector3d::Zero();  // m/s
    double alpha = 0.0;                                  // load angle about x, rad
    double beta = 0.0;                                   // load angle about y, rad
    double alpha_dot = 0.0;
    double beta_dot = 0.0;

    Eigen::Matrix<double, 10, 1> to_vector() const;
    static QuadSlungState from_vector(const Eigen::Matrix<double, 10, 1>& v);
};

// Full 10-state derivative. Load angular accelerations are evaluated first and
// substituted into the translational equations (explicit cascade). Throws
// SingularityError when cos(alpha) or cos(beta) is below 1e-6 in magnitude.
Eigen::Matrix<double, 10, 1> quad_slung_deriv(const QuadSlungState& s, const Eigen::Vector3d& forces,
                                              const QuadSlungParams& p);

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

// Classical RK4 step with the input held constant over [t, t+dt] (the input is
// baked into the derivative functor). Throws InvalidInput when dt <= 0.
template <class Deriv, class Vec>
Vec rk4_step(Deriv&& f, const Vec& x, double dt) {
    require(dt > 0.0, "rk4_step: dt must be > 0");
    const Vec k1 = f(x);
    const Vec k2 = f(x + (0.5 * dt) * k1);
    const Vec k3 = f(x + (0.5 * dt) * k2);
    const Vec k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One agent-rate step of the pendulum under zero-order-hold torque, integrated
// with RK4 substeps of length inner_dt. Returns the new state (theta wrapped)
// and the wrap-corrected midpoint angle used for identification regressors.
struct PendulumStepResult {
    PendulumState state;
    double theta_mid = 0.0;
};
PendulumStepResult pendulum_step(const PendulumState& s, double torque, const PendulumParams& p,
                                 double agent_dt, double inner_dt, double t_now);

// One agent-rate ZOH step of the quadrotor. `forces` are the total commanded
// thrust components (wind, if any, must already be added by the caller).
QuadSlungState quad_step(const QuadSlungState& s, const Eigen::Vector3d& forces,
                         const QuadSlungParams& p, double agent_dt, double inner_dt, double t_now);

// ---------------------------------------------------------------------------
// Parameter schedules and wind
// ---------------------------------------------------------------------------

// Piecewise-constant, right-continuous parameter schedule; first breakpoint at
// t = 0, times strictly increasing.
template <class Params>
class ParameterSchedule {
public:
    ParameterSchedule() = default;
    explicit ParameterSchedule(std::vector<std::pair<double, Params>> breakpoints)
        : breakpoints_(std::move(breakpoints)) {
        require(!breakpoints_.empty(), "schedule: needs at least one breakpoint");
        require(breakpoints_.front().first == 0.0, "schedule: first breakpoint must be at t=0");
        for (std::size_t i = 1; i < breakpoints_.size(); ++i)
            require(breakpoints_[i].first > breakpoints_[i - 1].first,
                    "schedule: breakpoint times must be strictly increasing");
    }

    static ParameterSchedule constant(const Params& p) { return ParameterSchedule({{0.0, p}}); }

    const Params& at(double t) const {
        std::size_t k = 0;
        while (k + 1 < breakpoints_.size() && breakpoints_[k + 1].first <= t) ++k;
        return breakpoints_[k].second;
    }

    const std::vector<std::pair<double, Params>>& breakpoints() const { return breakpoints_; }

private:
    std::vector<std::pair<double, Params>> breakpoints_;
};

// Synthetic wind: bias + sinusoidal gust + counter-seeded Gaussian noise.
// sample_wind is a pure function of (profile, t).
struct WindProfile {
    double start_time = 0.0;                             // s
    Eigen::Vector3d magnitude = Eigen::Vector3d::Zero(); // N
    double gust_amplitude = 0.0;                         // N
    double gust_period = 1.0;                            // s
    double noise_std = 0.0;                              // N
    std::uint64_t seed = 0;

    void validate() const {
        require(start_time >= 0.0, "wind: start_time must be >= 0");
        require(gust_period > 0.0, "wind: gust_period must be > 0");
    }
};

Eigen::Vector3d sample_wind(const WindProfile& profile, double t);

}  // namespace ferl
