#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>

#include "ferl/plants.hpp"
#include "ferl/rng.hpp"

namespace ferl {

// Eq.-style pendulum step reward; the action term uses the action applied on
// the step leading into (theta, omega).
inline double pendulum_reward(double theta, double omega, double u_prev) {
    return -(theta * theta + 0.1 * omega * omega + 0.0001 * u_prev * u_prev);
}

struct EnvStep {
    Eigen::VectorXd obs;
    double reward = 0.0;
    bool done = false;  // true terminal only (time-limit cuts are not flagged)
};

// Minimal episodic control interface used by the trainers.
class ControlEnv {
public:
    virtual ~ControlEnv() = default;
    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual Eigen::VectorXd action_low() const = 0;
    virtual Eigen::VectorXd action_high() const = 0;
    virtual int episode_steps() const = 0;
    virtual std::string obs_spec() const = 0;
    virtual Eigen::VectorXd reset(std::uint64_t episode_seed) = 0;
    virtual EnvStep step(const Eigen::VectorXd& action) = 0;
};

// Swing-up task: observation (cos theta, sin theta, omega), scalar torque.
// Optional per-episode uniform resampling of (length, mass) gives the domain
// randomization baseline; the sampler has its own RNG stream so a fixed-params
// env and a degenerate-range DR env consume training randomness identically.
class PendulumEnv : public ControlEnv {
public:
    struct Options {
        PendulumParams params;
        // The actor rescales to +/- action_limit; the plant saturates applied
        // torque at +/- torque_limit during training episodes (the training
        // clamp is tighter so the policy must learn to pump).
        double action_limit = 50.0;
        double torque_limit = 30.0;
        double agent_dt = 0.05;
        double inner_dt = 1e-3;
        double episode_length_s = 20.0;
        double init_theta = kPi;
        double init_jitter = 0.0;  // uniform jitter on init_theta, rad
        std::optional<std::pair<double, double>> length_range;  // DR: length interval
        std::optional<std::pair<double, double>> mass_range;    // DR: mass interval
    };

    explicit PendulumEnv(Options opt);

    int obs_dim() const override { return 3; }
    int action_dim() const override { return 1; }
    Eigen::VectorXd action_low() const override;
    Eigen::VectorXd action_high() const override;
    int episode_steps() const override { return steps_; }
    std::string obs_spec() const override { return "pendulum_cos_sin_omega"; }

    Eigen::VectorXd reset(std::uint64_t episode_seed) override;
    EnvStep step(const Eigen::VectorXd& action) override;

    const PendulumParams& current_params() const { return params_; }

private:
    Eigen::VectorXd observe() const;

    Options opt_;
    PendulumParams params_;
    PendulumState state_;
    int steps_ = 0;
    int step_count_ = 0;
    double t_ = 0.0;
};

// Sinusoidal position reference with per-axis amplitude/phase about a center.
struct ReferenceTrajectory {
    double period = 15.0;
    Eigen::Vector3d amplitude = Eigen::Vector3d(1.0, 1.0, 0.3);
    Eigen::Vector3d phase = Eigen::Vector3d(0.0, kPi / 2.0, 0.0);
    Eigen::Vector3d center = Eigen::Vector3d(0.0, 0.0, 1.0);

    Eigen::Vector3d position(double t) const;
    Eigen::Vector3d velocity(double t) const;
};

// Slung-load trajectory tracking. Observation: position error (3), velocity
// (3), load angles (2), load angle rates (2), with error/velocity components
// clamped to obs_clip so runaway states keep the nets in range. The error
// cost saturates at err_saturation (bounded per-step cost, so a runaway
// episode is always worse than any termination and the agent cannot learn to
// escape through one). Episodes terminate only when the load swings past
// angle_limit, which keeps the integration away from the cos(alpha)
// singularity.
class QuadTrackingEnv : public ControlEnv {
public:
    struct Options {
        QuadSlungParams params;
        ReferenceTrajectory reference;
        double agent_dt = 0.05;
        double inner_dt = 1e-3;
        double episode_length_s = 20.0;
        double lateral_force_limit = 2.0;   // |Fx|, |Fy| bound, N
        double vertical_force_limit = 3.0;  // |dFz| bound, N
        double angle_limit = 1.2;           // rad, load-flip termination
        double obs_clip = 5.0;              // m, m/s
        double err_saturation = 5.0;        // m, error-cost saturation
        double termination_penalty = 300.0;
    };

    explicit QuadTrackingEnv(Options opt);

    int obs_dim() const override { return 10; }
    int action_dim() const override { return 3; }
    Eigen::VectorXd action_low() const override;
    Eigen::VectorXd action_high() const override;
    int episode_steps() const override { return steps_; }
    std::string obs_spec() const override { return "quad_tracking"; }

    Eigen::VectorXd reset(std::uint64_t episode_seed) override;
    EnvStep step(const Eigen::VectorXd& action) override;

private:
    Eigen::VectorXd observe() const;

    Options opt_;
    QuadSlungState state_;
    int steps_ = 0;
    int step_count_ = 0;
    double t_ = 0.0;
};

}  // namespace ferl
