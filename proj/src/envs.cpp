#include "ferl/envs.hpp"

#include <cmath>

#include "ferl/common.hpp"

namespace ferl {

PendulumEnv::PendulumEnv(Options opt) : opt_(std::move(opt)), params_(opt_.params) {
    params_.validate();
    require(opt_.torque_limit > 0.0 && opt_.action_limit > 0.0,
            "pendulum env: torque limits must be > 0");
    const double ratio = opt_.episode_length_s / opt_.agent_dt;
    steps_ = static_cast<int>(std::lround(ratio));
    require(steps_ >= 1 && std::abs(ratio - steps_) < 1e-9,
            "pendulum env: episode length must be a multiple of agent_dt");
}

Eigen::VectorXd PendulumEnv::action_low() const {
    return Eigen::VectorXd::Constant(1, -opt_.action_limit);
}

Eigen::VectorXd PendulumEnv::action_high() const {
    return Eigen::VectorXd::Constant(1, opt_.action_limit);
}

Eigen::VectorXd PendulumEnv::observe() const {
    Eigen::VectorXd o(3);
    o << std::cos(state_.theta), std::sin(state_.theta), state_.omega;
    return o;
}

Eigen::VectorXd PendulumEnv::reset(std::uint64_t episode_seed) {
    Rng rng(derive_seed(episode_seed, 0xE0));
    params_ = opt_.params;
    if (opt_.length_range)
        params_.length = rng.uniform(opt_.length_range->first, opt_.length_range->second);
    if (opt_.mass_range)
        params_.mass = rng.uniform(opt_.mass_range->first, opt_.mass_range->second);
    params_.validate();
    double theta = opt_.init_theta;
    if (opt_.init_jitter > 0.0) theta += rng.uniform(-opt_.init_jitter, opt_.init_jitter);
    state_ = PendulumState{wrap_angle(theta), 0.0};
    step_count_ = 0;
    t_ = 0.0;
    return observe();
}

EnvStep PendulumEnv::step(const Eigen::VectorXd& action) {
    require(action.size() == 1, "pendulum env: scalar action expected");
    const double u = std::clamp(action[0], -opt_.torque_limit, opt_.torque_limit);
    state_ = pendulum_step(state_, u, params_, opt_.agent_dt, opt_.inner_dt, t_).state;
    t_ += opt_.agent_dt;
    ++step_count_;
    EnvStep out;
    out.obs = observe();
    out.reward = pendulum_reward(state_.theta, state_.omega, u);
    out.done = false;  // swing-up episodes end only by time limit
    return out;
}

Eigen::Vector3d ReferenceTrajectory::position(double t) const {
    const double w = 2.0 * kPi / period;
    Eigen::Vector3d p;
    for (int i = 0; i < 3; ++i) p[i] = center[i] + amplitude[i] * std::sin(w * t + phase[i]);
    return p;
}

Eigen::Vector3d ReferenceTrajectory::velocity(double t) const {
    const double w = 2.0 * kPi / period;
    Eigen::Vector3d v;
    for (int i = 0; i < 3; ++i) v[i] = amplitude[i] * w * std::cos(w * t + phase[i]);
    return v;
}

QuadTrackingEnv::QuadTrackingEnv(Options opt) : opt_(std::move(opt)) {
    opt_.params.validate();
    require(opt_.lateral_force_limit > 0.0 && opt_.vertical_force_limit > 0.0,
            "quad env: force limits must be > 0");
    const double ratio = opt_.episode_length_s / opt_.agent_dt;
    steps_ = static_cast<int>(std::lround(ratio));
    require(steps_ >= 1 && std::abs(ratio - steps_) < 1e-9,
            "quad env: episode length must be a multiple of agent_dt");
}

Eigen::VectorXd QuadTrackingEnv::action_low() const {
    Eigen::VectorXd lo(3);
    lo << -opt_.lateral_force_limit, -opt_.lateral_force_limit, -opt_.vertical_force_limit;
    return lo;
}

Eigen::VectorXd QuadTrackingEnv::action_high() const {
    Eigen::VectorXd hi(3);
    hi << opt_.lateral_force_limit, opt_.lateral_force_limit, opt_.vertical_force_limit;
    return hi;
}

Eigen::VectorXd QuadTrackingEnv::observe() const {
    Eigen::VectorXd o(10);
    o.segment<3>(0) = (state_.position - opt_.reference.position(t_))
                          .cwiseMin(opt_.obs_clip)
                          .cwiseMax(-opt_.obs_clip);
    o.segment<3>(3) = state_.velocity.cwiseMin(opt_.obs_clip).cwiseMax(-opt_.obs_clip);
    o[6] = state_.alpha;
    o[7] = state_.beta;
    o[8] = std::clamp(state_.alpha_dot, -10.0, 10.0);
    o[9] = std::clamp(state_.beta_dot, -10.0, 10.0);
    return o;
}

Eigen::VectorXd QuadTrackingEnv::reset(std::uint64_t /*episode_seed*/) {
    state_ = QuadSlungState{};
    state_.position = opt_.reference.position(0.0);
    state_.velocity = opt_.reference.velocity(0.0);
    step_count_ = 0;
    t_ = 0.0;
    return observe();
}

EnvStep QuadTrackingEnv::step(const Eigen::VectorXd& action) {
    require(action.size() == 3, "quad env: 3-vector action expected");
    Eigen::Vector3d offsets = action.cwiseMin(action_high()).cwiseMax(action_low());
    Eigen::Vector3d forces(offsets[0], offsets[1], opt_.params.hover_thrust() + offsets[2]);

    // integrate at inner resolution so a whirling load is caught before the
    // cos(alpha) singularity, ending the episode at the angle limit
    bool failed = false;
    const int n_sub = static_cast<int>(std::lround(opt_.agent_dt / opt_.inner_dt));
    for (int i = 0; i < n_sub; ++i) {
        try {
            state_ = quad_step(state_, forces, opt_.params, opt_.inner_dt, opt_.inner_dt,
                               t_ + i * opt_.inner_dt);
        } catch (const NumericError&) {
            failed = true;
            break;
        }
        if (std::abs(state_.alpha) > opt_.angle_limit ||
            std::abs(state_.beta) > opt_.angle_limit) {
            failed = true;
            break;
        }
    }
    t_ += opt_.agent_dt;
    ++step_count_;

    EnvStep out;
    const Eigen::Vector3d err = state_.position - opt_.reference.position(t_);
    const double err_cost =
        std::min(err.squaredNorm(), opt_.err_saturation * opt_.err_saturation);
    const double rate_sq = state_.alpha_dot * state_.alpha_dot + state_.beta_dot * state_.beta_dot;
    out.reward = -(err_cost + 0.1 * rate_sq + 0.0001 * offsets.squaredNorm());
    out.done = failed;
    if (out.done) out.reward -= opt_.termination_penalty;
    out.obs = observe();
    return out;
}

}  // namespace ferl
