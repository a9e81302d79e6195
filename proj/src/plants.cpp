#include "ferl/plants.hpp"

#include "ferl/rng.hpp"

namespace ferl {

Eigen::Matrix<double, 10, 1> QuadSlungState::to_vector() const {
    Eigen::Matrix<double, 10, 1> v;
    v << position, velocity, alpha, beta, alpha_dot, beta_dot;
    return v;
}

QuadSlungState QuadSlungState::from_vector(const Eigen::Matrix<double, 10, 1>& v) {
    QuadSlungState s;
    s.position = v.segment<3>(0);
    s.velocity = v.segment<3>(3);
    s.alpha = v[6];
    s.beta = v[7];
    s.alpha_dot = v[8];
    s.beta_dot = v[9];
    return s;
}

Eigen::Matrix<double, 10, 1> quad_slung_deriv(const QuadSlungState& s, const Eigen::Vector3d& forces,
                                              const QuadSlungParams& p) {
    const double ca = std::cos(s.alpha), sa = std::sin(s.alpha);
    const double cb = std::cos(s.beta), sb = std::sin(s.beta);
    if (std::abs(ca) <= 1e-6 || std::abs(cb) <= 1e-6)
        throw SingularityError("quad slung load near horizontal (cos(angle) ~ 0)");

    const double fx = forces[0], fy = forces[1], fz = forces[2];
    const double mql = p.quad_mass * p.cable_length;
    const double coupling = p.coupling();
    const double total = p.total_mass();

    // load angular accelerations first, then the translational equations
    const double alpha_dd = -(fx * ca + fy * sa * sb + fz * sa * cb +
                              mql * s.beta_dot * s.beta_dot * sa * ca) /
                            mql;
    const double beta_dd =
        (2.0 * mql * s.alpha_dot * s.beta_dot * sa - fy * cb - fz * sb) / (mql * ca);

    const double x_dd =
        (fx - coupling * alpha_dd * ca * cb + coupling * s.alpha_dot * s.alpha_dot * sa * cb) / total;
    const double y_dd =
        (fy - coupling * beta_dd * ca * cb + coupling * s.beta_dot * s.beta_dot * sb * ca) / total;
    const double z_dd = (fz - total * p.gravity + coupling * alpha_dd * sa * cb +
                         coupling * beta_dd * ca * sb + coupling * s.alpha_dot * s.alpha_dot * ca * cb +
                         coupling * s.beta_dot * s.beta_dot * ca * cb) /
                        total;

    Eigen::Matrix<double, 10, 1> d;
    d << s.velocity, x_dd, y_dd, z_dd, s.alpha_dot, s.beta_dot, alpha_dd, beta_dd;
    return d;
}

namespace {

int substep_count(double agent_dt, double inner_dt) {
    require(agent_dt > 0.0 && inner_dt > 0.0, "step: dt must be > 0");
    const double ratio = agent_dt / inner_dt;
    const int n = static_cast<int>(std::lround(ratio));
    require(n >= 1 && std::abs(ratio - n) < 1e-9, "step: agent_dt must be a multiple of inner_dt");
    return n;
}

}  // namespace

PendulumStepResult pendulum_step(const PendulumState& s, double torque, const PendulumParams& p,
                                 double agent_dt, double inner_dt, double t_now) {
    const int n = substep_count(agent_dt, inner_dt);
    const auto f = [&](const Eigen::Vector2d& x) -> Eigen::Vector2d {
        return pendulum_deriv(PendulumState{x[0], x[1]}, torque, p);
    };
    Eigen::Vector2d x(s.theta, s.omega);
    for (int i = 0; i < n; ++i) x = rk4_step(f, x, inner_dt);
    if (!x.allFinite())
        throw NumericError("pendulum state became non-finite", t_now + agent_dt);

    // wrap-corrected midpoint of the unwrapped angle increment
    const double dtheta = wrap_angle(x[0] - s.theta);
    PendulumStepResult r;
    r.theta_mid = wrap_angle(s.theta + 0.5 * dtheta);
    r.state = PendulumState{wrap_angle(x[0]), x[1]};
    return r;
}

QuadSlungState quad_step(const QuadSlungState& s, const Eigen::Vector3d& forces,
                         const QuadSlungParams& p, double agent_dt, double inner_dt, double t_now) {
    const int n = substep_count(agent_dt, inner_dt);
    using Vec10 = Eigen::Matrix<double, 10, 1>;
    const auto f = [&](const Vec10& x) -> Vec10 {
        return quad_slung_deriv(QuadSlungState::from_vector(x), forces, p);
    };
    Vec10 x = s.to_vector();
    for (int i = 0; i < n; ++i) x = rk4_step(f, x, inner_dt);
    if (!x.allFinite()) throw NumericError("quad slung state became non-finite", t_now + agent_dt);
    return QuadSlungState::from_vector(x);
}

Eigen::Vector3d sample_wind(const WindProfile& profile, double t) {
    require(t >= 0.0, "sample_wind: t must be >= 0");
    if (t < profile.start_time) return Eigen::Vector3d::Zero();
    const double gust =
        profile.gust_amplitude * std::sin(2.0 * kPi * t / profile.gust_period);
    Eigen::Vector3d w;
    for (int axis = 0; axis < 3; ++axis) {
        const std::uint64_t counter = double_bits(t) * 3ULL + static_cast<std::uint64_t>(axis);
        w[axis] = profile.magnitude[axis] + gust +
                  profile.noise_std * counter_normal(profile.seed, counter);
    }
    return w;
}

}  // namespace ferl
