#include "ferl/policy.hpp"

#include <algorithm>
#include <cmath>

#include "ferl/common.hpp"

namespace ferl {

int QTableSpec::state_index(double theta, double omega) const {
    const double th = wrap_angle(theta);
    int ti = static_cast<int>((th + kPi) / (2.0 * kPi) * theta_bins);
    ti = std::clamp(ti, 0, theta_bins - 1);
    const double om = std::clamp(omega, -omega_max, omega_max);
    int oi = static_cast<int>((om + omega_max) / (2.0 * omega_max) * omega_bins);
    oi = std::clamp(oi, 0, omega_bins - 1);
    return ti * omega_bins + oi;
}

Eigen::VectorXd Policy::scale_action(const Eigen::VectorXd& normalized) const {
    const Eigen::VectorXd center = 0.5 * (action_low + action_high);
    const Eigen::VectorXd half = 0.5 * (action_high - action_low);
    return center + half.cwiseProduct(normalized);
}

Eigen::VectorXd Policy::normalize_action(const Eigen::VectorXd& raw) const {
    const Eigen::VectorXd center = 0.5 * (action_low + action_high);
    const Eigen::VectorXd half = 0.5 * (action_high - action_low);
    return (raw - center).cwiseQuotient(half);
}

Eigen::VectorXd Policy::act_normalized(const Eigen::VectorXd& obs) const {
    if (kind == Kind::actor_net) {
        return actor.forward(obs).cwiseMin(1.0).cwiseMax(-1.0);
    }
    // tabular: obs is (cos theta, sin theta, omega)
    require(obs.size() == 3, "q_table policy expects pendulum observation");
    const double theta = std::atan2(obs[1], obs[0]);
    const int s = qspec.state_index(theta, obs[2]);
    int best = 0;
    qtable.row(s).maxCoeff(&best);
    return normalize_action(Eigen::VectorXd::Constant(1, qspec.action_levels[best]))
        .cwiseMin(1.0)
        .cwiseMax(-1.0);
}

Eigen::VectorXd Policy::act(const Eigen::VectorXd& obs) const {
    return scale_action(act_normalized(obs));
}

}  // namespace ferl
