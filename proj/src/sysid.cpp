#include "ferl/sysid.hpp"

#include <cmath>

#include "ferl/common.hpp"

namespace ferl {

RlsEstimator::RlsEstimator(Eigen::VectorXd initial_estimate, double initial_covariance,
                           double forgetting)
    : psi_(std::move(initial_estimate)), forgetting_(forgetting) {
    require(forgetting_ > 0.0 && forgetting_ <= 1.0, "rls: forgetting factor must be in (0, 1]");
    require(initial_covariance > 0.0, "rls: initial covariance must be > 0");
    require(psi_.size() >= 1, "rls: empty parameter vector");
    cov_ = initial_covariance *
           Eigen::MatrixXd::Identity(psi_.size(), psi_.size());
}

void RlsEstimator::update(const RegressorSample& sample) {
    require(sample.phi.size() == psi_.size(), "rls: regressor dimension mismatch");
    require(sample.phi.allFinite() && std::isfinite(sample.y), "rls: non-finite sample");

    const Eigen::VectorXd p_phi = cov_ * sample.phi;
    const double denom = forgetting_ + sample.phi.dot(p_phi);
    if (denom <= 0.0) throw NumericError("rls: non-positive gain denominator");

    const Eigen::VectorXd gain = p_phi / denom;
    psi_ += gain * (sample.y - sample.phi.dot(psi_));
    cov_ = (cov_ - p_phi * p_phi.transpose() / denom) / forgetting_;
    cov_ = 0.5 * (cov_ + cov_.transpose().eval());
}

RegressorSample pendulum_regressors(double u, double theta, double omega_prev, double omega_curr,
                                    double dt) {
    require(dt > 0.0, "pendulum_regressors: dt must be > 0");
    RegressorSample s;
    s.phi = Eigen::Vector2d(u, std::sin(theta));
    s.y = (omega_curr - omega_prev) / dt;
    return s;
}

Eigen::Vector2d pendulum_coefficients(const PendulumParams& p) {
    p.validate();
    return {1.0 / (p.mass * p.length * p.length), p.gravity / p.length};
}

PendulumParams recover_params(const Eigen::Vector2d& psi_hat, double gravity) {
    if (!(psi_hat[0] > 0.0 && psi_hat[1] > 0.0))
        throw NotIdentifiable("recover_params: coefficients not yet positive");
    PendulumParams p;
    p.gravity = gravity;
    p.length = gravity / psi_hat[1];
    p.mass = 1.0 / (psi_hat[0] * p.length * p.length);
    return p;
}

}  // namespace ferl
