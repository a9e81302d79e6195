#pragma once

#include <Eigen/Dense>

#include "ferl/plants.hpp"

namespace ferl {

struct RegressorSample {
    Eigen::VectorXd phi;  // regressors
    double y = 0.0;       // measured output
};

// Recursive least squares with forgetting factor. The covariance is
// re-symmetrized after every update and stays positive definite.
class RlsEstimator {
public:
    RlsEstimator(Eigen::VectorXd initial_estimate, double initial_covariance, double forgetting);

    void update(const RegressorSample& sample);

    const Eigen::VectorXd& estimate() const { return psi_; }
    const Eigen::MatrixXd& covariance() const { return cov_; }
    double forgetting() const { return forgetting_; }

private:
    Eigen::VectorXd psi_;
    Eigen::MatrixXd cov_;
    double forgetting_;
};

// phi = (u, sin theta), y = backward difference of omega. The caller chooses
// which theta sample to feed (run_episode uses the interval midpoint so the
// regressor pairs with the centered difference quotient).
RegressorSample pendulum_regressors(double u, double theta, double omega_prev, double omega_curr,
                                    double dt);

// Forward coefficient map: (1/(m l^2), g/l) for the pendulum.
Eigen::Vector2d pendulum_coefficients(const PendulumParams& p);

// Invert the coefficient map: l = g/psi2, m = 1/(psi1 l^2). Throws
// NotIdentifiable when either coefficient is non-positive.
PendulumParams recover_params(const Eigen::Vector2d& psi_hat, double gravity);

}  // namespace ferl
