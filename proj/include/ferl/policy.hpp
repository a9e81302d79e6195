#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ferl/nets.hpp"

namespace ferl {

// Discretization spec for tabular policies over the pendulum state space.
struct QTableSpec {
    int theta_bins = 31;
    int omega_bins = 31;
    double omega_max = 8.0;             // omega clamped to [-omega_max, omega_max]
    Eigen::VectorXd action_levels;      // torque levels, ascending

    int n_states() const { return theta_bins * omega_bins; }
    int n_actions() const { return static_cast<int>(action_levels.size()); }
    int state_index(double theta, double omega) const;
};

// A trained controller: either a dense actor whose tanh output is rescaled to
// the action bounds, or a tabular greedy policy over a discretized state
// space. Immutable once trained; act() is pure.
struct Policy {
    enum class Kind { actor_net, q_table };

    Kind kind = Kind::actor_net;
    std::string obs_spec;  // e.g. "pendulum_cos_sin_omega", "quad_tracking"
    Eigen::VectorXd action_low, action_high;

    DenseNet actor;                 // kind == actor_net (final activation tanh)
    QTableSpec qspec;               // kind == q_table
    Eigen::MatrixXd qtable;         // n_states x n_actions

    int action_dim() const { return static_cast<int>(action_low.size()); }

    // Normalized action in [-1, 1]^d.
    Eigen::VectorXd act_normalized(const Eigen::VectorXd& obs) const;
    // Action in raw units, always within [action_low, action_high].
    Eigen::VectorXd act(const Eigen::VectorXd& obs) const;

    Eigen::VectorXd scale_action(const Eigen::VectorXd& normalized) const;
    Eigen::VectorXd normalize_action(const Eigen::VectorXd& raw) const;
};

}  // namespace ferl
