#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "ferl/envs.hpp"
#include "ferl/policy.hpp"

namespace ferl {

struct QlearnHyper {
    double learning_rate = 0.2;
    double discount = 0.99;
    double epsilon_start = 1.0;
    double epsilon_min = 0.05;
    double epsilon_decay = 0.995;  // per episode, multiplicative
    int episodes = 2000;

    void validate() const;
};

// Episodic discrete-state, discrete-action environment for the tabular core.
class DiscreteEnv {
public:
    virtual ~DiscreteEnv() = default;
    virtual int n_states() const = 0;
    virtual int n_actions() const = 0;
    virtual int max_steps() const = 0;
    virtual int reset(std::uint64_t episode_seed) = 0;
    // returns (next state, reward, done)
    struct Step {
        int state;
        double reward;
        bool done;
    };
    virtual Step step(int action) = 0;
};

// Epsilon-greedy tabular Q-learning; returns the learned table.
Eigen::MatrixXd qlearn_core(DiscreteEnv& env, const QlearnHyper& hyper, std::uint64_t seed);

// Pendulum wrapper: discretizes (theta, omega) and a finite torque set, trains
// the table, and returns a greedy q_table policy.
Policy qlearn_train(PendulumEnv& env, const QTableSpec& spec, const QlearnHyper& hyper,
                    std::uint64_t seed);

}  // namespace ferl
