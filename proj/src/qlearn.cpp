#include "ferl/qlearn.hpp"

#include <cmath>

#include "ferl/common.hpp"
#include "ferl/rng.hpp"

namespace ferl {

void QlearnHyper::validate() const {
    require(learning_rate > 0.0 && learning_rate <= 1.0, "qlearn: learning rate in (0, 1]");
    require(discount >= 0.0 && discount < 1.0, "qlearn: discount in [0, 1)");
    require(epsilon_start >= 0.0 && epsilon_start <= 1.0 && epsilon_min >= 0.0 &&
                epsilon_min <= epsilon_start,
            "qlearn: bad epsilon schedule");
    require(episodes >= 0, "qlearn: episodes must be >= 0");
}

Eigen::MatrixXd qlearn_core(DiscreteEnv& env, const QlearnHyper& hyper, std::uint64_t seed) {
    hyper.validate();
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(env.n_states(), env.n_actions());
    Rng rng(derive_seed(seed, 0xC0));
    double eps = hyper.epsilon_start;
    for (int ep = 0; ep < hyper.episodes; ++ep) {
        int s = env.reset(derive_seed(seed, 0xC1 + static_cast<std::uint64_t>(ep)));
        for (int step = 0; step < env.max_steps(); ++step) {
            int a;
            if (rng.uniform() < eps) {
                a = rng.uniform_int(env.n_actions());
            } else {
                q.row(s).maxCoeff(&a);
            }
            const auto r = env.step(a);
            const double target =
                r.reward + (r.done ? 0.0 : hyper.discount * q.row(r.state).maxCoeff());
            q(s, a) += hyper.learning_rate * (target - q(s, a));
            s = r.state;
            if (r.done) break;
        }
        eps = std::max(hyper.epsilon_min, eps * hyper.epsilon_decay);
    }
    return q;
}

namespace {

// Adapts the continuous pendulum env to the tabular interface.
class DiscretizedPendulum : public DiscreteEnv {
public:
    DiscretizedPendulum(PendulumEnv& env, const QTableSpec& spec) : env_(env), spec_(spec) {}

    int n_states() const override { return spec_.n_states(); }
    int n_actions() const override { return spec_.n_actions(); }
    int max_steps() const override { return env_.episode_steps(); }

    int reset(std::uint64_t episode_seed) override { return index_of(env_.reset(episode_seed)); }

    Step step(int action) override {
        const auto s =
            env_.step(Eigen::VectorXd::Constant(1, spec_.action_levels[action]));
        return {index_of(s.obs), s.reward, s.done};
    }

private:
    int index_of(const Eigen::VectorXd& obs) const {
        return spec_.state_index(std::atan2(obs[1], obs[0]), obs[2]);
    }

    PendulumEnv& env_;
    QTableSpec spec_;
};

}  // namespace

Policy qlearn_train(PendulumEnv& env, const QTableSpec& spec, const QlearnHyper& hyper,
                    std::uint64_t seed) {
    require(spec.theta_bins >= 1 && spec.omega_bins >= 1, "qlearn: bins must be >= 1");
    require(spec.action_levels.size() >= 1, "qlearn: need at least one action level");
    DiscretizedPendulum denv(env, spec);
    Policy p;
    p.kind = Policy::Kind::q_table;
    p.obs_spec = env.obs_spec();
    p.action_low = env.action_low();
    p.action_high = env.action_high();
    p.qspec = spec;
    p.qtable = qlearn_core(denv, hyper, seed);
    return p;
}

}  // namespace ferl
