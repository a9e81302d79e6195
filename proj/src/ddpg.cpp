#include "ferl/ddpg.hpp"

#include <cmath>

#ifdef __SSE2__
#include <xmmintrin.h>
#endif

#include "ferl/common.hpp"
#include "ferl/nets.hpp"
#include "ferl/replay.hpp"

namespace ferl {

namespace {

// Adam moment buffers of dead units decay geometrically into subnormals and
// stall the fused update loops; flush-to-zero for the duration of training
// (restored on exit) keeps the step cost constant without changing results.
class ScopedFlushDenormals {
public:
    ScopedFlushDenormals() {
#ifdef __SSE2__
        csr_ = _mm_getcsr();
        _mm_setcsr(csr_ | 0x8040);  // FTZ | DAZ
#endif
    }
    ~ScopedFlushDenormals() {
#ifdef __SSE2__
        _mm_setcsr(csr_);
#endif
    }
    ScopedFlushDenormals(const ScopedFlushDenormals&) = delete;
    ScopedFlushDenormals& operator=(const ScopedFlushDenormals&) = delete;

private:
    unsigned int csr_ = 0;
};

}  // namespace

void DdpgHyper::validate() const {
    require(actor_lr > 0.0 && critic_lr > 0.0, "ddpg: learning rates must be > 0");
    require(discount > 0.0 && discount < 1.0, "ddpg: discount must be in (0, 1)");
    require(noise_variance >= 0.0, "ddpg: noise variance must be >= 0");
    require(batch_size >= 1, "ddpg: batch size must be >= 1");
    require(target_tau > 0.0 && target_tau <= 1.0, "ddpg: target tau must be in (0, 1]");
    require(episodes >= 0, "ddpg: episode count must be >= 0");
    require(replay_capacity >= static_cast<std::size_t>(batch_size),
            "ddpg: replay capacity must hold at least one batch");
    const double steps = episode_length_s / agent_dt;
    require(steps > 0 && std::abs(steps - std::lround(steps)) < 1e-9,
            "ddpg: episode length must be a whole number of agent steps");
}

namespace {

void clip_grad(Eigen::MatrixXd& g, double max_norm) {
    if (max_norm <= 0.0) return;
    const double n = g.norm();
    if (n > max_norm) g *= max_norm / n;
}

void clip_grad(Eigen::VectorXd& g, double max_norm) {
    if (max_norm <= 0.0) return;
    const double n = g.norm();
    if (n > max_norm) g *= max_norm / n;
}

Policy make_policy(const DenseNet& actor, const ControlEnv& env) {
    Policy p;
    p.kind = Policy::Kind::actor_net;
    p.obs_spec = env.obs_spec();
    p.action_low = env.action_low();
    p.action_high = env.action_high();
    p.actor = actor;
    return p;
}

struct ActorAdamHandles {
    std::vector<Eigen::MatrixXd*> weights;
    std::vector<Eigen::VectorXd*> biases;
};

ActorAdamHandles actor_handles(DenseNet& net) {
    ActorAdamHandles h;
    for (auto& layer : net.layers()) {
        h.weights.push_back(&layer.w);
        h.biases.push_back(&layer.b);
    }
    return h;
}

}  // namespace

TrainResult ddpg_train(ControlEnv& env, const DdpgHyper& hyper, std::uint64_t seed,
                       const StopCallback& stop, int eval_every) {
    hyper.validate();
    const ScopedFlushDenormals ftz;

    const int obs_dim = env.obs_dim();
    const int act_dim = env.action_dim();
    const int steps_per_episode = env.episode_steps();
    const double noise_std = std::sqrt(hyper.noise_variance);

    Rng init_rng(derive_seed(seed, 0xA0));
    Rng noise_rng(derive_seed(seed, 0xA1));
    Rng replay_rng(derive_seed(seed, 0xA2));

    DenseNet actor = DenseNet::mlp(obs_dim, {hyper.hidden1, hyper.hidden2}, act_dim,
                                   Activation::relu, Activation::tanh, init_rng);
    Critic critic = Critic::make(obs_dim, act_dim, hyper.hidden1, hyper.hidden2, init_rng);
    DenseNet actor_target = actor;
    Critic critic_target = critic;

    Adam actor_opt(hyper.actor_lr);
    Adam critic_opt(hyper.critic_lr);

    ReplayBuffer replay(obs_dim, act_dim, hyper.replay_capacity);

    TrainResult result;
    result.policy = make_policy(actor, env);

    long total_steps = 0;
    for (int ep = 0; ep < hyper.episodes; ++ep) {
        Eigen::VectorXd obs = env.reset(derive_seed(seed, 0xB0 + static_cast<std::uint64_t>(ep)));
        double ep_return = 0.0;
        double loss_sum = 0.0;
        long loss_count = 0;

        for (int step = 0; step < steps_per_episode; ++step) {
            Eigen::VectorXd a_norm(act_dim);
            if (total_steps < hyper.warmup_steps) {
                for (int d = 0; d < act_dim; ++d)
                    a_norm[d] = hyper.warmup_uniform ? noise_rng.uniform(-1.0, 1.0)
                                                     : noise_std * noise_rng.normal();
                a_norm = a_norm.cwiseMin(1.0).cwiseMax(-1.0);
            } else {
                a_norm = actor.forward(obs);
                for (int d = 0; d < act_dim; ++d) a_norm[d] += noise_std * noise_rng.normal();
                a_norm = a_norm.cwiseMin(1.0).cwiseMax(-1.0);
            }
            const Eigen::VectorXd a_raw = result.policy.scale_action(a_norm);

            EnvStep s = env.step(a_raw);
            ep_return += s.reward;
            replay.push(obs, a_norm, s.reward, s.obs, s.done);
            obs = s.obs;
            const bool terminal = s.done;

            if (total_steps >= hyper.warmup_steps &&
                replay.size() >= static_cast<std::size_t>(hyper.batch_size)) {
                const auto batch = replay.sample(hyper.batch_size, replay_rng);

                // critic target: r + gamma * (1 - done) * Q'(s', pi'(s'))
                const Eigen::MatrixXd next_a = actor_target.forward(batch.next_obs);
                const Eigen::RowVectorXd next_q = critic_target.forward(batch.next_obs, next_a);
                const Eigen::RowVectorXd y =
                    batch.reward + hyper.discount * batch.not_done.cwiseProduct(next_q);

                Critic::Cache ccache;
                const Eigen::RowVectorXd q = critic.forward(batch.obs, batch.act, ccache);
                const Eigen::RowVectorXd td = q - y;
                const double loss = td.squaredNorm() / hyper.batch_size;
                if (!std::isfinite(loss))
                    throw TrainingFailure("ddpg: critic loss non-finite at episode " +
                                          std::to_string(ep) + ", step " + std::to_string(step));
                loss_sum += loss;
                ++loss_count;

                Critic::Grads cgrads;
                const Eigen::RowVectorXd d_q = (2.0 / hyper.batch_size) * td;
                critic.backward(ccache, d_q, &cgrads, nullptr);
                cgrads.dw_obs1 += hyper.l2_weight_decay * critic.w_obs1;
                cgrads.dw_obs2 += hyper.l2_weight_decay * critic.w_obs2;
                cgrads.dw_act += hyper.l2_weight_decay * critic.w_act;
                cgrads.dw_out += hyper.l2_weight_decay * critic.w_out;
                for (auto* g : {&cgrads.dw_obs1, &cgrads.dw_obs2, &cgrads.dw_act, &cgrads.dw_out})
                    clip_grad(*g, hyper.grad_clip_norm);
                for (auto* g : {&cgrads.db_obs1, &cgrads.db_obs2, &cgrads.db_act, &cgrads.db_out})
                    clip_grad(*g, hyper.grad_clip_norm);
                critic_opt.step({&critic.w_obs1, &critic.w_obs2, &critic.w_act, &critic.w_out},
                                {&cgrads.dw_obs1, &cgrads.dw_obs2, &cgrads.dw_act, &cgrads.dw_out},
                                {&critic.b_obs1, &critic.b_obs2, &critic.b_act, &critic.b_out},
                                {&cgrads.db_obs1, &cgrads.db_obs2, &cgrads.db_act, &cgrads.db_out});

                // actor: ascend mean Q(s, pi(s))
                DenseNet::Cache acache;
                const Eigen::MatrixXd pi_a = actor.forward(batch.obs, acache);
                Critic::Cache qcache;
                critic.forward(batch.obs, pi_a, qcache);
                Eigen::MatrixXd d_pi;
                const Eigen::RowVectorXd ones =
                    Eigen::RowVectorXd::Constant(hyper.batch_size, -1.0 / hyper.batch_size);
                critic.backward(qcache, ones, nullptr, &d_pi);
                NetGrads agrads;
                actor.backward(acache, d_pi, agrads);
                auto handles = actor_handles(actor);
                for (std::size_t li = 0; li < agrads.dw.size(); ++li) {
                    agrads.dw[li] += hyper.l2_weight_decay * actor.layers()[li].w;
                    clip_grad(agrads.dw[li], hyper.grad_clip_norm);
                    clip_grad(agrads.db[li], hyper.grad_clip_norm);
                }
                std::vector<const Eigen::MatrixXd*> dws;
                std::vector<const Eigen::VectorXd*> dbs;
                for (auto& g : agrads.dw) dws.push_back(&g);
                for (auto& g : agrads.db) dbs.push_back(&g);
                actor_opt.step(handles.weights, dws, handles.biases, dbs);

                soft_update(actor_target, actor, hyper.target_tau);
                soft_update(critic_target, critic, hyper.target_tau);
            }
            ++total_steps;
            if (terminal) break;  // real failure state; time-limit cuts never set done
        }

        result.curve.push_back(
            {ep, ep_return, loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0});
        result.episodes_run = ep + 1;

        if (stop && eval_every > 0 && (ep + 1) % eval_every == 0) {
            result.policy.actor = actor;
            if (stop(result.policy, ep + 1)) {
                result.stopped_early = true;
                break;
            }
        }
    }

    result.policy.actor = actor;
    for (const auto& layer : result.policy.actor.layers())
        if (!layer.w.allFinite() || !layer.b.allFinite())
            throw TrainingFailure("ddpg: actor weights non-finite after training");
    return result;
}

}  // namespace ferl
