#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ferl/envs.hpp"
#include "ferl/policy.hpp"

namespace ferl {

struct DdpgHyper {
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double discount = 0.99;
    double noise_variance = 0.6;  // Gaussian, in normalized action units
    double episode_length_s = 20.0;
    double agent_dt = 0.05;
    std::size_t replay_capacity = 1'000'000;
    int batch_size = 64;
    double target_tau = 0.005;
    int episodes = 300;
    int warmup_steps = 1000;    // steps before updates start
    bool warmup_uniform = true; // warmup actions: uniform over the range, or
                                // exploration noise around zero (gentler, for
                                // plants that fail under violent excitation)
    int hidden1 = 200;
    int hidden2 = 100;
    // conventional DDPG stabilizers: L2 decay on weight matrices and per-array
    // gradient-norm clipping; both keep the tanh actor out of permanent
    // saturation
    double l2_weight_decay = 1e-4;
    double grad_clip_norm = 1.0;  // 0 disables

    void validate() const;
};

struct TrainCurvePoint {
    int episode = 0;
    double episode_return = 0.0;
    double mean_critic_loss = 0.0;
};

struct TrainResult {
    Policy policy;
    std::vector<TrainCurvePoint> curve;
    int episodes_run = 0;
    bool stopped_early = false;
};

// Called every eval_every episodes with the current greedy policy; returning
// true stops training early.
using StopCallback = std::function<bool(const Policy&, int episodes_done)>;

// Standard DDPG: Gaussian exploration noise on the normalized actor output,
// critic regressed to r + gamma * Q_target(s', pi_target(s')), actor ascending
// the critic, soft target updates. Deterministic given (env, hyper, seed).
TrainResult ddpg_train(ControlEnv& env, const DdpgHyper& hyper, std::uint64_t seed,
                       const StopCallback& stop = nullptr, int eval_every = 0);

}  // namespace ferl
