#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "ferl/common.hpp"
#include "ferl/rng.hpp"

namespace ferl {

// Ring buffer of transitions in flat storage; uniform sampling over current
// contents with a caller-supplied RNG (reproducible).
class ReplayBuffer {
public:
    ReplayBuffer(int obs_dim, int act_dim, std::size_t capacity)
        : obs_dim_(obs_dim), act_dim_(act_dim), capacity_(capacity) {
        require(obs_dim >= 1 && act_dim >= 1 && capacity >= 1, "replay: bad dimensions");
        obs_.resize(capacity * obs_dim);
        act_.resize(capacity * act_dim);
        next_obs_.resize(capacity * obs_dim);
        rew_.resize(capacity);
        done_.resize(capacity);
    }

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }

    void push(const Eigen::VectorXd& obs, const Eigen::VectorXd& act, double reward,
              const Eigen::VectorXd& next_obs, bool done) {
        require(obs.size() == obs_dim_ && next_obs.size() == obs_dim_ && act.size() == act_dim_,
                "replay: transition dimension mismatch");
        const std::size_t i = head_;
        for (int d = 0; d < obs_dim_; ++d) obs_[i * obs_dim_ + d] = obs[d];
        for (int d = 0; d < act_dim_; ++d) act_[i * act_dim_ + d] = act[d];
        for (int d = 0; d < obs_dim_; ++d) next_obs_[i * obs_dim_ + d] = next_obs[d];
        rew_[i] = reward;
        done_[i] = done ? 1 : 0;
        head_ = (head_ + 1) % capacity_;
        if (size_ < capacity_) ++size_;
    }

    struct Batch {
        Eigen::MatrixXd obs, act, next_obs;  // one column per transition
        Eigen::RowVectorXd reward;
        Eigen::RowVectorXd not_done;  // 0 where terminal, else 1
    };

    Batch sample(int n, Rng& rng) const {
        require(size_ > 0, "replay: sampling from empty buffer");
        Batch b;
        b.obs.resize(obs_dim_, n);
        b.act.resize(act_dim_, n);
        b.next_obs.resize(obs_dim_, n);
        b.reward.resize(n);
        b.not_done.resize(n);
        for (int k = 0; k < n; ++k) {
            const std::size_t i =
                static_cast<std::size_t>(rng.uniform_int(static_cast<int>(size_)));
            for (int d = 0; d < obs_dim_; ++d) b.obs(d, k) = obs_[i * obs_dim_ + d];
            for (int d = 0; d < act_dim_; ++d) b.act(d, k) = act_[i * act_dim_ + d];
            for (int d = 0; d < obs_dim_; ++d) b.next_obs(d, k) = next_obs_[i * obs_dim_ + d];
            b.reward[k] = rew_[i];
            b.not_done[k] = done_[i] ? 0.0 : 1.0;
        }
        return b;
    }

private:
    int obs_dim_, act_dim_;
    std::size_t capacity_, size_ = 0, head_ = 0;
    std::vector<double> obs_, act_, next_obs_, rew_;
    std::vector<unsigned char> done_;
};

}  // namespace ferl
