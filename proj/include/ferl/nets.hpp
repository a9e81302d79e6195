#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ferl/rng.hpp"

namespace ferl {

enum class Activation { relu, tanh, linear };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct DenseLayer {
    Eigen::MatrixXd w;
    Eigen::VectorXd b;
    Activation act = Activation::linear;
};

struct NetGrads {
    std::vector<Eigen::MatrixXd> dw;
    std::vector<Eigen::VectorXd> db;
};

// Plain fully connected net with manual forward/backward. Batch matrices hold
// one sample per column.
class DenseNet {
public:
    struct Cache {
        Eigen::MatrixXd input;
        std::vector<Eigen::MatrixXd> pre;   // W x + b
        std::vector<Eigen::MatrixXd> post;  // activation(pre)
    };

    DenseNet() = default;
    explicit DenseNet(std::vector<DenseLayer> layers);

    // Uniform fan-in init for weights and biases.
    static DenseNet mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                        Activation hidden_act, Activation output_act, Rng& rng);

    int input_dim() const;
    int output_dim() const;
    const std::vector<DenseLayer>& layers() const { return layers_; }
    std::vector<DenseLayer>& layers() { return layers_; }

    Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const;
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Cache& cache) const;

    // Accumulates parameter gradients for upstream d_out; returns d_input.
    Eigen::MatrixXd backward(const Cache& cache, const Eigen::MatrixXd& d_out, NetGrads& grads) const;

private:
    std::vector<DenseLayer> layers_;
};

// Q network: obs branch (dense h1, relu, dense h2) + action branch (dense h2),
// summed, relu, dense 1.
class Critic {
public:
    struct Cache {
        Eigen::MatrixXd obs, act;
        Eigen::MatrixXd h1_pre, h1;  // obs branch hidden
        Eigen::MatrixXd z;           // branch sum pre-relu
        Eigen::MatrixXd h2;          // relu(z)
    };

    struct Grads {
        Eigen::MatrixXd dw_obs1, dw_obs2, dw_act, dw_out;
        Eigen::VectorXd db_obs1, db_obs2, db_act, db_out;
    };

    Critic() = default;
    static Critic make(int obs_dim, int act_dim, int h1, int h2, Rng& rng);

    double forward(const Eigen::VectorXd& obs, const Eigen::VectorXd& act) const;
    Eigen::RowVectorXd forward(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act) const;
    Eigen::RowVectorXd forward(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act,
                               Cache& cache) const;

    // d_q is the 1 x B upstream gradient. Either output may be null.
    void backward(const Cache& cache, const Eigen::RowVectorXd& d_q, Grads* grads,
                  Eigen::MatrixXd* d_act) const;

    Eigen::MatrixXd w_obs1, w_obs2, w_act, w_out;
    Eigen::VectorXd b_obs1, b_obs2, b_act, b_out;
};

// Adam with bias correction; moment buffers sized lazily on first step.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(const std::vector<Eigen::MatrixXd*>& weights,
              const std::vector<const Eigen::MatrixXd*>& weight_grads,
              const std::vector<Eigen::VectorXd*>& biases,
              const std::vector<const Eigen::VectorXd*>& bias_grads);

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<Eigen::MatrixXd> mw_, vw_;
    std::vector<Eigen::VectorXd> mb_, vb_;
};

void soft_update(DenseNet& target, const DenseNet& online, double tau);
void soft_update(Critic& target, const Critic& online, double tau);

}  // namespace ferl
