#include "ferl/nets.hpp"

#include <cmath>

#include "ferl/common.hpp"

namespace ferl {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::linear: return "linear";
    }
    return "linear";
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "linear") return Activation::linear;
    throw InvalidInput("unknown activation: " + name);
}

namespace {

Eigen::MatrixXd apply_activation(Activation act, const Eigen::MatrixXd& pre) {
    switch (act) {
        case Activation::relu: return pre.cwiseMax(0.0);
        case Activation::tanh: return pre.array().tanh().matrix();
        case Activation::linear: return pre;
    }
    return pre;
}

// d(activation)/d(pre) given both pre and post values
Eigen::MatrixXd activation_grad(Activation act, const Eigen::MatrixXd& pre,
                                const Eigen::MatrixXd& post) {
    switch (act) {
        case Activation::relu:
            return (pre.array() > 0.0).cast<double>().matrix();
        case Activation::tanh:
            return (1.0 - post.array().square()).matrix();
        case Activation::linear:
            return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
    }
    return Eigen::MatrixXd::Ones(pre.rows(), pre.cols());
}

Eigen::MatrixXd init_weight(int rows, int cols, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(cols));
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    return w;
}

Eigen::VectorXd init_bias(int rows, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Eigen::VectorXd b(rows);
    for (int r = 0; r < rows; ++r) b[r] = rng.uniform(-bound, bound);
    return b;
}

}  // namespace

DenseNet::DenseNet(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
    require(!layers_.empty(), "dense net: no layers");
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        require(layers_[i].w.rows() == layers_[i].b.size(), "dense net: bias/weight shape mismatch");
        if (i > 0)
            require(layers_[i].w.cols() == layers_[i - 1].w.rows(),
                    "dense net: layer dimensions do not chain");
        require(layers_[i].w.allFinite() && layers_[i].b.allFinite(), "dense net: non-finite weights");
    }
}

DenseNet DenseNet::mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                       Activation hidden_act, Activation output_act, Rng& rng) {
    std::vector<DenseLayer> layers;
    int in = input_dim;
    for (int h : hidden) {
        layers.push_back({init_weight(h, in, rng), init_bias(h, in, rng), hidden_act});
        in = h;
    }
    layers.push_back({init_weight(output_dim, in, rng), init_bias(output_dim, in, rng), output_act});
    return DenseNet(std::move(layers));
}

int DenseNet::input_dim() const { return static_cast<int>(layers_.front().w.cols()); }
int DenseNet::output_dim() const { return static_cast<int>(layers_.back().w.rows()); }

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& x) const {
    require(x.rows() == input_dim(), "dense net: input dimension mismatch");
    Eigen::MatrixXd h = x;
    for (const auto& layer : layers_)
        h = apply_activation(layer.act, (layer.w * h).colwise() + layer.b);
    return h;
}

Eigen::VectorXd DenseNet::forward(const Eigen::VectorXd& x) const {
    return forward(Eigen::MatrixXd(x)).col(0);
}

Eigen::MatrixXd DenseNet::forward(const Eigen::MatrixXd& x, Cache& cache) const {
    require(x.rows() == input_dim(), "dense net: input dimension mismatch");
    cache.input = x;
    cache.pre.resize(layers_.size());
    cache.post.resize(layers_.size());
    const Eigen::MatrixXd* h = &cache.input;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        cache.pre[i] = (layers_[i].w * (*h)).colwise() + layers_[i].b;
        cache.post[i] = apply_activation(layers_[i].act, cache.pre[i]);
        h = &cache.post[i];
    }
    return cache.post.back();
}

Eigen::MatrixXd DenseNet::backward(const Cache& cache, const Eigen::MatrixXd& d_out,
                                   NetGrads& grads) const {
    grads.dw.resize(layers_.size());
    grads.db.resize(layers_.size());
    Eigen::MatrixXd delta = d_out;
    for (int i = static_cast<int>(layers_.size()) - 1; i >= 0; --i) {
        delta = delta.cwiseProduct(activation_grad(layers_[i].act, cache.pre[i], cache.post[i]));
        const Eigen::MatrixXd& below = (i == 0) ? cache.input : cache.post[i - 1];
        grads.dw[i] = delta * below.transpose();
        grads.db[i] = delta.rowwise().sum();
        if (i > 0) delta = (layers_[i].w.transpose() * delta).eval();
    }
    return layers_.front().w.transpose() * delta;
}

Critic Critic::make(int obs_dim, int act_dim, int h1, int h2, Rng& rng) {
    Critic c;
    c.w_obs1 = init_weight(h1, obs_dim, rng);
    c.b_obs1 = init_bias(h1, obs_dim, rng);
    c.w_obs2 = init_weight(h2, h1, rng);
    c.b_obs2 = init_bias(h2, h1, rng);
    c.w_act = init_weight(h2, act_dim, rng);
    c.b_act = init_bias(h2, act_dim, rng);
    c.w_out = init_weight(1, h2, rng);
    c.b_out = init_bias(1, h2, rng);
    return c;
}

Eigen::RowVectorXd Critic::forward(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act,
                                   Cache& cache) const {
    require(obs.rows() == w_obs1.cols() && act.rows() == w_act.cols(),
            "critic: input dimension mismatch");
    require(obs.cols() == act.cols(), "critic: obs/act batch size mismatch");
    cache.obs = obs;
    cache.act = act;
    cache.h1_pre = (w_obs1 * obs).colwise() + b_obs1;
    cache.h1 = cache.h1_pre.cwiseMax(0.0);
    cache.z = ((w_obs2 * cache.h1).colwise() + b_obs2) + ((w_act * act).colwise() + b_act);
    cache.h2 = cache.z.cwiseMax(0.0);
    return ((w_out * cache.h2).colwise() + b_out).row(0);
}

Eigen::RowVectorXd Critic::forward(const Eigen::MatrixXd& obs, const Eigen::MatrixXd& act) const {
    Cache cache;
    return forward(obs, act, cache);
}

double Critic::forward(const Eigen::VectorXd& obs, const Eigen::VectorXd& act) const {
    return forward(Eigen::MatrixXd(obs), Eigen::MatrixXd(act))(0);
}

void Critic::backward(const Cache& cache, const Eigen::RowVectorXd& d_q, Grads* grads,
                      Eigen::MatrixXd* d_act) const {
    // dQ/dh2 then through the merge relu
    Eigen::MatrixXd d_h2 = w_out.transpose() * d_q;
    Eigen::MatrixXd d_z = d_h2.cwiseProduct((cache.z.array() > 0.0).cast<double>().matrix());
    if (grads) {
        grads->dw_out = d_q * cache.h2.transpose();
        grads->db_out = d_q.rowwise().sum();
        grads->dw_obs2 = d_z * cache.h1.transpose();
        grads->db_obs2 = d_z.rowwise().sum();
        grads->dw_act = d_z * cache.act.transpose();
        grads->db_act = d_z.rowwise().sum();
        Eigen::MatrixXd d_h1 = w_obs2.transpose() * d_z;
        Eigen::MatrixXd d_h1_pre =
            d_h1.cwiseProduct((cache.h1_pre.array() > 0.0).cast<double>().matrix());
        grads->dw_obs1 = d_h1_pre * cache.obs.transpose();
        grads->db_obs1 = d_h1_pre.rowwise().sum();
    }
    if (d_act) *d_act = w_act.transpose() * d_z;
}

void Adam::step(const std::vector<Eigen::MatrixXd*>& weights,
                const std::vector<const Eigen::MatrixXd*>& weight_grads,
                const std::vector<Eigen::VectorXd*>& biases,
                const std::vector<const Eigen::VectorXd*>& bias_grads) {
    require(weights.size() == weight_grads.size() && biases.size() == bias_grads.size(),
            "adam: parameter/gradient count mismatch");
    if (mw_.empty()) {
        for (const auto* w : weights) {
            mw_.push_back(Eigen::MatrixXd::Zero(w->rows(), w->cols()));
            vw_.push_back(Eigen::MatrixXd::Zero(w->rows(), w->cols()));
        }
        for (const auto* b : biases) {
            mb_.push_back(Eigen::VectorXd::Zero(b->size()));
            vb_.push_back(Eigen::VectorXd::Zero(b->size()));
        }
    }
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < weights.size(); ++i) {
        mw_[i] = beta1_ * mw_[i] + (1.0 - beta1_) * (*weight_grads[i]);
        vw_[i] = beta2_ * vw_[i] + (1.0 - beta2_) * weight_grads[i]->cwiseProduct(*weight_grads[i]);
        weights[i]->array() -=
            lr_ * (mw_[i].array() / bc1) / ((vw_[i].array() / bc2).sqrt() + eps_);
    }
    for (std::size_t i = 0; i < biases.size(); ++i) {
        mb_[i] = beta1_ * mb_[i] + (1.0 - beta1_) * (*bias_grads[i]);
        vb_[i] = beta2_ * vb_[i] + (1.0 - beta2_) * bias_grads[i]->cwiseProduct(*bias_grads[i]);
        biases[i]->array() -=
            lr_ * (mb_[i].array() / bc1) / ((vb_[i].array() / bc2).sqrt() + eps_);
    }
}

void soft_update(DenseNet& target, const DenseNet& online, double tau) {
    for (std::size_t i = 0; i < target.layers().size(); ++i) {
        target.layers()[i].w = tau * online.layers()[i].w + (1.0 - tau) * target.layers()[i].w;
        target.layers()[i].b = tau * online.layers()[i].b + (1.0 - tau) * target.layers()[i].b;
    }
}

void soft_update(Critic& target, const Critic& online, double tau) {
    const auto mix_m = [tau](Eigen::MatrixXd& t, const Eigen::MatrixXd& o) {
        t = tau * o + (1.0 - tau) * t;
    };
    const auto mix_v = [tau](Eigen::VectorXd& t, const Eigen::VectorXd& o) {
        t = tau * o + (1.0 - tau) * t;
    };
    mix_m(target.w_obs1, online.w_obs1);
    mix_m(target.w_obs2, online.w_obs2);
    mix_m(target.w_act, online.w_act);
    mix_m(target.w_out, online.w_out);
    mix_v(target.b_obs1, online.b_obs1);
    mix_v(target.b_obs2, online.b_obs2);
    mix_v(target.b_act, online.b_act);
    mix_v(target.b_out, online.b_out);
}

}  // namespace ferl
