#include <doctest.h>

#include <cmath>

#include "ferl/common.hpp"
#include "ferl/ensemble.hpp"
#include "ferl/rng.hpp"

using namespace ferl;

namespace {

// constant-output policy built from a zero-weight linear actor
Policy constant_policy(double action, double low = -30.0, double high = 30.0) {
    Policy p;
    p.kind = Policy::Kind::actor_net;
    p.obs_spec = "pendulum_cos_sin_omega";
    p.action_low = Eigen::VectorXd::Constant(1, low);
    p.action_high = Eigen::VectorXd::Constant(1, high);
    const double normalized = (action - 0.5 * (low + high)) / (0.5 * (high - low));
    std::vector<DenseLayer> layers;
    layers.push_back({Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Constant(1, normalized),
                      Activation::linear});
    p.actor = DenseNet(layers);
    return p;
}

// 1-D centers placed so that membership(x=0) = mu exactly (q = 2)
ClusterModel model_with_memberships(const std::vector<double>& mu) {
    const int n = static_cast<int>(mu.size());
    Eigen::MatrixXd centers(n, 1);
    for (int j = 0; j < n; ++j) centers(j, 0) = std::sqrt(1.0 / mu[j]);
    Eigen::VectorXd lo = Eigen::VectorXd::Constant(1, 0.0);
    Eigen::VectorXd hi = Eigen::VectorXd::Constant(1, 1.0);
    return ClusterModel(centers, 2.0, lo, hi);
}

ClusterModel grid_model_2d() {
    Eigen::MatrixXd centers(5, 2);
    centers << 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.5, 0.5;
    return ClusterModel(centers, 2.0, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Ones(2));
}

}  // namespace

TEST_CASE("identical policies fuse to their common action") {
    auto model = model_with_memberships({0.5, 0.3, 0.2});
    std::vector<Policy> policies = {constant_policy(7.5), constant_policy(7.5),
                                    constant_policy(7.5)};
    EnsembleController ctrl(model, policies, 1e9, FusionMode::ferl);
    const Eigen::VectorXd a = fuse(ctrl, Eigen::VectorXd::Zero(1), Eigen::Vector3d(1, 0, 0));
    CHECK(a[0] == doctest::Approx(7.5).epsilon(1e-12));
}

TEST_CASE("weighted sum with an infinite threshold") {
    auto model = model_with_memberships({0.7, 0.3});
    std::vector<Policy> policies = {constant_policy(10.0), constant_policy(-10.0)};
    EnsembleController ctrl(model, policies, 1e18, FusionMode::ferl);
    FuseDiagnostics diag;
    const Eigen::VectorXd a = fuse(ctrl, Eigen::VectorXd::Zero(1), Eigen::Vector3d(1, 0, 0), &diag);
    CHECK(a[0] == doctest::Approx(0.7 * 10.0 + 0.3 * (-10.0)).epsilon(1e-9));
    CHECK(diag.kept[0] == 1);
    CHECK(diag.kept[1] == 1);
}

TEST_CASE("agreement filter drops the outlier and renormalizes (worked example)") {
    auto model = model_with_memberships({0.6, 0.3, 0.1});
    std::vector<Policy> policies = {constant_policy(10.0), constant_policy(11.0),
                                    constant_policy(-9.0)};
    EnsembleController ctrl(model, policies, 5.0, FusionMode::ferl);
    FuseDiagnostics diag;
    const Eigen::VectorXd a = fuse(ctrl, Eigen::VectorXd::Zero(1), Eigen::Vector3d(1, 0, 0), &diag);
    // anchor = policy 0; |11-10| = 1 < 5 kept, |-9-10| = 19 >= 5 dropped
    CHECK(diag.kept[0] == 1);
    CHECK(diag.kept[1] == 1);
    CHECK(diag.kept[2] == 0);
    CHECK(diag.memberships[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(diag.memberships[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(a[0] == doctest::Approx(10.0 + 1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("fused action is a convex combination of kept actions") {
    Rng rng(8);
    for (int trial = 0; trial < 50; ++trial) {
        auto model = model_with_memberships({0.5, 0.3, 0.2});
        const double a0 = rng.uniform(-30, 30), a1 = rng.uniform(-30, 30),
                     a2 = rng.uniform(-30, 30);
        std::vector<Policy> policies = {constant_policy(a0), constant_policy(a1),
                                        constant_policy(a2)};
        EnsembleController ctrl(model, policies, rng.uniform(1.0, 60.0), FusionMode::ferl);
        FuseDiagnostics diag;
        const double fused =
            fuse(ctrl, Eigen::VectorXd::Zero(1), Eigen::Vector3d(1, 0, 0), &diag)[0];
        double lo = 1e300, hi = -1e300;
        const double actions[3] = {a0, a1, a2};
        for (int j = 0; j < 3; ++j) {
            if (!diag.kept[j]) continue;
            lo = std::min(lo, actions[j]);
            hi = std::max(hi, actions[j]);
        }
        CHECK(fused >= lo - 1e-9);
        CHECK(fused <= hi + 1e-9);
        CHECK(std::abs(diag.memberships.sum() - 1.0) < 1e-9);
    }
}

TEST_CASE("a query at a center returns that policy exactly in every mode") {
    auto model = grid_model_2d();
    std::vector<Policy> policies;
    for (int j = 0; j < 5; ++j) policies.push_back(constant_policy(3.0 * j - 6.0));
    const Eigen::Vector2d query(0.5, 0.5);  // center 4
    for (FusionMode mode : {FusionMode::ferl, FusionMode::ferl_hull, FusionMode::nearest}) {
        EnsembleController ctrl(model, policies, 0.5, mode);
        const double a = fuse(ctrl, query, Eigen::Vector3d(1, 0, 0))[0];
        CHECK(a == doctest::Approx(3.0 * 4 - 6.0).epsilon(1e-12));
    }
}

TEST_CASE("nearest mode returns exactly the nearest policy's action") {
    auto model = grid_model_2d();
    std::vector<Policy> policies;
    for (int j = 0; j < 5; ++j) policies.push_back(constant_policy(2.0 + j));
    EnsembleController ctrl(model, policies, 0.1, FusionMode::nearest);
    const double a = fuse(ctrl, Eigen::Vector2d(0.9, 0.95), Eigen::Vector3d(1, 0, 0))[0];
    CHECK(a == 2.0 + 3);  // center (1,1) is index 3
}

TEST_CASE("nearest_policy anchors and tie-breaks") {
    auto model = grid_model_2d();
    CHECK(nearest_policy(model, Eigen::Vector2d(0.5, 0.5)) == 4);
    CHECK(nearest_policy(model, Eigen::Vector2d(0.02, 0.01)) == 0);
    // equidistant between centers 0 and 1 -> lowest index
    CHECK(nearest_policy(model, Eigen::Vector2d(0.5, 0.0)) == 0);

    // 1-D anchor: centers {0, 10}, x = 4 -> index 0
    Eigen::MatrixXd centers(2, 1);
    centers << 0.0, 10.0;
    ClusterModel m1(centers, 2.0, Eigen::VectorXd::Zero(1),
                    Eigen::VectorXd::Constant(1, 10.0));
    CHECK(nearest_policy(m1, Eigen::VectorXd::Constant(1, 4.0)) == 0);

    // argmin is invariant to uniformly scaling the space
    ClusterModel m2(2.0 * centers, 2.0, Eigen::VectorXd::Zero(1),
                    Eigen::VectorXd::Constant(1, 20.0));
    CHECK(nearest_policy(m2, Eigen::VectorXd::Constant(1, 8.0)) == 0);
}

TEST_CASE("hull selection") {
    auto model = grid_model_2d();
    SUBCASE("interior point is contained by the nearest triangle") {
        const HullSelection sel = select_hull(model, Eigen::Vector2d(0.45, 0.40));
        CHECK(sel.indices.size() >= 3);
        CHECK(sel.indices.size() < 5);
        CHECK(std::abs(sel.memberships.sum() - 1.0) < 1e-9);
    }
    SUBCASE("query at a center degenerates to that center") {
        const HullSelection sel = select_hull(model, Eigen::Vector2d(1.0, 1.0));
        REQUIRE(sel.indices.size() == 1);
        CHECK(sel.indices[0] == 3);
        CHECK(sel.memberships[0] == 1.0);
    }
    SUBCASE("outside the bounding hull falls back to the full set") {
        const HullSelection sel = select_hull(model, Eigen::Vector2d(2.0, 2.0));
        CHECK(sel.indices.size() == 5);
        const Eigen::VectorXd mu_full = model.membership(Eigen::Vector2d(2.0, 2.0));
        for (int j = 0; j < 5; ++j)
            CHECK(sel.memberships[j] == doctest::Approx(mu_full[j]).epsilon(1e-12));
    }
    SUBCASE("1-D models reject hull selection") {
        Eigen::MatrixXd centers(2, 1);
        centers << 0.0, 1.0;
        ClusterModel m(centers, 2.0, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Ones(1));
        CHECK_THROWS_AS(select_hull(m, Eigen::VectorXd::Constant(1, 0.5)), InvalidInput);
    }
}

TEST_CASE("ensemble construction validates the policy set") {
    auto model = model_with_memberships({0.6, 0.4});
    std::vector<Policy> wrong_count = {constant_policy(1.0)};
    CHECK_THROWS_AS(EnsembleController(model, wrong_count, 1.0, FusionMode::ferl), InvalidInput);

    std::vector<Policy> mismatched = {constant_policy(1.0, -30, 30), constant_policy(1.0, -50, 50)};
    CHECK_THROWS_AS(EnsembleController(model, mismatched, 1.0, FusionMode::ferl), InvalidInput);
}

TEST_CASE("dr_train with point ranges equals ddpg_train on that plant") {
    PendulumEnv::Options opt;
    opt.episode_length_s = 1.0;
    opt.params.length = 7.0;
    opt.params.mass = 2.0;
    DdpgHyper h;
    h.episodes = 2;
    h.episode_length_s = 1.0;
    h.warmup_steps = 8;
    h.batch_size = 8;
    h.replay_capacity = 500;
    h.hidden1 = 6;
    h.hidden2 = 4;

    PendulumEnv fixed(opt);
    const TrainResult a = ddpg_train(fixed, h, 77);
    const TrainResult b = dr_train({7.0, 7.0}, {2.0, 2.0}, opt, h, 77);
    for (std::size_t i = 0; i < a.policy.actor.layers().size(); ++i) {
        CHECK((a.policy.actor.layers()[i].w - b.policy.actor.layers()[i].w).cwiseAbs().maxCoeff() ==
              0.0);
        CHECK((a.policy.actor.layers()[i].b - b.policy.actor.layers()[i].b).cwiseAbs().maxCoeff() ==
              0.0);
    }

    // the sampled parameter sequence is reproducible
    const TrainResult c = dr_train({6.0, 8.0}, {0.5, 2.5}, opt, h, 31);
    const TrainResult d = dr_train({6.0, 8.0}, {0.5, 2.5}, opt, h, 31);
    for (std::size_t i = 0; i < c.policy.actor.layers().size(); ++i)
        CHECK((c.policy.actor.layers()[i].w - d.policy.actor.layers()[i].w).cwiseAbs().maxCoeff() ==
              0.0);
}
