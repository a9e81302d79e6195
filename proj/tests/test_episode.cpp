#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ferl/common.hpp"
#include "ferl/episode.hpp"

using namespace ferl;

namespace {

PendulumEpisodeOptions hanging_options(double duration = 20.0) {
    PendulumEpisodeOptions opt;
    PendulumParams p;
    p.mass = 2.0;
    p.length = 7.0;
    opt.schedule = ParameterSchedule<PendulumParams>::constant(p);
    opt.duration = duration;
    return opt;
}

}  // namespace

TEST_CASE("uncontrolled pendulum stays hanging") {
    const EpisodeLog log =
        run_pendulum_episode(PendulumController::zero_torque(), hanging_options());
    const auto& theta = log.column("theta");
    for (double th : theta) CHECK(std::abs(std::abs(wrap_angle(th)) - kPi) < 0.3);
    CHECK(log.rows() == 401);  // 400 steps + final state
    CHECK(log.value("t", 400) == doctest::Approx(20.0));
}

TEST_CASE("episodes are deterministic given the seed") {
    PendulumEpisodeOptions opt = hanging_options(2.0);
    opt.init_jitter = 0.1;
    opt.seed = 1234;
    const auto ctrl = PendulumController::from_script(
        [](double t, const PendulumState&) { return 20.0 * std::sin(3.0 * t); });
    const EpisodeLog a = run_pendulum_episode(ctrl, opt);
    const EpisodeLog b = run_pendulum_episode(ctrl, opt);
    std::ostringstream sa, sb;
    a.write_csv(sa);
    b.write_csv(sb);
    CHECK(sa.str() == sb.str());

    opt.seed = 1235;
    const EpisodeLog c = run_pendulum_episode(ctrl, opt);
    std::ostringstream sc;
    c.write_csv(sc);
    CHECK(sa.str() != sc.str());  // jitter differs
}

TEST_CASE("plant-side torque clamp applies") {
    PendulumEpisodeOptions opt = hanging_options(1.0);
    opt.torque_limit = 50.0;
    const auto ctrl =
        PendulumController::from_script([](double, const PendulumState&) { return 500.0; });
    const EpisodeLog log = run_pendulum_episode(ctrl, opt);
    for (double u : log.column("torque")) CHECK(u == 50.0);
}

TEST_CASE("swingup success criteria") {
    SUBCASE("upright through the hold window") {
        EpisodeLog log(0.05, {"t", "theta"});
        for (int k = 0; k <= 400; ++k) log.append_row({0.05 * k, 0.0});
        CHECK(swingup_success(log, SuccessCriteria{}));
    }
    SUBCASE("hanging fails") {
        EpisodeLog log(0.05, {"t", "theta"});
        for (int k = 0; k <= 400; ++k) log.append_row({0.05 * k, kPi});
        CHECK_FALSE(swingup_success(log, SuccessCriteria{}));
    }
    SUBCASE("the band bound is inclusive") {
        EpisodeLog log(0.05, {"t", "theta"});
        for (int k = 0; k <= 400; ++k) log.append_row({0.05 * k, 0.19});
        CHECK(swingup_success(log, SuccessCriteria{0.2, 5.0}));
        EpisodeLog log2(0.05, {"t", "theta"});
        for (int k = 0; k <= 400; ++k) log2.append_row({0.05 * k, 0.21});
        CHECK_FALSE(swingup_success(log2, SuccessCriteria{0.2, 5.0}));
    }
    SUBCASE("only the final window matters") {
        EpisodeLog log(0.05, {"t", "theta"});
        for (int k = 0; k <= 400; ++k) log.append_row({0.05 * k, 0.05 * k < 15.0 ? kPi : 0.0});
        CHECK(swingup_success(log, SuccessCriteria{}));
    }
    SUBCASE("a short log is rejected") {
        EpisodeLog log(0.05, {"t", "theta"});
        for (int k = 0; k <= 10; ++k) log.append_row({0.05 * k, 0.0});
        CHECK_THROWS_AS(swingup_success(log, SuccessCriteria{0.2, 5.0}), InvalidInput);
    }
}

TEST_CASE("identification converges inside a controlled episode") {
    PendulumEpisodeOptions opt = hanging_options();
    IdentificationOptions id;
    id.initial_guess.length = 6.0;
    id.initial_guess.mass = 2.5;
    id.sample_dt = 0.001;
    opt.identification = id;
    // rich scripted excitation
    const auto ctrl = PendulumController::from_script([](double t, const PendulumState&) {
        return 20.0 * (std::sin(2.0 * kPi * 0.25 * t) + 0.6 * std::sin(2.0 * kPi * 0.9 * t + 1.0));
    });
    const EpisodeLog log = run_pendulum_episode(ctrl, opt);
    const std::size_t last = log.rows() - 1;
    CHECK(std::abs(log.value("est_length", last) - 7.0) / 7.0 < 0.02);
    CHECK(std::abs(log.value("est_mass", last) - 2.0) / 2.0 < 0.02);
    // psi trace is logged
    CHECK(log.value("psi2", last) == doctest::Approx(9.81 / 7.0).epsilon(0.02));
}

TEST_CASE("rmse scoring") {
    SUBCASE("zero error and constant error") {
        EpisodeLog log(0.05, {"t", "x", "y", "z", "ref_x", "ref_y", "ref_z"});
        for (int k = 0; k <= 100; ++k)
            log.append_row({0.05 * k, 1.01, 2.0, 3.0, 1.0, 2.0, 3.0});
        const Rmse r = tracking_rmse(log, {0.0, 5.0});
        CHECK(r.x == doctest::Approx(0.01).epsilon(1e-12));
        CHECK(r.y == 0.0);
        CHECK(r.z == 0.0);
        CHECK(r.total3d == doctest::Approx(0.01).epsilon(1e-12));
    }
    SUBCASE("sinusoidal error over whole periods gives A/sqrt(2)") {
        EpisodeLog log(0.01, {"t", "x", "y", "z", "ref_x", "ref_y", "ref_z"});
        const double amp = 0.3;
        const int n = 400;  // 4 periods of period 1 s at dt 0.01, endpoint excluded
        for (int k = 0; k < n; ++k) {
            const double t = 0.01 * k;
            log.append_row({t, amp * std::sin(2.0 * kPi * t), 0.0, 0.0, 0.0, 0.0, 0.0});
        }
        const Rmse r = tracking_rmse(log, {0.0, 3.99});
        CHECK(r.x == doctest::Approx(amp / std::sqrt(2.0)).epsilon(1e-6));
    }
    SUBCASE("rmse is invariant under a rigid time shift") {
        EpisodeLog a(0.05, {"t", "x", "y", "z", "ref_x", "ref_y", "ref_z"});
        EpisodeLog b(0.05, {"t", "x", "y", "z", "ref_x", "ref_y", "ref_z"});
        for (int k = 0; k <= 100; ++k) {
            const double t = 0.05 * k;
            const double sig = std::sin(t), ref = std::cos(t);
            a.append_row({t, sig, 0, 0, ref, 0, 0});
            b.append_row({t + 10.0, sig, 0, 0, ref, 0, 0});
        }
        const Rmse ra = tracking_rmse(a, {0.0, 5.0});
        const Rmse rb = tracking_rmse(b, {10.0, 15.0});
        CHECK(ra.x == doctest::Approx(rb.x).epsilon(1e-12));
    }
    SUBCASE("empty window is rejected") {
        EpisodeLog log(0.05, {"t", "x", "y", "z", "ref_x", "ref_y", "ref_z"});
        log.append_row({0.0, 0, 0, 0, 0, 0, 0});
        CHECK_THROWS_AS(tracking_rmse(log, {5.0, 6.0}), InvalidInput);
    }
}

TEST_CASE("quad episode holds hover under a perfect stationary reference") {
    QuadEpisodeOptions opt;
    opt.reference.amplitude = Eigen::Vector3d::Zero();
    opt.reference.center = Eigen::Vector3d(0.0, 0.0, 1.0);
    opt.duration = 2.0;

    // zero-offset constant policy
    Policy p;
    p.kind = Policy::Kind::actor_net;
    p.obs_spec = "quad_tracking";
    p.action_low = Eigen::VectorXd::Constant(3, -4.0);
    p.action_high = Eigen::VectorXd::Constant(3, 4.0);
    std::vector<DenseLayer> layers;
    layers.push_back({Eigen::MatrixXd::Zero(3, 10), Eigen::VectorXd::Zero(3), Activation::tanh});
    p.actor = DenseNet(layers);

    opt.phases = {{0.0, &p, nullptr, "hover"}};
    opt.membership_query = Eigen::VectorXd::Constant(1, 0.75);
    const EpisodeLog log = run_quad_episode(opt);
    const Rmse r = tracking_rmse(log, {0.0, 2.0});
    CHECK(r.total3d < 1e-12);  // exact hover equilibrium
}

TEST_CASE("episode log csv escapes nothing and round-trips numbers exactly") {
    EpisodeLog log(0.5, {"t", "v"});
    log.append_row({0.0, 0.1});
    log.append_row({0.5, -1.0 / 3.0});
    std::ostringstream os;
    log.write_csv(os);
    CHECK(os.str() == "t,v\n0,0.1\n0.5,-0.3333333333333333\n");
}
