#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ferl/ddpg.hpp"
#include "ferl/ensemble.hpp"
#include "ferl/episode.hpp"

namespace ferl {

// Runs fn(0..n-1) on up to `parallelism` threads. Tasks must be independent;
// results are ordered by index, so worker count never changes any numeric
// output. The first task exception (lowest index) is rethrown after all tasks
// finish.
void parallel_for(int n, int parallelism, const std::function<void(int)>& fn);

// ---------------------------------------------------------------------------
// Policy evaluation
// ---------------------------------------------------------------------------

struct EvalProtocol {
    int episodes = 20;
    double init_jitter = 0.05;  // rad around the hanging position
    double torque_limit = 50.0;
    double duration = 20.0;
    double agent_dt = 0.05;
    double inner_dt = 1e-3;
    SuccessCriteria criteria;
};

// Fraction of evaluation episodes (seeded initial jitter, no exploration
// noise) that satisfy the swing-up criterion on the given plant.
double pendulum_success_rate(const PendulumController& controller, const PendulumParams& plant,
                             const EvalProtocol& protocol, std::uint64_t seed);

struct EarlyStopOptions {
    bool enabled = true;
    int eval_every = 5;       // episodes between greedy evaluations
    int eval_episodes = 2;    // evaluation episodes per check
    int required_passes = 2;  // consecutive all-success checks to stop
    int min_episodes = 20;
    double init_jitter = 0.05;
};

// ---------------------------------------------------------------------------
// Cluster-agent training
// ---------------------------------------------------------------------------

struct ClusterTrainingConfig {
    DdpgHyper hyper;
    double action_limit = 50.0;
    double train_torque_limit = 30.0;
    double inner_dt = 1e-3;
    EarlyStopOptions early_stop;
    EvalProtocol eval;           // used by early stopping
    int parallelism = 1;
    std::string cache_dir;       // empty: no caching
    bool train_if_missing = true;  // false: require cached policies (MissingArtifact otherwise)
};

// One DDPG job per cluster center (params fixed to the center), distributed
// over a worker pool; results ordered by cluster index and deterministic per
// (base_seed + index). Centers are (length, mass) rows.
std::vector<Policy> train_cluster_agents(const ClusterModel& model,
                                         const ClusterTrainingConfig& config,
                                         std::uint64_t base_seed);

// Same training setup for a single plant (used for the nominal-plant policy).
Policy train_pendulum_policy(const PendulumParams& plant, const ClusterTrainingConfig& config,
                             std::uint64_t seed);

// Domain-randomization baseline over the given box.
Policy train_dr_policy(const std::pair<double, double>& length_range,
                       const std::pair<double, double>& mass_range,
                       const ClusterTrainingConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Failure study
// ---------------------------------------------------------------------------

struct FailureStudyConfig {
    std::pair<double, double> length_range{6.0, 8.0};
    std::pair<double, double> mass_range{0.5, 2.5};
    std::array<int, 2> eval_grid{10, 10};  // length x mass points
    std::array<int, 2> fit_grid{40, 40};   // FCM sample grid
    std::vector<int> cluster_counts{10};
    std::vector<std::string> methods{"ferl", "ferl_hull", "nearest"};  // may include "dr"
    int trials = 5;
    double fcm_q = 2.0;
    double fcm_tol = 1e-6;
    int fcm_max_iter = 500;
    double agreement_threshold = 20.0;  // N*m (20% of the action range)
    ClusterTrainingConfig training;
    EvalProtocol eval;  // per-plant episode settings (single episode, no jitter)
    std::uint64_t base_seed = 1;
};

struct FailureStudyRow {
    int cluster_count = 0;
    std::string method;
    int trial = 0;
    int failures = 0;
};

struct FailureStudyResult {
    FailureStudyConfig config;
    std::vector<FailureStudyRow> rows;
    int grid_size = 0;

    std::vector<int> failures_of(int cluster_count, const std::string& method) const;
    double median_failures(int cluster_count, const std::string& method) const;
};

FailureStudyResult failure_study(const FailureStudyConfig& config);

void write_failure_study_csv(const FailureStudyResult& result, const std::string& path);
void write_failure_study_stats_csv(const FailureStudyResult& result, const std::string& path);

// ---------------------------------------------------------------------------
// Tracking study
// ---------------------------------------------------------------------------

struct TrackingStudyConfig {
    QuadSlungParams plant;                              // true plant (cable 0.75 m)
    std::vector<double> policy_cable_lengths{0.5, 1.0};
    ReferenceTrajectory reference;
    double warmup_s = 20.0;
    double phase_length_s = 15.0;
    double agent_dt = 0.05;
    double inner_dt = 1e-3;
    WindProfile wind;                                   // applied in the final phase
    double agreement_threshold = 1.6;                   // N
    double fcm_q = 2.0;
    DdpgHyper hyper;                                    // quad training settings
    QuadTrackingEnv::Options env_template;              // force limits etc.
    std::uint64_t base_seed = 1;
    int parallelism = 1;
    std::string cache_dir;
};

struct PhaseRmse {
    std::string name;
    double t_start = 0.0, t_end = 0.0;
    Rmse rmse;
};

struct TrackingStudyResult {
    std::vector<PhaseRmse> phases;  // policy_a, policy_b, ensemble, ensemble_wind
    EpisodeLog log;
};

TrackingStudyResult tracking_study(const TrackingStudyConfig& config);

void write_tracking_study_csv(const TrackingStudyResult& result, const std::string& path);

// Trains (or loads from cache) the tracking policies for the configured cable
// lengths; exposed so studies and tests can share the artifact.
std::vector<Policy> train_tracking_policies(const TrackingStudyConfig& config);

}  // namespace ferl
