#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ferl/ddpg.hpp"
#include "ferl/experiments.hpp"
#include "ferl/qlearn.hpp"

namespace ferl {

// Configuration error carrying the offending field path (CLI exit 2).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& path, const std::string& msg)
        : std::runtime_error("config." + path + ": " + msg), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// One JSON document per run. Parsing is strict: unknown keys are rejected with
// their field path, and every referenced module precondition is validated
// before any work starts.
struct ExperimentConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "runs/out";
    int parallelism = 2;
    std::string cache_dir;

    struct Plant {
        double gravity = 9.81;
        std::pair<double, double> length_range{6.0, 8.0};
        std::pair<double, double> mass_range{0.5, 2.5};
        double nominal_mass = 1.0;
        double nominal_length = 9.81;
    } plant;

    struct Cluster {
        int n_clusters = 10;
        double q = 2.0;
        double tol = 1e-6;
        int max_iter = 500;
        std::array<int, 2> fit_grid{40, 40};
    } cluster;

    std::string algorithm = "ddpg";  // ddpg | qlearn
    DdpgHyper agent;
    double action_limit = 50.0;        // actor output range
    double train_torque_limit = 30.0;  // plant-side clamp during training
    double inner_dt = 1e-3;
    EarlyStopOptions early_stop;

    struct QlearnCfg {
        QTableSpec spec;
        QlearnHyper hyper;
    } qlearn;

    struct Ensemble {
        std::string mode = "ferl";
        double agreement_threshold = 20.0;  // 20% of the action range
    } ensemble;

    EvalProtocol evaluation;

    struct Study {
        std::array<int, 2> grid{10, 10};
        int trials = 5;
        std::vector<int> cluster_counts{10};
        std::vector<std::string> methods{"ferl", "ferl_hull", "nearest"};
    } study;

    struct Identification {
        bool enabled = false;
        double forgetting = 0.998;
        double initial_covariance = 1e6;
        double initial_length = 6.0;
        double initial_mass = 2.5;
        int gate_window = 10;
        double gate_rel_change = 0.05;
        double sample_dt = 0.001;
        double excitation_amplitude = 20.0;  // scripted torque for `identify`
    } identification;

    // (t, length, mass) breakpoints for evaluate/identify scenario runs
    std::vector<std::array<double, 3>> schedule;

    bool wind_enabled = false;
    WindProfile wind;

    struct Tracking {
        double quad_mass = 1.264;
        double load_mass = 0.062;
        double true_cable_length = 0.75;
        std::vector<double> policy_cable_lengths{0.5, 1.0};
        ReferenceTrajectory reference;
        double warmup_s = 20.0;
        double phase_length_s = 15.0;
        double lateral_force_limit = 2.0;
        double vertical_force_limit = 3.0;
        double agreement_threshold = 1.6;
        DdpgHyper agent;
    } tracking;

    static ExperimentConfig from_json(const nlohmann::json& j);
    static ExperimentConfig load(const std::string& path);
    nlohmann::json to_json() const;

    // Fully validated derived configs for the studies.
    FailureStudyConfig failure_study_config() const;
    TrackingStudyConfig tracking_study_config() const;
    ClusterTrainingConfig cluster_training_config() const;
    ParameterSchedule<PendulumParams> pendulum_schedule() const;
};

}  // namespace ferl
