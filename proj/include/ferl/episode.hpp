#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ferl/ensemble.hpp"
#include "ferl/plants.hpp"
#include "ferl/policy.hpp"
#include "ferl/sysid.hpp"

namespace ferl {

// Column-store, uniform-dt record of one closed-loop run. Column sets differ
// by plant family and controller; schemas are documented in the README.
class EpisodeLog {
public:
    EpisodeLog(double dt, std::vector<std::string> columns);

    double dt() const { return dt_; }
    std::size_t rows() const { return n_rows_; }
    const std::vector<std::string>& columns() const { return columns_; }
    int column_index(const std::string& name) const;  // -1 when absent
    const std::vector<double>& column(const std::string& name) const;
    double value(const std::string& name, std::size_t row) const;

    void append_row(const std::vector<double>& values);
    void write_csv(std::ostream& os) const;
    void write_csv(const std::string& path) const;

private:
    double dt_;
    std::vector<std::string> columns_;
    std::vector<std::vector<double>> data_;  // per column
    std::size_t n_rows_ = 0;
};

// ---------------------------------------------------------------------------
// Pendulum episodes
// ---------------------------------------------------------------------------

struct PendulumController {
    enum class Kind { zero, scripted, single_policy, ensemble };
    Kind kind = Kind::zero;
    std::function<double(double t, const PendulumState&)> scripted;
    const Policy* policy = nullptr;
    const EnsembleController* ens = nullptr;

    static PendulumController zero_torque() { return {}; }
    static PendulumController from_script(std::function<double(double, const PendulumState&)> f);
    static PendulumController from_policy(const Policy* p);
    static PendulumController from_ensemble(const EnsembleController* e);
};

struct IdentificationOptions {
    double forgetting = 0.998;
    double initial_covariance = 1e6;
    PendulumParams initial_guess;
    int gate_window = 10;          // updates between gate comparisons
    double gate_rel_change = 0.05; // push recovered params when below this
    // Measurement rate of the estimator; must divide agent_dt. The forgetting
    // horizon is 1/(1-lambda) samples, so this rate sets how fast parameter
    // steps are re-acquired.
    double sample_dt = 0.001;
};

struct PendulumEpisodeOptions {
    ParameterSchedule<PendulumParams> schedule;
    double duration = 20.0;
    double agent_dt = 0.05;
    double inner_dt = 1e-3;
    double torque_limit = 50.0;  // plant-side evaluation clamp
    double init_theta = kPi;
    double init_omega = 0.0;
    double init_jitter = 0.0;  // uniform jitter on init_theta, seeded
    std::optional<IdentificationOptions> identification;
    std::uint64_t seed = 0;
};

// Closed loop at agent rate: (identify ->) membership -> fuse -> ZOH torque ->
// RK4 substeps -> log. Deterministic given options.
EpisodeLog run_pendulum_episode(const PendulumController& controller,
                                const PendulumEpisodeOptions& options);

// ---------------------------------------------------------------------------
// Quadrotor episodes
// ---------------------------------------------------------------------------

struct QuadPhase {
    double t_start = 0.0;
    const Policy* policy = nullptr;            // exactly one of policy/ensemble set
    const EnsembleController* ensemble = nullptr;
    std::string name;
};

struct QuadEpisodeOptions {
    QuadSlungParams params;
    ReferenceTrajectory reference;
    double duration = 80.0;
    double agent_dt = 0.05;
    double inner_dt = 1e-3;
    std::vector<QuadPhase> phases;       // sorted by t_start, first at 0
    Eigen::VectorXd membership_query;    // assumed plant params (cable length)
    std::optional<WindProfile> wind;
    std::uint64_t seed = 0;
};

EpisodeLog run_quad_episode(const QuadEpisodeOptions& options);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct SuccessCriteria {
    double angle_band = 0.2;   // rad
    double hold_window = 5.0;  // s at episode end
};

// True iff |wrap(theta)| <= angle_band on every sample of the final window.
bool swingup_success(const EpisodeLog& log, const SuccessCriteria& criteria);

struct Rmse {
    double x = 0.0, y = 0.0, z = 0.0;
    double total3d = 0.0;
};

// Per-axis and 3-D RMS of (position - reference) over samples with
// t in [window.first, window.second].
Rmse tracking_rmse(const EpisodeLog& log, std::pair<double, double> window);

}  // namespace ferl
