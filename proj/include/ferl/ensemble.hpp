#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "ferl/ddpg.hpp"
#include "ferl/fcm.hpp"
#include "ferl/policy.hpp"

namespace ferl {

enum class FusionMode { ferl, ferl_hull, nearest };

std::string fusion_mode_name(FusionMode m);
FusionMode fusion_mode_from_name(const std::string& name);

// One policy per cluster center, fused by fuzzy memberships with a pairwise
// agreement filter anchored at the highest-membership policy. Immutable after
// construction; fuse() is pure.
class EnsembleController {
public:
    EnsembleController(ClusterModel model, std::vector<Policy> policies,
                       double agreement_threshold, FusionMode mode);

    const ClusterModel& model() const { return model_; }
    const std::vector<Policy>& policies() const { return policies_; }
    double agreement_threshold() const { return agreement_threshold_; }
    FusionMode mode() const { return mode_; }
    const Eigen::VectorXd& action_low() const { return policies_.front().action_low; }
    const Eigen::VectorXd& action_high() const { return policies_.front().action_high; }

private:
    ClusterModel model_;
    std::vector<Policy> policies_;
    double agreement_threshold_;
    FusionMode mode_;
};

struct FuseDiagnostics {
    Eigen::VectorXd memberships;      // post-mode, post-filter, renormalized (zeros for dropped)
    std::vector<unsigned char> kept;  // 1 where the policy entered the fusion
    bool extrapolated = false;        // query outside the model's normalization box
};

// Fused action for the given plant-parameter point and observation.
Eigen::VectorXd fuse(const EnsembleController& ctrl, const Eigen::VectorXd& plant_params,
                     const Eigen::VectorXd& obs, FuseDiagnostics* diag = nullptr);

struct HullSelection {
    std::vector<int> indices;
    Eigen::VectorXd memberships;  // renormalized over indices, same order
};

// Smallest set of nearest centers whose convex hull (2-D) contains x, grown
// k = 3, 4, ...; falls back to all centers when x lies outside every hull.
// A query equal to a center returns just that center.
HullSelection select_hull(const ClusterModel& model, const Eigen::VectorXd& x);

// Index of the nearest center in normalized distance; ties -> lowest index.
int nearest_policy(const ClusterModel& model, const Eigen::VectorXd& x);

// Domain-randomization baseline: one policy trained while (length, mass) are
// resampled uniformly at each episode start.
TrainResult dr_train(const std::pair<double, double>& length_range,
                     const std::pair<double, double>& mass_range,
                     const PendulumEnv::Options& env_options, const DdpgHyper& hyper,
                     std::uint64_t seed, const StopCallback& stop = nullptr, int eval_every = 0);

}  // namespace ferl
