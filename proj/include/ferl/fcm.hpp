#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace ferl {

// Fitted fuzzy c-means model over a plant-parameter space. Centers are stored
// in raw parameter units; distances are evaluated after per-dimension
// normalization to the sample bounding box stored in the model. Immutable
// after construction; membership queries are pure.
class ClusterModel {
public:
    ClusterModel(Eigen::MatrixXd centers, double fuzziness,
                 Eigen::VectorXd norm_lo, Eigen::VectorXd norm_hi);

    int n_clusters() const { return static_cast<int>(centers_.rows()); }
    int dim() const { return static_cast<int>(centers_.cols()); }
    double fuzziness() const { return fuzziness_; }
    const Eigen::MatrixXd& centers() const { return centers_; }
    const Eigen::VectorXd& norm_lo() const { return norm_lo_; }
    const Eigen::VectorXd& norm_hi() const { return norm_hi_; }

    Eigen::VectorXd normalize(const Eigen::VectorXd& x) const;

    // Membership vector of a query point: mu_j in [0,1], sum = 1. A query that
    // coincides exactly with k centers splits membership equally among them.
    Eigen::VectorXd membership(const Eigen::VectorXd& x) const;

    // Squared normalized distances to all centers.
    Eigen::VectorXd sq_distances(const Eigen::VectorXd& x) const;

private:
    Eigen::MatrixXd centers_;       // n_clusters x dim, raw units
    Eigen::MatrixXd centers_norm_;  // normalized copy used for queries
    double fuzziness_;
    Eigen::VectorXd norm_lo_, norm_hi_;
};

struct FcmResult {
    ClusterModel model;
    Eigen::MatrixXd memberships;          // M x N, rows sum to 1
    double objective = 0.0;               // final J_q (normalized space)
    std::vector<double> objective_trace;  // J_q after each iteration
    int iterations = 0;
    bool converged = false;
};

// Fit fuzzy c-means: k-means++ seeding from `seed`, then alternating
// membership / center updates until the max membership change drops below
// tol or max_iter is hit (converged flag reports which).
FcmResult fit_clusters(const Eigen::MatrixXd& samples, int n_clusters, double fuzziness = 2.0,
                       double tol = 1e-6, int max_iter = 500, std::uint64_t seed = 0);

// Membership update formula applied with fixed centers and distances given as
// squared values; shared by fit and query paths.
Eigen::VectorXd membership_from_sq_distances(const Eigen::VectorXd& sq_dist, double fuzziness);

}  // namespace ferl
