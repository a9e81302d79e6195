#include "ferl/fcm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "ferl/common.hpp"
#include "ferl/rng.hpp"

namespace ferl {

namespace {

Eigen::VectorXd box_scale(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    Eigen::VectorXd s = hi - lo;
    for (Eigen::Index d = 0; d < s.size(); ++d)
        if (s[d] <= 0.0) s[d] = 1.0;  // flat dimension contributes zero distance
    return s;
}

}  // namespace

ClusterModel::ClusterModel(Eigen::MatrixXd centers, double fuzziness, Eigen::VectorXd norm_lo,
                           Eigen::VectorXd norm_hi)
    : centers_(std::move(centers)),
      fuzziness_(fuzziness),
      norm_lo_(std::move(norm_lo)),
      norm_hi_(std::move(norm_hi)) {
    require(fuzziness_ > 1.0, "cluster model: fuzziness q must be > 1");
    require(centers_.rows() >= 1 && centers_.cols() >= 1, "cluster model: need >= 1 center of dim >= 1");
    require(norm_lo_.size() == centers_.cols() && norm_hi_.size() == centers_.cols(),
            "cluster model: normalization bounds must match center dimension");
    const Eigen::VectorXd scale = box_scale(norm_lo_, norm_hi_);
    centers_norm_ = centers_;
    for (Eigen::Index i = 0; i < centers_.rows(); ++i)
        centers_norm_.row(i) = ((centers_.row(i).transpose() - norm_lo_).array() / scale.array()).transpose();
    for (Eigen::Index i = 0; i < centers_.rows(); ++i)
        for (Eigen::Index j = i + 1; j < centers_.rows(); ++j)
            require((centers_.row(i) - centers_.row(j)).norm() > 0.0,
                    "cluster model: duplicate centers");
}

Eigen::VectorXd ClusterModel::normalize(const Eigen::VectorXd& x) const {
    require(x.size() == dim(), "cluster model: query dimension mismatch");
    const Eigen::VectorXd scale = box_scale(norm_lo_, norm_hi_);
    return ((x - norm_lo_).array() / scale.array()).matrix();
}

Eigen::VectorXd ClusterModel::sq_distances(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd xn = normalize(x);
    Eigen::VectorXd d2(n_clusters());
    for (int j = 0; j < n_clusters(); ++j)
        d2[j] = (centers_norm_.row(j).transpose() - xn).squaredNorm();
    return d2;
}

Eigen::VectorXd membership_from_sq_distances(const Eigen::VectorXd& sq_dist, double fuzziness) {
    const int n = static_cast<int>(sq_dist.size());
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);

    // exact coincidence with one or more centers
    int zero_count = 0;
    for (int j = 0; j < n; ++j)
        if (sq_dist[j] == 0.0) ++zero_count;
    if (zero_count > 0) {
        for (int j = 0; j < n; ++j)
            if (sq_dist[j] == 0.0) mu[j] = 1.0 / zero_count;
        return mu;
    }

    // mu_j proportional to d2_j^(-1/(q-1)); rescale by the min distance so the
    // weights stay in (0, 1] and cannot overflow near a center.
    const double p = 1.0 / (fuzziness - 1.0);
    const double d2min = sq_dist.minCoeff();
    double total = 0.0;
    for (int j = 0; j < n; ++j) {
        mu[j] = std::pow(d2min / sq_dist[j], p);
        total += mu[j];
    }
    mu /= total;
    return mu;
}

Eigen::VectorXd ClusterModel::membership(const Eigen::VectorXd& x) const {
    return membership_from_sq_distances(sq_distances(x), fuzziness_);
}

namespace {

// k-means++ style seeding over normalized samples.
Eigen::MatrixXd seed_centers(const Eigen::MatrixXd& xn, int n_clusters, Rng& rng) {
    const Eigen::Index m = xn.rows();
    Eigen::MatrixXd centers(n_clusters, xn.cols());
    centers.row(0) = xn.row(rng.uniform_int(static_cast<int>(m)));
    Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(m, std::numeric_limits<double>::infinity());
    for (int k = 1; k < n_clusters; ++k) {
        for (Eigen::Index s = 0; s < m; ++s) {
            const double d2 = (xn.row(s) - centers.row(k - 1)).squaredNorm();
            min_d2[s] = std::min(min_d2[s], d2);
        }
        const double total = min_d2.sum();
        double pick = rng.uniform() * total;
        Eigen::Index chosen = m - 1;
        for (Eigen::Index s = 0; s < m; ++s) {
            pick -= min_d2[s];
            if (pick <= 0.0) {
                chosen = s;
                break;
            }
        }
        centers.row(k) = xn.row(chosen);
    }
    return centers;
}

double objective(const Eigen::MatrixXd& xn, const Eigen::MatrixXd& u, const Eigen::MatrixXd& centers,
                 double q) {
    double j_q = 0.0;
    for (Eigen::Index s = 0; s < xn.rows(); ++s)
        for (Eigen::Index j = 0; j < centers.rows(); ++j)
            j_q += std::pow(u(s, j), q) * (xn.row(s) - centers.row(j)).squaredNorm();
    return j_q;
}

}  // namespace

FcmResult fit_clusters(const Eigen::MatrixXd& samples, int n_clusters, double fuzziness, double tol,
                       int max_iter, std::uint64_t seed) {
    require(fuzziness > 1.0, "fit_clusters: fuzziness q must be > 1");
    require(tol > 0.0, "fit_clusters: tol must be > 0");
    require(max_iter >= 1, "fit_clusters: max_iter must be >= 1");
    require(n_clusters >= 1, "fit_clusters: need >= 1 cluster");
    require(samples.rows() >= 1 && samples.cols() >= 1, "fit_clusters: empty sample set");

    const Eigen::Index m = samples.rows();
    const Eigen::Index d = samples.cols();

    std::set<std::vector<double>> distinct;
    for (Eigen::Index s = 0; s < m; ++s) {
        std::vector<double> row(samples.row(s).begin(), samples.row(s).end());
        distinct.insert(std::move(row));
        if (static_cast<int>(distinct.size()) >= n_clusters) break;
    }
    require(static_cast<int>(distinct.size()) >= n_clusters,
            "fit_clusters: fewer distinct samples than clusters");

    const Eigen::VectorXd lo = samples.colwise().minCoeff();
    const Eigen::VectorXd hi = samples.colwise().maxCoeff();
    const Eigen::VectorXd scale = box_scale(lo, hi);
    Eigen::MatrixXd xn(m, d);
    for (Eigen::Index s = 0; s < m; ++s)
        xn.row(s) = ((samples.row(s).transpose() - lo).array() / scale.array()).transpose();

    Rng rng(seed);
    Eigen::MatrixXd centers = seed_centers(xn, n_clusters, rng);
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(m, n_clusters);

    std::vector<double> trace;
    bool converged = false;
    int iter = 0;
    for (iter = 1; iter <= max_iter; ++iter) {
        // membership update with fixed centers
        Eigen::MatrixXd u_new(m, n_clusters);
        for (Eigen::Index s = 0; s < m; ++s) {
            Eigen::VectorXd d2(n_clusters);
            for (int j = 0; j < n_clusters; ++j)
                d2[j] = (xn.row(s) - centers.row(j)).squaredNorm();
            u_new.row(s) = membership_from_sq_distances(d2, fuzziness).transpose();
        }
        const double max_change = (u_new - u).cwiseAbs().maxCoeff();
        u = std::move(u_new);

        // center update with fixed memberships
        for (int j = 0; j < n_clusters; ++j) {
            Eigen::VectorXd num = Eigen::VectorXd::Zero(d);
            double den = 0.0;
            for (Eigen::Index s = 0; s < m; ++s) {
                const double w = std::pow(u(s, j), fuzziness);
                num += w * xn.row(s).transpose();
                den += w;
            }
            if (den > 0.0) centers.row(j) = (num / den).transpose();
        }

        trace.push_back(objective(xn, u, centers, fuzziness));
        if (iter > 1 && max_change < tol) {
            converged = true;
            break;
        }
    }
    if (iter > max_iter) iter = max_iter;

    Eigen::MatrixXd centers_raw(n_clusters, d);
    for (int j = 0; j < n_clusters; ++j)
        centers_raw.row(j) = (lo.array() + centers.row(j).transpose().array() * scale.array()).transpose();

    return FcmResult{ClusterModel(std::move(centers_raw), fuzziness, lo, hi), std::move(u),
                     trace.empty() ? 0.0 : trace.back(), std::move(trace), iter, converged};
}

}  // namespace ferl
