#include "ferl/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ferl/common.hpp"

namespace ferl {

std::string fusion_mode_name(FusionMode m) {
    switch (m) {
        case FusionMode::ferl: return "ferl";
        case FusionMode::ferl_hull: return "ferl_hull";
        case FusionMode::nearest: return "nearest";
    }
    return "ferl";
}

FusionMode fusion_mode_from_name(const std::string& name) {
    if (name == "ferl") return FusionMode::ferl;
    if (name == "ferl_hull") return FusionMode::ferl_hull;
    if (name == "nearest") return FusionMode::nearest;
    throw InvalidInput("unknown fusion mode: " + name);
}

EnsembleController::EnsembleController(ClusterModel model, std::vector<Policy> policies,
                                       double agreement_threshold, FusionMode mode)
    : model_(std::move(model)),
      policies_(std::move(policies)),
      agreement_threshold_(agreement_threshold),
      mode_(mode) {
    require(static_cast<int>(policies_.size()) == model_.n_clusters(),
            "ensemble: policy count must equal cluster count");
    require(agreement_threshold_ > 0.0, "ensemble: agreement threshold must be > 0");
    const auto& first = policies_.front();
    for (const auto& p : policies_) {
        require(p.obs_spec == first.obs_spec, "ensemble: policies disagree on obs spec");
        require(p.action_low.size() == first.action_low.size() &&
                    (p.action_low - first.action_low).cwiseAbs().maxCoeff() == 0.0 &&
                    (p.action_high - first.action_high).cwiseAbs().maxCoeff() == 0.0,
                "ensemble: policies disagree on action bounds");
    }
}

int nearest_policy(const ClusterModel& model, const Eigen::VectorXd& x) {
    const Eigen::VectorXd d2 = model.sq_distances(x);
    int best = 0;
    for (int j = 1; j < model.n_clusters(); ++j)
        if (d2[j] < d2[best]) best = j;
    return best;
}

namespace {

// 2-D cross product of (b - a) x (c - a)
double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Andrew monotone chain; returns hull vertices in counter-clockwise order.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
    });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const auto& a, const auto& b) { return a == b; }),
              pts.end());
    const std::size_t n = pts.size();
    if (n < 3) return pts;
    std::vector<Eigen::Vector2d> hull(2 * n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    const std::size_t lower = k + 1;
    for (std::size_t i = n - 1; i-- > 0;) {
        while (k >= lower && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

bool point_on_segment(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                      const Eigen::Vector2d& p, double eps) {
    if (std::abs(cross2(a, b, p)) > eps) return false;
    return p.x() >= std::min(a.x(), b.x()) - eps && p.x() <= std::max(a.x(), b.x()) + eps &&
           p.y() >= std::min(a.y(), b.y()) - eps && p.y() <= std::max(a.y(), b.y()) + eps;
}

// Inclusive containment test for a convex polygon (degenerate hulls allowed).
bool hull_contains(const std::vector<Eigen::Vector2d>& hull, const Eigen::Vector2d& p,
                   double eps = 1e-12) {
    if (hull.empty()) return false;
    if (hull.size() == 1) return (hull[0] - p).norm() <= eps;
    if (hull.size() == 2) return point_on_segment(hull[0], hull[1], p, eps);
    for (std::size_t i = 0; i < hull.size(); ++i) {
        const auto& a = hull[i];
        const auto& b = hull[(i + 1) % hull.size()];
        if (cross2(a, b, p) < -eps) return false;
    }
    return true;
}

}  // namespace

HullSelection select_hull(const ClusterModel& model, const Eigen::VectorXd& x) {
    require(model.dim() == 2, "select_hull: hull restriction is defined for 2-D parameter spaces");
    const int n = model.n_clusters();
    const Eigen::VectorXd d2 = model.sq_distances(x);
    const Eigen::VectorXd mu_full = membership_from_sq_distances(d2, model.fuzziness());

    const auto restricted = [&](const std::vector<int>& idx) {
        HullSelection sel;
        sel.indices = idx;
        sel.memberships.resize(static_cast<Eigen::Index>(idx.size()));
        double total = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) total += mu_full[idx[k]];
        for (std::size_t k = 0; k < idx.size(); ++k)
            sel.memberships[static_cast<Eigen::Index>(k)] =
                total > 0.0 ? mu_full[idx[k]] / total : 1.0 / static_cast<double>(idx.size());
        return sel;
    };

    // degenerate: query sits on a center
    for (int j = 0; j < n; ++j)
        if (d2[j] == 0.0) return restricted({j});

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return d2[a] < d2[b]; });

    const Eigen::VectorXd xn_v = model.normalize(x);
    const Eigen::Vector2d xn(xn_v[0], xn_v[1]);
    std::vector<Eigen::Vector2d> pts;
    for (int k = 0; k < n; ++k) {
        const Eigen::VectorXd cn = model.normalize(model.centers().row(order[k]).transpose());
        pts.emplace_back(cn[0], cn[1]);
        if (k + 1 < 3) continue;
        if (hull_contains(convex_hull(pts), xn))
            return restricted(std::vector<int>(order.begin(), order.begin() + k + 1));
    }

    // outside the hull of all centers: fall back to the full set
    std::vector<int> all(n);
    std::iota(all.begin(), all.end(), 0);
    return restricted(all);
}

Eigen::VectorXd fuse(const EnsembleController& ctrl, const Eigen::VectorXd& plant_params,
                     const Eigen::VectorXd& obs, FuseDiagnostics* diag) {
    const auto& model = ctrl.model();
    const auto& policies = ctrl.policies();
    const int n = model.n_clusters();

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    switch (ctrl.mode()) {
        case FusionMode::ferl:
            mu = model.membership(plant_params);
            break;
        case FusionMode::ferl_hull: {
            const HullSelection sel = select_hull(model, plant_params);
            for (std::size_t k = 0; k < sel.indices.size(); ++k)
                mu[sel.indices[k]] = sel.memberships[static_cast<Eigen::Index>(k)];
            break;
        }
        case FusionMode::nearest:
            mu[nearest_policy(model, plant_params)] = 1.0;
            break;
    }

    // candidate actions (only where membership is nonzero)
    std::vector<Eigen::VectorXd> actions(n);
    int anchor = -1;
    for (int j = 0; j < n; ++j) {
        if (mu[j] <= 0.0) continue;
        actions[j] = policies[j].act(obs);
        if (anchor < 0 || mu[j] > mu[anchor]) anchor = j;
    }

    // agreement filter: keep policies within the threshold of the anchor
    std::vector<unsigned char> kept(n, 0);
    double kept_mass = 0.0;
    for (int j = 0; j < n; ++j) {
        if (mu[j] <= 0.0) continue;
        if (j == anchor || (actions[j] - actions[anchor]).cwiseAbs().maxCoeff() <
                               ctrl.agreement_threshold()) {
            kept[j] = 1;
            kept_mass += mu[j];
        }
    }

    Eigen::VectorXd fused = Eigen::VectorXd::Zero(policies.front().action_dim());
    Eigen::VectorXd mu_out = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
        if (!kept[j]) continue;
        mu_out[j] = mu[j] / kept_mass;
        fused += mu_out[j] * actions[j];
    }
    fused = fused.cwiseMin(ctrl.action_high()).cwiseMax(ctrl.action_low());

    if (diag) {
        diag->memberships = mu_out;
        diag->kept = kept;
        const Eigen::VectorXd xn = model.normalize(plant_params);
        diag->extrapolated = (xn.array() < 0.0).any() || (xn.array() > 1.0).any();
    }
    return fused;
}

TrainResult dr_train(const std::pair<double, double>& length_range,
                     const std::pair<double, double>& mass_range,
                     const PendulumEnv::Options& env_options, const DdpgHyper& hyper,
                     std::uint64_t seed, const StopCallback& stop, int eval_every) {
    require(length_range.first <= length_range.second && length_range.first > 0.0,
            "dr_train: bad length range");
    require(mass_range.first <= mass_range.second && mass_range.first > 0.0,
            "dr_train: bad mass range");
    PendulumEnv::Options opt = env_options;
    opt.length_range = length_range;
    opt.mass_range = mass_range;
    PendulumEnv env(opt);
    return ddpg_train(env, hyper, seed, stop, eval_every);
}

}  // namespace ferl
