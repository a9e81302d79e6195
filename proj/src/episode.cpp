#include "ferl/episode.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <ostream>

#include "ferl/common.hpp"
#include "ferl/rng.hpp"

namespace ferl {

EpisodeLog::EpisodeLog(double dt, std::vector<std::string> columns)
    : dt_(dt), columns_(std::move(columns)), data_(columns_.size()) {
    require(dt_ > 0.0, "episode log: dt must be > 0");
    require(!columns_.empty(), "episode log: no columns");
}

int EpisodeLog::column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i)
        if (columns_[i] == name) return static_cast<int>(i);
    return -1;
}

const std::vector<double>& EpisodeLog::column(const std::string& name) const {
    const int i = column_index(name);
    require(i >= 0, "episode log: no column named " + name);
    return data_[static_cast<std::size_t>(i)];
}

double EpisodeLog::value(const std::string& name, std::size_t row) const {
    const auto& col = column(name);
    require(row < col.size(), "episode log: row out of range");
    return col[row];
}

void EpisodeLog::append_row(const std::vector<double>& values) {
    require(values.size() == columns_.size(), "episode log: row width mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) data_[i].push_back(values[i]);
    ++n_rows_;
}

namespace {

// shortest round-trip decimal representation, byte-stable across runs
std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

void EpisodeLog::write_csv(std::ostream& os) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (i) os << ',';
        os << columns_[i];
    }
    os << '\n';
    for (std::size_t r = 0; r < n_rows_; ++r) {
        for (std::size_t c = 0; c < columns_.size(); ++c) {
            if (c) os << ',';
            os << format_double(data_[c][r]);
        }
        os << '\n';
    }
}

void EpisodeLog::write_csv(const std::string& path) const {
    std::ofstream out(path);
    require(out.good(), "episode log: cannot open " + path);
    write_csv(out);
}

PendulumController PendulumController::from_script(
    std::function<double(double, const PendulumState&)> f) {
    PendulumController c;
    c.kind = Kind::scripted;
    c.scripted = std::move(f);
    return c;
}

PendulumController PendulumController::from_policy(const Policy* p) {
    PendulumController c;
    c.kind = Kind::single_policy;
    c.policy = p;
    return c;
}

PendulumController PendulumController::from_ensemble(const EnsembleController* e) {
    PendulumController c;
    c.kind = Kind::ensemble;
    c.ens = e;
    return c;
}

EpisodeLog run_pendulum_episode(const PendulumController& controller,
                                const PendulumEpisodeOptions& options) {
    const double dt = options.agent_dt;
    const double ratio = options.duration / dt;
    const int n_steps = static_cast<int>(std::lround(ratio));
    require(n_steps >= 1 && std::abs(ratio - n_steps) < 1e-9,
            "episode: duration must be a multiple of agent_dt");

    const int n_policies =
        controller.kind == PendulumController::Kind::ensemble
            ? static_cast<int>(controller.ens->policies().size())
            : 0;

    std::vector<std::string> cols = {"t",          "theta",    "omega",       "torque",
                                     "reference",  "wind",     "true_length", "true_mass",
                                     "est_length", "est_mass", "psi1",        "psi2"};
    for (int j = 0; j < n_policies; ++j) cols.push_back("mu_" + std::to_string(j));
    for (int j = 0; j < n_policies; ++j) cols.push_back("kept_" + std::to_string(j));
    EpisodeLog log(dt, cols);

    double theta0 = options.init_theta;
    if (options.init_jitter > 0.0) {
        Rng rng(derive_seed(options.seed, 0xEB));
        theta0 += rng.uniform(-options.init_jitter, options.init_jitter);
    }
    PendulumState state{wrap_angle(theta0), options.init_omega};

    // identification state
    std::optional<RlsEstimator> rls;
    std::deque<Eigen::Vector2d> psi_history;
    PendulumParams est_params = options.schedule.at(0.0);
    if (options.identification) {
        const auto& id = *options.identification;
        est_params = id.initial_guess;
        rls.emplace(pendulum_coefficients(id.initial_guess), id.initial_covariance,
                    id.forgetting);
    }

    const auto controller_action = [&](double t, const PendulumState& s,
                                       const PendulumParams& membership_params,
                                       Eigen::VectorXd& mu, std::vector<unsigned char>& kept) {
        Eigen::VectorXd obs(3);
        obs << std::cos(s.theta), std::sin(s.theta), s.omega;
        switch (controller.kind) {
            case PendulumController::Kind::zero:
                return 0.0;
            case PendulumController::Kind::scripted:
                return controller.scripted(t, s);
            case PendulumController::Kind::single_policy:
                return controller.policy->act(obs)[0];
            case PendulumController::Kind::ensemble: {
                FuseDiagnostics diag;
                Eigen::Vector2d query(membership_params.length, membership_params.mass);
                const double u = fuse(*controller.ens, query, obs, &diag)[0];
                mu = diag.memberships;
                kept = diag.kept;
                return u;
            }
        }
        return 0.0;
    };

    const auto log_row = [&](double t, const PendulumState& s, double u,
                             const PendulumParams& truth, const PendulumParams& est,
                             const Eigen::VectorXd& mu, const std::vector<unsigned char>& kept) {
        Eigen::Vector2d psi = Eigen::Vector2d::Zero();
        if (rls) psi = rls->estimate();
        std::vector<double> row = {t,   s.theta,      s.omega,    u,          0.0,      0.0,
                                   truth.length, truth.mass, est.length, est.mass, psi[0], psi[1]};
        for (int j = 0; j < n_policies; ++j)
            row.push_back(j < mu.size() ? mu[j] : 0.0);
        for (int j = 0; j < n_policies; ++j)
            row.push_back(j < static_cast<int>(kept.size()) ? static_cast<double>(kept[j]) : 0.0);
        log.append_row(row);
    };

    double last_u = 0.0;
    Eigen::VectorXd last_mu = Eigen::VectorXd::Zero(n_policies);
    std::vector<unsigned char> last_kept(n_policies, 0);

    for (int k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        const PendulumParams& truth = options.schedule.at(t);

        Eigen::VectorXd mu = last_mu;
        std::vector<unsigned char> kept = last_kept;
        double u = controller_action(t, state, options.identification ? est_params : truth, mu, kept);
        u = std::clamp(u, -options.torque_limit, options.torque_limit);

        log_row(t, state, u, truth, options.identification ? est_params : truth, mu, kept);

        PendulumState next_state;
        if (!rls) {
            next_state = pendulum_step(state, u, truth, dt, options.inner_dt, t).state;
        } else {
            // integrate one identification window at a time so the estimator
            // can run faster than the agent rate
            const auto& id = *options.identification;
            const double sdt = id.sample_dt;
            const double ratio = dt / sdt;
            const int n_windows = static_cast<int>(std::lround(ratio));
            require(n_windows >= 1 && std::abs(ratio - n_windows) < 1e-9,
                    "identification: sample_dt must divide agent_dt");
            PendulumState s = state;
            for (int w = 0; w < n_windows; ++w) {
                const PendulumStepResult sub =
                    pendulum_step(s, u, truth, sdt, options.inner_dt, t + w * sdt);
                rls->update(pendulum_regressors(u, sub.theta_mid, s.omega, sub.state.omega, sdt));
                s = sub.state;

                const Eigen::Vector2d psi = rls->estimate();
                psi_history.push_back(psi);
                if (static_cast<int>(psi_history.size()) > id.gate_window) {
                    const Eigen::Vector2d old = psi_history.front();
                    psi_history.pop_front();
                    double rel = 0.0;
                    for (int i = 0; i < 2; ++i)
                        rel = std::max(rel, std::abs(psi[i] - old[i]) /
                                                std::max(std::abs(old[i]), 1e-12));
                    if (rel < id.gate_rel_change) {
                        try {
                            est_params = recover_params(psi, truth.gravity);
                        } catch (const NotIdentifiable&) {
                            // keep previous estimate
                        }
                    }
                }
            }
            next_state = s;
        }

        state = next_state;
        last_u = u;
        last_mu = mu;
        last_kept = kept;
    }

    const double t_end = n_steps * dt;
    const PendulumParams& truth_end = options.schedule.at(t_end);
    log_row(t_end, state, last_u, truth_end, options.identification ? est_params : truth_end,
            last_mu, last_kept);
    return log;
}

EpisodeLog run_quad_episode(const QuadEpisodeOptions& options) {
    options.params.validate();
    require(!options.phases.empty(), "quad episode: needs at least one phase");
    require(options.phases.front().t_start == 0.0, "quad episode: first phase must start at t=0");
    for (std::size_t i = 0; i < options.phases.size(); ++i) {
        require((options.phases[i].policy != nullptr) != (options.phases[i].ensemble != nullptr),
                "quad episode: each phase needs exactly one of policy/ensemble");
        if (i > 0)
            require(options.phases[i].t_start > options.phases[i - 1].t_start,
                    "quad episode: phase starts must increase");
    }

    const double dt = options.agent_dt;
    const double ratio = options.duration / dt;
    const int n_steps = static_cast<int>(std::lround(ratio));
    require(n_steps >= 1 && std::abs(ratio - n_steps) < 1e-9,
            "quad episode: duration must be a multiple of agent_dt");

    int n_policies = 0;
    for (const auto& ph : options.phases)
        if (ph.ensemble)
            n_policies = std::max(n_policies, static_cast<int>(ph.ensemble->policies().size()));

    std::vector<std::string> cols = {"t",     "x",     "y",      "z",      "vx",    "vy",
                                     "vz",    "alpha", "beta",   "alpha_dot", "beta_dot",
                                     "fx",    "fy",    "fz",     "ref_x",  "ref_y", "ref_z",
                                     "wind_x", "wind_y", "wind_z", "phase"};
    for (int j = 0; j < n_policies; ++j) cols.push_back("mu_" + std::to_string(j));
    for (int j = 0; j < n_policies; ++j) cols.push_back("kept_" + std::to_string(j));
    EpisodeLog log(dt, cols);

    QuadSlungState state;
    state.position = options.reference.position(0.0);
    state.velocity = options.reference.velocity(0.0);

    const auto phase_at = [&](double t) {
        std::size_t k = 0;
        while (k + 1 < options.phases.size() && options.phases[k + 1].t_start <= t) ++k;
        return std::make_pair(static_cast<int>(k), &options.phases[k]);
    };

    const auto log_row = [&](double t, const QuadSlungState& s, const Eigen::Vector3d& offsets,
                             const Eigen::Vector3d& wind, int phase_idx, const Eigen::VectorXd& mu,
                             const std::vector<unsigned char>& kept) {
        const Eigen::Vector3d ref = options.reference.position(t);
        std::vector<double> row = {t,
                                   s.position[0], s.position[1], s.position[2],
                                   s.velocity[0], s.velocity[1], s.velocity[2],
                                   s.alpha, s.beta, s.alpha_dot, s.beta_dot,
                                   offsets[0], offsets[1], offsets[2],
                                   ref[0], ref[1], ref[2],
                                   wind[0], wind[1], wind[2],
                                   static_cast<double>(phase_idx)};
        for (int j = 0; j < n_policies; ++j) row.push_back(j < mu.size() ? mu[j] : 0.0);
        for (int j = 0; j < n_policies; ++j)
            row.push_back(j < static_cast<int>(kept.size()) ? static_cast<double>(kept[j]) : 0.0);
        log.append_row(row);
    };

    Eigen::Vector3d last_offsets = Eigen::Vector3d::Zero();
    Eigen::Vector3d last_wind = Eigen::Vector3d::Zero();
    Eigen::VectorXd last_mu = Eigen::VectorXd::Zero(n_policies);
    std::vector<unsigned char> last_kept(n_policies, 0);
    int last_phase = 0;

    for (int k = 0; k < n_steps; ++k) {
        const double t = k * dt;
        const auto [phase_idx, phase] = phase_at(t);

        Eigen::VectorXd obs(10);
        obs.segment<3>(0) = state.position - options.reference.position(t);
        obs.segment<3>(3) = state.velocity;
        obs[6] = state.alpha;
        obs[7] = state.beta;
        obs[8] = state.alpha_dot;
        obs[9] = state.beta_dot;

        Eigen::VectorXd offsets_v;
        Eigen::VectorXd mu = Eigen::VectorXd::Zero(n_policies);
        std::vector<unsigned char> kept(n_policies, 0);
        if (phase->policy) {
            offsets_v = phase->policy->act(obs);
        } else {
            FuseDiagnostics diag;
            offsets_v = fuse(*phase->ensemble, options.membership_query, obs, &diag);
            mu.head(diag.memberships.size()) = diag.memberships;
            std::copy(diag.kept.begin(), diag.kept.end(), kept.begin());
        }
        const Eigen::Vector3d offsets(offsets_v[0], offsets_v[1], offsets_v[2]);

        Eigen::Vector3d wind = Eigen::Vector3d::Zero();
        if (options.wind) wind = sample_wind(*options.wind, t);

        log_row(t, state, offsets, wind, phase_idx, mu, kept);

        const Eigen::Vector3d forces =
            Eigen::Vector3d(offsets[0], offsets[1], options.params.hover_thrust() + offsets[2]) +
            wind;
        state = quad_step(state, forces, options.params, dt, options.inner_dt, t);

        last_offsets = offsets;
        last_wind = wind;
        last_mu = mu;
        last_kept = kept;
        last_phase = phase_idx;
    }

    log_row(n_steps * dt, state, last_offsets, last_wind, last_phase, last_mu, last_kept);
    return log;
}

bool swingup_success(const EpisodeLog& log, const SuccessCriteria& criteria) {
    require(criteria.angle_band > 0.0, "success criteria: angle band must be > 0");
    const auto& t = log.column("t");
    const auto& theta = log.column("theta");
    require(!t.empty(), "success criteria: empty log");
    const double t_end = t.back();
    require(t_end - t.front() >= criteria.hold_window - 1e-9,
            "success criteria: log shorter than hold window");
    const double window_start = t_end - criteria.hold_window;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window_start - 1e-9) continue;
        if (std::abs(wrap_angle(theta[i])) > criteria.angle_band) return false;
    }
    return true;
}

Rmse tracking_rmse(const EpisodeLog& log, std::pair<double, double> window) {
    const auto& t = log.column("t");
    const char* axes[3] = {"x", "y", "z"};
    const char* refs[3] = {"ref_x", "ref_y", "ref_z"};
    double sum_sq[3] = {0.0, 0.0, 0.0};
    double sum_norm_sq = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < window.first - 1e-9 || t[i] > window.second + 1e-9) continue;
        double norm_sq = 0.0;
        for (int a = 0; a < 3; ++a) {
            const double e = log.value(axes[a], i) - log.value(refs[a], i);
            sum_sq[a] += e * e;
            norm_sq += e * e;
        }
        sum_norm_sq += norm_sq;
        ++count;
    }
    require(count > 0, "tracking_rmse: empty window");
    Rmse r;
    r.x = std::sqrt(sum_sq[0] / count);
    r.y = std::sqrt(sum_sq[1] / count);
    r.z = std::sqrt(sum_sq[2] / count);
    r.total3d = std::sqrt(sum_norm_sq / count);
    return r;
}

}  // namespace ferl
