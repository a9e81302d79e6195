#include "ferl/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "ferl/serialize.hpp"

namespace ferl {

void parallel_for(int n, int parallelism, const std::function<void(int)>& fn) {
    require(n >= 0, "parallel_for: negative task count");
    require(parallelism >= 1, "parallel_for: need at least one worker");
    if (n == 0) return;
    const int workers = std::min(parallelism, n);
    if (workers == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const int i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    errors[static_cast<std::size_t>(i)] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double pendulum_success_rate(const PendulumController& controller, const PendulumParams& plant,
                             const EvalProtocol& protocol, std::uint64_t seed) {
    require(protocol.episodes >= 1, "eval: need at least one episode");
    int successes = 0;
    for (int ep = 0; ep < protocol.episodes; ++ep) {
        PendulumEpisodeOptions opt;
        opt.schedule = ParameterSchedule<PendulumParams>::constant(plant);
        opt.duration = protocol.duration;
        opt.agent_dt = protocol.agent_dt;
        opt.inner_dt = protocol.inner_dt;
        opt.torque_limit = protocol.torque_limit;
        opt.init_jitter = protocol.init_jitter;
        opt.seed = derive_seed(seed, static_cast<std::uint64_t>(ep));
        const EpisodeLog log = run_pendulum_episode(controller, opt);
        if (swingup_success(log, protocol.criteria)) ++successes;
    }
    return static_cast<double>(successes) / protocol.episodes;
}

namespace {

StopCallback make_early_stop(const PendulumParams& plant, const ClusterTrainingConfig& config,
                             std::uint64_t seed, std::shared_ptr<int> streak) {
    if (!config.early_stop.enabled) return nullptr;
    EvalProtocol proto = config.eval;
    proto.episodes = config.early_stop.eval_episodes;
    proto.init_jitter = config.early_stop.init_jitter;
    const EarlyStopOptions es = config.early_stop;
    return [plant, proto, es, seed, streak](const Policy& policy, int episodes_done) {
        if (episodes_done < es.min_episodes) return false;
        const auto ctrl = PendulumController::from_policy(&policy);
        const double rate =
            pendulum_success_rate(ctrl, plant, proto, derive_seed(seed, 0xE5A1));
        *streak = (rate >= 1.0) ? *streak + 1 : 0;
        return *streak >= es.required_passes;
    };
}

std::string training_cache_key(const std::string& tag, const DdpgHyper& h,
                               double action_limit, double train_torque_limit,
                               const EarlyStopOptions& es, std::uint64_t seed) {
    std::ostringstream os;
    os << tag << '|' << h.actor_lr << '|' << h.critic_lr << '|' << h.discount << '|'
       << h.noise_variance << '|' << h.episode_length_s << '|' << h.agent_dt << '|'
       << h.replay_capacity << '|' << h.batch_size << '|' << h.target_tau << '|' << h.episodes
       << '|' << h.warmup_steps << '|' << h.warmup_uniform << '|' << h.hidden1 << '|' << h.hidden2 << '|'
       << h.l2_weight_decay << '|' << h.grad_clip_norm << '|'
       << action_limit << '|' << train_torque_limit << '|' << es.enabled << '|' << es.eval_every << '|'
       << es.eval_episodes << '|' << es.required_passes << '|' << es.min_episodes << '|'
       << es.init_jitter << '|' << seed;
    return hash_hex(os.str());
}

// Train-or-load with a content-keyed cache; the key covers everything that
// influences the weights, so stale entries cannot be returned.
Policy cached_train(const std::string& cache_dir, const std::string& key,
                    const std::function<Policy()>& train, bool train_if_missing = true) {
    if (cache_dir.empty()) {
        if (!train_if_missing)
            throw MissingArtifact("missing policy artifact (no cache dir configured): policy_" +
                                  key + ".json");
        return train();
    }
    const std::filesystem::path path =
        std::filesystem::path(cache_dir) / ("policy_" + key + ".json");
    if (std::filesystem::exists(path)) return policy_from_json(load_json(path.string()));
    if (!train_if_missing) throw MissingArtifact("missing policy artifact: " + path.string());
    Policy p = train();
    save_json(policy_to_json(p), path.string());
    return p;
}

Policy train_one_pendulum(const PendulumParams& plant, const ClusterTrainingConfig& config,
                          std::uint64_t seed, const std::string& tag) {
    const auto train = [&] {
        PendulumEnv::Options env_opt;
        env_opt.params = plant;
        env_opt.action_limit = config.action_limit;
        env_opt.torque_limit = config.train_torque_limit;
        env_opt.agent_dt = config.hyper.agent_dt;
        env_opt.inner_dt = config.inner_dt;
        env_opt.episode_length_s = config.hyper.episode_length_s;
        PendulumEnv env(env_opt);
        auto streak = std::make_shared<int>(0);
        const StopCallback stop = make_early_stop(plant, config, seed, streak);
        return ddpg_train(env, config.hyper, seed, stop,
                          stop ? config.early_stop.eval_every : 0)
            .policy;
    };
    const std::string key = training_cache_key(tag, config.hyper, config.action_limit,
                                               config.train_torque_limit, config.early_stop, seed);
    return cached_train(config.cache_dir, key, train, config.train_if_missing);
}

}  // namespace

Policy train_pendulum_policy(const PendulumParams& plant, const ClusterTrainingConfig& config,
                             std::uint64_t seed) {
    std::ostringstream tag;
    tag << "pendulum|" << plant.length << '|' << plant.mass << '|' << plant.gravity;
    return train_one_pendulum(plant, config, seed, tag.str());
}

std::vector<Policy> train_cluster_agents(const ClusterModel& model,
                                         const ClusterTrainingConfig& config,
                                         std::uint64_t base_seed) {
    const int n = model.n_clusters();
    std::vector<Policy> policies(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
    parallel_for(n, config.parallelism, [&](int j) {
        PendulumParams plant;
        plant.length = model.centers()(j, 0);
        plant.mass = model.centers()(j, 1);
        try {
            policies[static_cast<std::size_t>(j)] = train_pendulum_policy(
                plant, config, derive_seed(base_seed, static_cast<std::uint64_t>(j)));
        } catch (...) {
            failures[static_cast<std::size_t>(j)] = std::current_exception();
        }
    });
    // all jobs ran to completion; surface the first failure with its index,
    // preserving the artifact-vs-training distinction
    for (int j = 0; j < n; ++j) {
        if (!failures[static_cast<std::size_t>(j)]) continue;
        try {
            std::rethrow_exception(failures[static_cast<std::size_t>(j)]);
        } catch (const MissingArtifact& e) {
            throw MissingArtifact("cluster agent " + std::to_string(j) + ": " + e.what());
        } catch (const std::exception& e) {
            throw TrainingFailure("cluster agent " + std::to_string(j) + " failed: " + e.what());
        }
    }
    return policies;
}

Policy train_dr_policy(const std::pair<double, double>& length_range,
                       const std::pair<double, double>& mass_range,
                       const ClusterTrainingConfig& config, std::uint64_t seed) {
    const auto train = [&] {
        PendulumEnv::Options env_opt;
        env_opt.action_limit = config.action_limit;
        env_opt.torque_limit = config.train_torque_limit;
        env_opt.agent_dt = config.hyper.agent_dt;
        env_opt.inner_dt = config.inner_dt;
        env_opt.episode_length_s = config.hyper.episode_length_s;
        // DR has no single plant to early-stop against; use the box center.
        PendulumParams center;
        center.length = 0.5 * (length_range.first + length_range.second);
        center.mass = 0.5 * (mass_range.first + mass_range.second);
        auto streak = std::make_shared<int>(0);
        const StopCallback stop = make_early_stop(center, config, seed, streak);
        return dr_train(length_range, mass_range, env_opt, config.hyper, seed, stop,
                        stop ? config.early_stop.eval_every : 0)
            .policy;
    };
    std::ostringstream tag;
    tag << "dr|" << length_range.first << '|' << length_range.second << '|' << mass_range.first
        << '|' << mass_range.second;
    const std::string key = training_cache_key(tag.str(), config.hyper, config.action_limit,
                                               config.train_torque_limit, config.early_stop, seed);
    return cached_train(config.cache_dir, key, train, config.train_if_missing);
}

// ---------------------------------------------------------------------------
// Failure study
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd grid_samples(const std::pair<double, double>& length_range,
                             const std::pair<double, double>& mass_range, int nl, int nm) {
    Eigen::MatrixXd samples(nl * nm, 2);
    int k = 0;
    for (int i = 0; i < nl; ++i) {
        const double l = nl == 1 ? 0.5 * (length_range.first + length_range.second)
                                 : length_range.first +
                                       (length_range.second - length_range.first) * i / (nl - 1);
        for (int j = 0; j < nm; ++j) {
            const double m = nm == 1 ? 0.5 * (mass_range.first + mass_range.second)
                                     : mass_range.first +
                                           (mass_range.second - mass_range.first) * j / (nm - 1);
            samples(k, 0) = l;
            samples(k, 1) = m;
            ++k;
        }
    }
    return samples;
}

}  // namespace

std::vector<int> FailureStudyResult::failures_of(int cluster_count,
                                                 const std::string& method) const {
    std::vector<int> out;
    for (const auto& row : rows)
        if (row.cluster_count == cluster_count && row.method == method)
            out.push_back(row.failures);
    return out;
}

double FailureStudyResult::median_failures(int cluster_count, const std::string& method) const {
    std::vector<int> v = failures_of(cluster_count, method);
    require(!v.empty(), "failure study: no rows for " + method);
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

FailureStudyResult failure_study(const FailureStudyConfig& config) {
    require(config.trials >= 1, "failure study: trials must be >= 1");
    require(!config.methods.empty(), "failure study: no methods");
    for (const auto& m : config.methods)
        require(m == "ferl" || m == "ferl_hull" || m == "nearest" || m == "dr",
                "failure study: unknown method " + m);

    FailureStudyResult result;
    result.config = config;

    const Eigen::MatrixXd eval_plants = grid_samples(config.length_range, config.mass_range,
                                                     config.eval_grid[0], config.eval_grid[1]);
    result.grid_size = static_cast<int>(eval_plants.rows());
    const Eigen::MatrixXd fit_samples = grid_samples(config.length_range, config.mass_range,
                                                     config.fit_grid[0], config.fit_grid[1]);

    const bool wants_dr =
        std::find(config.methods.begin(), config.methods.end(), "dr") != config.methods.end();
    std::vector<std::string> ensemble_methods;
    for (const auto& m : config.methods)
        if (m != "dr") ensemble_methods.push_back(m);

    EvalProtocol eval = config.eval;
    eval.episodes = 1;
    eval.init_jitter = 0.0;  // one deterministic episode per plant

    for (int count_idx = 0; count_idx < static_cast<int>(config.cluster_counts.size());
         ++count_idx) {
        const int n_clusters = config.cluster_counts[static_cast<std::size_t>(count_idx)];
        const FcmResult fcm =
            fit_clusters(fit_samples, n_clusters, config.fcm_q, config.fcm_tol,
                         config.fcm_max_iter, derive_seed(config.base_seed, 0xF0 + n_clusters));

        for (int trial = 0; trial < config.trials; ++trial) {
            const std::uint64_t trial_seed =
                derive_seed(config.base_seed, 1000ULL * static_cast<std::uint64_t>(n_clusters) +
                                                  static_cast<std::uint64_t>(trial));

            std::vector<Policy> policies;
            if (!ensemble_methods.empty())
                policies = train_cluster_agents(fcm.model, config.training, trial_seed);

            std::optional<Policy> dr_policy;
            if (wants_dr)
                dr_policy = train_dr_policy(config.length_range, config.mass_range,
                                            config.training, derive_seed(trial_seed, 0xD0));

            for (const auto& method : config.methods) {
                std::optional<EnsembleController> ens;
                if (method != "dr")
                    ens.emplace(fcm.model, policies, config.agreement_threshold,
                                fusion_mode_from_name(method));

                std::vector<int> failed(static_cast<std::size_t>(result.grid_size), 0);
                parallel_for(result.grid_size, config.training.parallelism, [&](int p) {
                    PendulumParams plant;
                    plant.length = eval_plants(p, 0);
                    plant.mass = eval_plants(p, 1);
                    PendulumController ctrl =
                        method == "dr" ? PendulumController::from_policy(&*dr_policy)
                                       : PendulumController::from_ensemble(&*ens);
                    const double rate = pendulum_success_rate(
                        ctrl, plant, eval,
                        derive_seed(trial_seed, 0xEE00 + static_cast<std::uint64_t>(p)));
                    failed[static_cast<std::size_t>(p)] = rate < 1.0 ? 1 : 0;
                });

                FailureStudyRow row;
                row.cluster_count = n_clusters;
                row.method = method;
                row.trial = trial;
                row.failures = 0;
                for (int f : failed) row.failures += f;
                result.rows.push_back(row);
            }
        }
    }
    return result;
}

namespace {

std::string format_double_csv(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void write_failure_study_csv(const FailureStudyResult& result, const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    require(out.good(), "failure study: cannot open " + path);
    out << "cluster_count,method,trial,failures,grid_size\n";
    for (const auto& row : result.rows)
        out << row.cluster_count << ',' << row.method << ',' << row.trial << ',' << row.failures
            << ',' << result.grid_size << '\n';
}

void write_failure_study_stats_csv(const FailureStudyResult& result, const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    require(out.good(), "failure study: cannot open " + path);
    out << "cluster_count,method,min,q1,median,q3,max\n";
    for (int count : result.config.cluster_counts) {
        for (const auto& method : result.config.methods) {
            std::vector<int> v = result.failures_of(count, method);
            if (v.empty()) continue;
            std::sort(v.begin(), v.end());
            const auto quantile = [&](double q) {
                const double pos = q * (static_cast<double>(v.size()) - 1.0);
                const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
                const std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
                return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
            };
            out << count << ',' << method << ',' << v.front() << ','
                << format_double_csv(quantile(0.25)) << ',' << format_double_csv(quantile(0.5))
                << ',' << format_double_csv(quantile(0.75)) << ',' << v.back() << '\n';
        }
    }
}

// ---------------------------------------------------------------------------
// Tracking study
// ---------------------------------------------------------------------------

std::vector<Policy> train_tracking_policies(const TrackingStudyConfig& config) {
    require(config.policy_cable_lengths.size() >= 1, "tracking study: no cable lengths");
    const int n = static_cast<int>(config.policy_cable_lengths.size());
    std::vector<Policy> policies(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));
    parallel_for(n, config.parallelism, [&](int i) {
        try {
            const double cable = config.policy_cable_lengths[static_cast<std::size_t>(i)];
            const std::uint64_t seed = derive_seed(config.base_seed, 0x0AD0 + i);
            const auto train = [&] {
                QuadTrackingEnv::Options env_opt = config.env_template;
                env_opt.params = config.plant;
                env_opt.params.cable_length = cable;
                env_opt.reference = config.reference;
                env_opt.agent_dt = config.hyper.agent_dt;
                env_opt.inner_dt = config.inner_dt;
                env_opt.episode_length_s = config.hyper.episode_length_s;
                QuadTrackingEnv env(env_opt);
                return ddpg_train(env, config.hyper, seed).policy;
            };
            std::ostringstream tag;
            tag << "quad|" << cable << '|' << config.plant.quad_mass << '|'
                << config.plant.load_mass << '|' << config.reference.period << '|'
                << config.env_template.lateral_force_limit << '|'
                << config.env_template.vertical_force_limit;
            const std::string key = training_cache_key(tag.str(), config.hyper, 0.0, 0.0,
                                                       EarlyStopOptions{false, 0, 0, 0, 0, 0.0},
                                                       seed);
            policies[static_cast<std::size_t>(i)] = cached_train(config.cache_dir, key, train);
        } catch (...) {
            failures[static_cast<std::size_t>(i)] = std::current_exception();
        }
    });
    for (int i = 0; i < n; ++i) {
        if (!failures[static_cast<std::size_t>(i)]) continue;
        try {
            std::rethrow_exception(failures[static_cast<std::size_t>(i)]);
        } catch (const MissingArtifact& e) {
            throw MissingArtifact("tracking policy " + std::to_string(i) + ": " + e.what());
        } catch (const std::exception& e) {
            throw TrainingFailure("tracking policy " + std::to_string(i) + " failed: " + e.what());
        }
    }
    return policies;
}

TrackingStudyResult tracking_study(const TrackingStudyConfig& config) {
    require(config.policy_cable_lengths.size() == 2,
            "tracking study: the four-phase protocol uses exactly two policies");
    std::vector<Policy> policies = train_tracking_policies(config);

    // 1-D cluster model over cable length
    Eigen::MatrixXd centers(2, 1);
    centers << config.policy_cable_lengths[0], config.policy_cable_lengths[1];
    Eigen::VectorXd lo(1), hi(1);
    lo << std::min(config.policy_cable_lengths[0], config.policy_cable_lengths[1]);
    hi << std::max(config.policy_cable_lengths[0], config.policy_cable_lengths[1]);
    ClusterModel model(centers, config.fcm_q, lo, hi);
    EnsembleController ens(model, policies, config.agreement_threshold, FusionMode::ferl);

    const double t1 = config.warmup_s;
    const double t2 = t1 + config.phase_length_s;
    const double t3 = t2 + config.phase_length_s;
    const double t4 = t3 + config.phase_length_s;
    const double t_end = t4 + config.phase_length_s;

    QuadEpisodeOptions opt;
    opt.params = config.plant;
    opt.reference = config.reference;
    opt.duration = t_end;
    opt.agent_dt = config.agent_dt;
    opt.inner_dt = config.inner_dt;
    opt.membership_query = Eigen::VectorXd::Constant(1, config.plant.cable_length);
    WindProfile wind = config.wind;
    wind.start_time = t4;
    opt.wind = wind;
    opt.seed = config.base_seed;
    opt.phases = {{0.0, nullptr, &ens, "warmup"},
                  {t1, &policies[0], nullptr, "policy_a"},
                  {t2, &policies[1], nullptr, "policy_b"},
                  {t3, nullptr, &ens, "ensemble"},
                  {t4, nullptr, &ens, "ensemble_wind"}};

    TrackingStudyResult result{.phases = {}, .log = run_quad_episode(opt)};
    const std::pair<std::string, std::pair<double, double>> windows[4] = {
        {"policy_a", {t1, t2}},
        {"policy_b", {t2, t3}},
        {"ensemble", {t3, t4}},
        {"ensemble_wind", {t4, t_end}}};
    for (const auto& [name, window] : windows)
        result.phases.push_back(
            {name, window.first, window.second, tracking_rmse(result.log, window)});
    return result;
}

void write_tracking_study_csv(const TrackingStudyResult& result, const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    require(out.good(), "tracking study: cannot open " + path);
    out << "phase,t_start,t_end,rmse_x,rmse_y,rmse_z,rmse_3d\n";
    for (const auto& p : result.phases)
        out << p.name << ',' << format_double_csv(p.t_start) << ',' << format_double_csv(p.t_end)
            << ',' << format_double_csv(p.rmse.x) << ',' << format_double_csv(p.rmse.y) << ','
            << format_double_csv(p.rmse.z) << ',' << format_double_csv(p.rmse.total3d) << '\n';
}

}  // namespace ferl
