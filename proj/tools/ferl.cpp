// ferl: config-driven front end for clustering, training, identification,
// evaluation, and the failure / tracking studies.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>

#include "ferl/config.hpp"
#include "ferl/experiments.hpp"
#include "ferl/qlearn.hpp"
#include "ferl/serialize.hpp"

namespace fs = std::filesystem;
using namespace ferl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumeric = 4;

struct CliOptions {
    std::string config_path;
    std::string out_dir;       // override
    std::string out_file;      // for `cluster`
    std::string cluster_model; // input artifact
    std::string policy_dir;    // input artifact dir
    std::string policy_file;   // single-policy input
    std::string target = "clusters";  // train: clusters | dr | nominal | quad
    std::uint64_t seed = 0;
    bool seed_set = false;
    int parallelism = 0;
    bool dry_run = false;
    bool no_train = false;  // failure-study: require cached policies
};

void fail_line(int code, const std::string& kind, const std::string& msg) {
    nlohmann::json j = {{"error", {{"code", code}, {"kind", kind}, {"message", msg}}}};
    std::cerr << j.dump() << '\n';
}

std::string resolve_out_dir(const ExperimentConfig& cfg, const CliOptions& cli) {
    std::string dir = cli.out_dir.empty() ? cfg.out_dir : cli.out_dir;
    const char* root = std::getenv("FERL_OUT_ROOT");
    if (root != nullptr && *root != '\0' && fs::path(dir).is_relative())
        dir = (fs::path(root) / dir).string();
    return dir;
}

ExperimentConfig load_config(const CliOptions& cli) {
    ExperimentConfig cfg = ExperimentConfig::load(cli.config_path);
    if (cli.seed_set) cfg.seed = cli.seed;
    if (cli.parallelism > 0) cfg.parallelism = cli.parallelism;
    return cfg;
}

nlohmann::json manifest_base(const std::string& command, const ExperimentConfig& cfg,
                             const CliOptions& cli) {
    nlohmann::json m;
    m["tool"] = "ferl";
    m["command"] = command;
    m["config"] = cfg.to_json();
    m["config_hash"] = hash_hex(cfg.to_json().dump());
    m["config_file"] = cli.config_path;
    m["seed"] = cfg.seed;
    nlohmann::json overrides = nlohmann::json::object();
    if (cli.seed_set) overrides["seed"] = cli.seed;
    if (cli.parallelism > 0) overrides["parallelism"] = cli.parallelism;
    if (!cli.out_dir.empty()) overrides["out_dir"] = cli.out_dir;
    m["flag_overrides"] = overrides;
    m["inputs"] = nlohmann::json::object();
    m["outputs"] = nlohmann::json::array();
    return m;
}

void add_input(nlohmann::json& manifest, const std::string& path) {
    manifest["inputs"][path] = file_hash_hex(path);
}

void write_manifest(nlohmann::json manifest, const std::string& out_dir) {
    save_json(manifest, (fs::path(out_dir) / "manifest.json").string());
}

Eigen::MatrixXd config_fit_grid(const ExperimentConfig& cfg) {
    const int nl = cfg.cluster.fit_grid[0], nm = cfg.cluster.fit_grid[1];
    require(nl >= 1 && nm >= 1, "cluster.fit_grid entries must be >= 1");
    Eigen::MatrixXd samples(nl * nm, 2);
    int k = 0;
    for (int i = 0; i < nl; ++i)
        for (int j = 0; j < nm; ++j) {
            samples(k, 0) =
                nl == 1 ? cfg.plant.length_range.first
                        : cfg.plant.length_range.first +
                              (cfg.plant.length_range.second - cfg.plant.length_range.first) * i /
                                  (nl - 1);
            samples(k, 1) =
                nm == 1 ? cfg.plant.mass_range.first
                        : cfg.plant.mass_range.first +
                              (cfg.plant.mass_range.second - cfg.plant.mass_range.first) * j /
                                  (nm - 1);
            ++k;
        }
    return samples;
}

std::vector<Policy> load_policy_dir(const std::string& dir, int expected) {
    std::vector<Policy> policies;
    for (int i = 0; i < expected; ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "policy_%03d.json", i);
        const std::string path = (fs::path(dir) / name).string();
        if (!fs::exists(path)) throw MissingArtifact("missing policy file: " + path);
        policies.push_back(policy_from_json(load_json(path)));
    }
    return policies;
}

int cmd_cluster(const CliOptions& cli) {
    ExperimentConfig cfg = load_config(cli);
    const std::string out =
        cli.out_file.empty() ? (fs::path(resolve_out_dir(cfg, cli)) / "cluster_model.json").string()
                             : cli.out_file;
    if (cli.dry_run) {
        std::cout << "plan: fit " << cfg.cluster.n_clusters << " clusters (q=" << cfg.cluster.q
                  << ") on a " << cfg.cluster.fit_grid[0] << "x" << cfg.cluster.fit_grid[1]
                  << " grid; write " << out << "\n";
        return kExitOk;
    }
    const FcmResult fit =
        fit_clusters(config_fit_grid(cfg), cfg.cluster.n_clusters, cfg.cluster.q, cfg.cluster.tol,
                     cfg.cluster.max_iter, cfg.seed);
    save_json(cluster_model_to_json(fit.model), out);
    nlohmann::json manifest = manifest_base("cluster", cfg, cli);
    manifest["outputs"].push_back(out);
    manifest["converged"] = fit.converged;
    manifest["objective"] = fit.objective;
    manifest["iterations"] = fit.iterations;
    write_manifest(manifest, fs::path(out).parent_path().string());
    std::cout << "cluster model written to " << out << " (converged=" << fit.converged
              << ", J=" << fit.objective << ")\n";
    return kExitOk;
}

int cmd_train(const CliOptions& cli) {
    ExperimentConfig cfg = load_config(cli);
    const std::string out_dir = resolve_out_dir(cfg, cli);
    nlohmann::json manifest = manifest_base("train", cfg, cli);

    if (cli.dry_run) {
        std::cout << "plan: train target=" << cli.target << " into " << out_dir << "\n";
        return kExitOk;
    }

    ClusterTrainingConfig tc = cfg.cluster_training_config();
    std::vector<std::pair<std::string, Policy>> outputs;

    if (cli.target == "clusters") {
        if (cli.cluster_model.empty())
            throw InvalidInput("train --target clusters requires --cluster-model");
        add_input(manifest, cli.cluster_model);
        const ClusterModel model = cluster_model_from_json(load_json(cli.cluster_model));
        const std::vector<Policy> policies = train_cluster_agents(model, tc, cfg.seed);
        for (std::size_t i = 0; i < policies.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "policy_%03zu.json", i);
            outputs.emplace_back((fs::path(out_dir) / "policies" / name).string(), policies[i]);
        }
    } else if (cli.target == "dr") {
        const Policy p =
            train_dr_policy(cfg.plant.length_range, cfg.plant.mass_range, tc, cfg.seed);
        outputs.emplace_back((fs::path(out_dir) / "policies" / "dr_policy.json").string(), p);
    } else if (cli.target == "nominal") {
        PendulumParams plant;
        plant.mass = cfg.plant.nominal_mass;
        plant.length = cfg.plant.nominal_length;
        plant.gravity = cfg.plant.gravity;
        Policy p;
        if (cfg.algorithm == "qlearn") {
            PendulumEnv::Options env_opt;
            env_opt.params = plant;
            env_opt.torque_limit = cfg.train_torque_limit;
            env_opt.agent_dt = cfg.agent.agent_dt;
            env_opt.inner_dt = cfg.inner_dt;
            env_opt.episode_length_s = cfg.agent.episode_length_s;
            PendulumEnv env(env_opt);
            p = qlearn_train(env, cfg.qlearn.spec, cfg.qlearn.hyper, cfg.seed);
        } else {
            p = train_pendulum_policy(plant, tc, cfg.seed);
        }
        outputs.emplace_back((fs::path(out_dir) / "policies" / "nominal_policy.json").string(), p);
    } else if (cli.target == "quad") {
        const std::vector<Policy> policies = train_tracking_policies(cfg.tracking_study_config());
        for (std::size_t i = 0; i < policies.size(); ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "quad_policy_%03zu.json", i);
            outputs.emplace_back((fs::path(out_dir) / "policies" / name).string(), policies[i]);
        }
    } else {
        throw InvalidInput("unknown train target: " + cli.target);
    }

    for (const auto& [path, policy] : outputs) {
        save_json(policy_to_json(policy), path);
        manifest["outputs"].push_back(path);
    }
    write_manifest(manifest, out_dir);
    std::cout << "trained " << outputs.size() << " policy file(s) under " << out_dir << "\n";
    return kExitOk;
}

int cmd_identify(const CliOptions& cli) {
    ExperimentConfig cfg = load_config(cli);
    const std::string out_dir = resolve_out_dir(cfg, cli);
    if (cli.dry_run) {
        std::cout << "plan: identification scenario, trace to " << out_dir << "/identify.csv\n";
        return kExitOk;
    }

    PendulumEpisodeOptions opt;
    opt.schedule = cfg.pendulum_schedule();
    opt.duration = cfg.evaluation.duration;
    opt.agent_dt = cfg.agent.agent_dt;
    opt.inner_dt = cfg.inner_dt;
    opt.torque_limit = cfg.evaluation.torque_limit;
    opt.seed = cfg.seed;
    IdentificationOptions id;
    id.forgetting = cfg.identification.forgetting;
    id.initial_covariance = cfg.identification.initial_covariance;
    id.initial_guess.length = cfg.identification.initial_length;
    id.initial_guess.mass = cfg.identification.initial_mass;
    id.initial_guess.gravity = cfg.plant.gravity;
    id.gate_window = cfg.identification.gate_window;
    id.gate_rel_change = cfg.identification.gate_rel_change;
    id.sample_dt = cfg.identification.sample_dt;
    opt.identification = id;

    const double amp = cfg.identification.excitation_amplitude;
    const auto controller = PendulumController::from_script([amp](double t, const PendulumState&) {
        return amp * (std::sin(2.0 * kPi * 0.25 * t) + 0.6 * std::sin(2.0 * kPi * 0.9 * t + 1.0));
    });

    const EpisodeLog log = run_pendulum_episode(controller, opt);
    const std::string csv = (fs::path(out_dir) / "identify.csv").string();
    fs::create_directories(out_dir);
    log.write_csv(csv);

    const std::size_t last = log.rows() - 1;
    std::cout << "final estimates: length=" << log.value("est_length", last)
              << " (true " << log.value("true_length", last) << "), mass="
              << log.value("est_mass", last) << " (true " << log.value("true_mass", last) << ")\n";

    nlohmann::json manifest = manifest_base("identify", cfg, cli);
    manifest["outputs"].push_back(csv);
    write_manifest(manifest, out_dir);
    return kExitOk;
}

int cmd_evaluate(const CliOptions& cli) {
    ExperimentConfig cfg = load_config(cli);
    const std::string out_dir = resolve_out_dir(cfg, cli);
    nlohmann::json manifest = manifest_base("evaluate", cfg, cli);

    if (cli.dry_run) {
        std::cout << "plan: one evaluation episode, log to " << out_dir << "/episode.csv\n";
        return kExitOk;
    }

    // assemble the controller
    std::optional<ClusterModel> model;
    std::vector<Policy> policies;
    std::optional<EnsembleController> ens;
    Policy single;
    PendulumController controller = PendulumController::zero_torque();
    if (!cli.cluster_model.empty()) {
        add_input(manifest, cli.cluster_model);
        model = cluster_model_from_json(load_json(cli.cluster_model));
        if (cli.policy_dir.empty())
            throw InvalidInput("evaluate with --cluster-model requires --policies");
        policies = load_policy_dir(cli.policy_dir, model->n_clusters());
        for (int i = 0; i < model->n_clusters(); ++i) {
            char name[64];
            std::snprintf(name, sizeof(name), "policy_%03d.json", i);
            add_input(manifest, (fs::path(cli.policy_dir) / name).string());
        }
        ens.emplace(*model, policies, cfg.ensemble.agreement_threshold,
                    fusion_mode_from_name(cfg.ensemble.mode));
        controller = PendulumController::from_ensemble(&*ens);
    } else if (!cli.policy_file.empty()) {
        add_input(manifest, cli.policy_file);
        single = policy_from_json(load_json(cli.policy_file));
        controller = PendulumController::from_policy(&single);
    }

    PendulumEpisodeOptions opt;
    opt.schedule = cfg.pendulum_schedule();
    opt.duration = cfg.evaluation.duration;
    opt.agent_dt = cfg.agent.agent_dt;
    opt.inner_dt = cfg.inner_dt;
    opt.torque_limit = cfg.evaluation.torque_limit;
    opt.init_jitter = 0.0;
    opt.seed = cfg.seed;
    if (cfg.identification.enabled) {
        IdentificationOptions id;
        id.forgetting = cfg.identification.forgetting;
        id.initial_covariance = cfg.identification.initial_covariance;
        id.initial_guess.length = cfg.identification.initial_length;
        id.initial_guess.mass = cfg.identification.initial_mass;
        id.initial_guess.gravity = cfg.plant.gravity;
        id.gate_window = cfg.identification.gate_window;
        id.gate_rel_change = cfg.identification.gate_rel_change;
        id.sample_dt = cfg.identification.sample_dt;
        opt.identification = id;
    }

    const EpisodeLog log = run_pendulum_episode(controller, opt);
    fs::create_directories(out_dir);
    const std::string csv = (fs::path(out_dir) / "episode.csv").string();
    log.write_csv(csv);
    const bool success = swingup_success(log, cfg.evaluation.criteria);
    std::cout << "swingup_success=" << (success ? 1 : 0) << "\n";

    manifest["outputs"].push_back(csv);
    manifest["swingup_success"] = success;
    write_manifest(manifest, out_dir);
    return kExitOk;
}

int cmd_failure_study(const CliOptions& cli) {
    ExperimentConfig cfg = load_config(cli);
    const std::string out_dir = resolve_out_dir(cfg, cli);
    FailureStudyConfig fc = cfg.failure_study_config();
    if (fc.training.cache_dir.empty())
        fc.training.cache_dir = (fs::path(out_dir) / "policy_cache").string();
    fc.training.train_if_missing = !cli.no_train;

    if (cli.dry_run) {
        std::cout << "plan: failure study, grid " << fc.eval_grid[0] << "x" << fc.eval_grid[1]
                  << ", trials " << fc.trials << ", cluster counts [";
        for (std::size_t i = 0; i < fc.cluster_counts.size(); ++i)
            std::cout << (i ? "," : "") << fc.cluster_counts[i];
        std::cout << "], methods [";
        for (std::size_t i = 0; i < fc.methods.size(); ++i)
            std::cout << (i ? "," : "") << fc.methods[i];
        std::cout << "]; outputs in " << out_dir << "\n";
        return kExitOk;
    }

    const FailureStudyResult result = failure_study(fc);
    const std::string results_csv = (fs::path(out_dir) / "failure_study.csv").string();
    const std::string stats_csv = (fs::path(out_dir) / "failure_study_stats.csv").string();
    write_failure_study_csv(result, results_csv);
    write_failure_study_stats_csv(result, stats_csv);

    nlohmann::json manifest = manifest_base("failure-study", cfg, cli);
    manifest["outputs"].push_back(results_csv);
    manifest["outputs"].push_back(stats_csv);
    write_manifest(manifest, out_dir);

    for (int count : fc.cluster_counts)
        for (const auto& m : fc.methods)
            std::cout << "clusters=" << count << " method=" << m
                      << " median_failures=" << result.median_failures(count, m) << "/"
                      << result.grid_size << "\n";
    return kExitOk;
}

int cmd_tracking_study(const CliOptions& cli) {
    ExperimentConfig cfg = load_config(cli);
    const std::string out_dir = resolve_out_dir(cfg, cli);
    TrackingStudyConfig tc = cfg.tracking_study_config();
    if (tc.cache_dir.empty()) tc.cache_dir = (fs::path(out_dir) / "policy_cache").string();
    tc.wind = cfg.wind;

    if (cli.dry_run) {
        std::cout << "plan: tracking study, policies at L={" << tc.policy_cable_lengths[0] << ","
                  << tc.policy_cable_lengths[1] << "}, true L=" << tc.plant.cable_length
                  << "; outputs in " << out_dir << "\n";
        return kExitOk;
    }

    const TrackingStudyResult result = tracking_study(tc);
    const std::string rmse_csv = (fs::path(out_dir) / "tracking_rmse.csv").string();
    const std::string episode_csv = (fs::path(out_dir) / "tracking_episode.csv").string();
    write_tracking_study_csv(result, rmse_csv);
    fs::create_directories(out_dir);
    result.log.write_csv(episode_csv);

    nlohmann::json manifest = manifest_base("tracking-study", cfg, cli);
    manifest["outputs"].push_back(rmse_csv);
    manifest["outputs"].push_back(episode_csv);
    write_manifest(manifest, out_dir);

    for (const auto& p : result.phases)
        std::cout << p.name << " rmse_3d=" << p.rmse.total3d << " (x=" << p.rmse.x
                  << ", y=" << p.rmse.y << ", z=" << p.rmse.z << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fuzzy-ensemble RL control laboratory"};
    app.require_subcommand(1);

    CliOptions cli;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", cli.config_path, "experiment config JSON")->required();
        sub->add_option("--out-dir", cli.out_dir, "output directory (overrides config)");
        sub->add_option("--seed", cli.seed, "seed override")->each([&](const std::string&) {
            cli.seed_set = true;
        });
        sub->add_option("--parallelism", cli.parallelism, "worker count override");
        sub->add_flag("--dry-run", cli.dry_run, "validate and print the plan, no side effects");
    };

    CLI::App* cluster = app.add_subcommand("cluster", "fit the fuzzy c-means model");
    add_common(cluster);
    cluster->add_option("--out", cli.out_file, "cluster model output path");

    CLI::App* train = app.add_subcommand("train", "train policies");
    add_common(train);
    train->add_option("--cluster-model", cli.cluster_model, "cluster model JSON");
    train->add_option("--target", cli.target, "clusters | dr | nominal | quad");

    CLI::App* identify = app.add_subcommand("identify", "run the RLS identification scenario");
    add_common(identify);

    CLI::App* evaluate = app.add_subcommand("evaluate", "run one closed-loop episode");
    add_common(evaluate);
    evaluate->add_option("--cluster-model", cli.cluster_model, "cluster model JSON");
    evaluate->add_option("--policies", cli.policy_dir, "directory of policy_###.json files");
    evaluate->add_option("--policy", cli.policy_file, "single policy JSON");

    CLI::App* fstudy = app.add_subcommand("failure-study", "swing-up failure statistics");
    add_common(fstudy);
    fstudy->add_flag("--no-train", cli.no_train, "require cached policies, never train");

    CLI::App* tstudy = app.add_subcommand("tracking-study", "four-phase quadrotor tracking study");
    add_common(tstudy);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        fail_line(kExitConfig, "cli", e.what());
        return kExitConfig;
    }

    try {
        if (app.got_subcommand(cluster)) return cmd_cluster(cli);
        if (app.got_subcommand(train)) return cmd_train(cli);
        if (app.got_subcommand(identify)) return cmd_identify(cli);
        if (app.got_subcommand(evaluate)) return cmd_evaluate(cli);
        if (app.got_subcommand(fstudy)) return cmd_failure_study(cli);
        if (app.got_subcommand(tstudy)) return cmd_tracking_study(cli);
    } catch (const ConfigError& e) {
        fail_line(kExitConfig, "config", e.what());
        return kExitConfig;
    } catch (const InvalidInput& e) {
        fail_line(kExitConfig, "invalid-input", e.what());
        return kExitConfig;
    } catch (const MissingArtifact& e) {
        fail_line(kExitMissing, "missing-artifact", e.what());
        return kExitMissing;
    } catch (const NumericError& e) {
        fail_line(kExitNumeric, "numeric", e.what());
        return kExitNumeric;
    } catch (const TrainingFailure& e) {
        fail_line(kExitNumeric, "training", e.what());
        return kExitNumeric;
    } catch (const std::exception& e) {
        fail_line(1, "internal", e.what());
        return 1;
    }
    return kExitOk;
}
