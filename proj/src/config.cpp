#include "ferl/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "ferl/common.hpp"

namespace ferl {

namespace {

// Strict reader: every accessed key is recorded, finish() rejects leftovers.
class Section {
public:
    Section(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_, "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        try {
            out = j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError(join(key), "wrong type");
        }
    }

    void get_pair(const std::string& key, std::pair<double, double>& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        const auto& a = j_.at(key);
        if (!a.is_array() || a.size() != 2) throw ConfigError(join(key), "expected [lo, hi]");
        out = {a[0].get<double>(), a[1].get<double>()};
    }

    void get_grid(const std::string& key, std::array<int, 2>& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        const auto& a = j_.at(key);
        if (!a.is_array() || a.size() != 2) throw ConfigError(join(key), "expected [n, m]");
        out = {a[0].get<int>(), a[1].get<int>()};
    }

    void get_vec3(const std::string& key, Eigen::Vector3d& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        const auto& a = j_.at(key);
        if (!a.is_array() || a.size() != 3) throw ConfigError(join(key), "expected [x, y, z]");
        for (int i = 0; i < 3; ++i) out[i] = a[i].get<double>();
    }

    // marks a key as handled externally (nested sections)
    const nlohmann::json* sub(const std::string& key) {
        if (!j_.contains(key)) return nullptr;
        seen_.insert(key);
        return &j_.at(key);
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!seen_.count(item.key())) throw ConfigError(join(item.key()), "unknown key");
    }

    std::string join(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void parse_hyper(const nlohmann::json& j, const std::string& path, DdpgHyper& h) {
    Section s(j, path);
    s.get("actor_lr", h.actor_lr);
    s.get("critic_lr", h.critic_lr);
    s.get("discount", h.discount);
    s.get("noise_variance", h.noise_variance);
    s.get("episode_length_s", h.episode_length_s);
    s.get("agent_dt", h.agent_dt);
    s.get("replay_capacity", h.replay_capacity);
    s.get("batch_size", h.batch_size);
    s.get("target_tau", h.target_tau);
    s.get("episodes", h.episodes);
    s.get("warmup_steps", h.warmup_steps);
    s.get("warmup_uniform", h.warmup_uniform);
    s.get("hidden1", h.hidden1);
    s.get("hidden2", h.hidden2);
    s.get("l2_weight_decay", h.l2_weight_decay);
    s.get("grad_clip_norm", h.grad_clip_norm);
    s.finish();
    try {
        h.validate();
    } catch (const InvalidInput& e) {
        throw ConfigError(path, e.what());
    }
}

void parse_early_stop(const nlohmann::json& j, const std::string& path, EarlyStopOptions& es) {
    Section s(j, path);
    s.get("enabled", es.enabled);
    s.get("eval_every", es.eval_every);
    s.get("eval_episodes", es.eval_episodes);
    s.get("required_passes", es.required_passes);
    s.get("min_episodes", es.min_episodes);
    s.get("init_jitter", es.init_jitter);
    s.finish();
    if (es.enabled && (es.eval_every < 1 || es.eval_episodes < 1 || es.required_passes < 1))
        throw ConfigError(path, "early stop intervals must be >= 1");
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
    ExperimentConfig c;
    Section root(j, "");
    int version = 1;
    root.get("version", version);
    if (version != 1) throw ConfigError("version", "unsupported config version");
    root.get("seed", c.seed);
    root.get("out_dir", c.out_dir);
    root.get("parallelism", c.parallelism);
    root.get("cache_dir", c.cache_dir);
    root.get("algorithm", c.algorithm);
    root.get("action_limit", c.action_limit);
    root.get("train_torque_limit", c.train_torque_limit);
    root.get("inner_dt", c.inner_dt);

    if (const auto* pj = root.sub("plant")) {
        Section s(*pj, "plant");
        s.get("gravity", c.plant.gravity);
        s.get_pair("length_range", c.plant.length_range);
        s.get_pair("mass_range", c.plant.mass_range);
        s.get("nominal_mass", c.plant.nominal_mass);
        s.get("nominal_length", c.plant.nominal_length);
        s.finish();
    }
    if (const auto* cj = root.sub("cluster")) {
        Section s(*cj, "cluster");
        s.get("n_clusters", c.cluster.n_clusters);
        s.get("q", c.cluster.q);
        s.get("tol", c.cluster.tol);
        s.get("max_iter", c.cluster.max_iter);
        s.get_grid("fit_grid", c.cluster.fit_grid);
        s.finish();
    }
    if (const auto* aj = root.sub("agent")) parse_hyper(*aj, "agent", c.agent);
    if (const auto* ej = root.sub("early_stop")) parse_early_stop(*ej, "early_stop", c.early_stop);

    if (const auto* qj = root.sub("qlearn")) {
        Section s(*qj, "qlearn");
        s.get("theta_bins", c.qlearn.spec.theta_bins);
        s.get("omega_bins", c.qlearn.spec.omega_bins);
        s.get("omega_max", c.qlearn.spec.omega_max);
        if (s.has("action_levels")) {
            std::vector<double> levels;
            s.get("action_levels", levels);
            c.qlearn.spec.action_levels =
                Eigen::Map<Eigen::VectorXd>(levels.data(), static_cast<Eigen::Index>(levels.size()));
        }
        s.get("learning_rate", c.qlearn.hyper.learning_rate);
        s.get("discount", c.qlearn.hyper.discount);
        s.get("epsilon_start", c.qlearn.hyper.epsilon_start);
        s.get("epsilon_min", c.qlearn.hyper.epsilon_min);
        s.get("epsilon_decay", c.qlearn.hyper.epsilon_decay);
        s.get("episodes", c.qlearn.hyper.episodes);
        s.finish();
    }

    if (const auto* ej = root.sub("ensemble")) {
        Section s(*ej, "ensemble");
        s.get("mode", c.ensemble.mode);
        s.get("agreement_threshold", c.ensemble.agreement_threshold);
        s.finish();
        try {
            fusion_mode_from_name(c.ensemble.mode);
        } catch (const InvalidInput& e) {
            throw ConfigError("ensemble.mode", e.what());
        }
        if (c.ensemble.agreement_threshold <= 0.0)
            throw ConfigError("ensemble.agreement_threshold", "must be > 0");
    }

    if (const auto* vj = root.sub("evaluation")) {
        Section s(*vj, "evaluation");
        s.get("episodes", c.evaluation.episodes);
        s.get("init_jitter", c.evaluation.init_jitter);
        s.get("torque_limit", c.evaluation.torque_limit);
        s.get("duration", c.evaluation.duration);
        s.get("agent_dt", c.evaluation.agent_dt);
        s.get("inner_dt", c.evaluation.inner_dt);
        s.get("angle_band", c.evaluation.criteria.angle_band);
        s.get("hold_window_s", c.evaluation.criteria.hold_window);
        s.finish();
        if (c.evaluation.criteria.angle_band <= 0.0)
            throw ConfigError("evaluation.angle_band", "must be > 0");
        if (c.evaluation.criteria.hold_window >= c.evaluation.duration)
            throw ConfigError("evaluation.hold_window_s", "must be shorter than the episode");
    }

    if (const auto* sj = root.sub("study")) {
        Section s(*sj, "study");
        s.get_grid("grid", c.study.grid);
        s.get("trials", c.study.trials);
        s.get("cluster_counts", c.study.cluster_counts);
        s.get("methods", c.study.methods);
        s.finish();
        if (c.study.trials < 1) throw ConfigError("study.trials", "must be >= 1");
        for (const auto& m : c.study.methods)
            if (m != "ferl" && m != "ferl_hull" && m != "nearest" && m != "dr")
                throw ConfigError("study.methods", "unknown method " + m);
    }

    if (const auto* ij = root.sub("identification")) {
        Section s(*ij, "identification");
        s.get("enabled", c.identification.enabled);
        s.get("forgetting", c.identification.forgetting);
        s.get("initial_covariance", c.identification.initial_covariance);
        s.get("initial_length", c.identification.initial_length);
        s.get("initial_mass", c.identification.initial_mass);
        s.get("gate_window", c.identification.gate_window);
        s.get("gate_rel_change", c.identification.gate_rel_change);
        s.get("sample_dt", c.identification.sample_dt);
        s.get("excitation_amplitude", c.identification.excitation_amplitude);
        s.finish();
        if (c.identification.forgetting <= 0.0 || c.identification.forgetting > 1.0)
            throw ConfigError("identification.forgetting", "must be in (0, 1]");
    }

    if (const auto* sj = root.sub("schedule")) {
        if (!sj->is_array()) throw ConfigError("schedule", "expected an array");
        c.schedule.clear();
        for (std::size_t i = 0; i < sj->size(); ++i) {
            Section s((*sj)[i], "schedule[" + std::to_string(i) + "]");
            std::array<double, 3> bp{0.0, 0.0, 0.0};
            s.get("t", bp[0]);
            s.get("length", bp[1]);
            s.get("mass", bp[2]);
            s.finish();
            c.schedule.push_back(bp);
        }
    }

    if (const auto* wj = root.sub("wind")) {
        Section s(*wj, "wind");
        s.get("enabled", c.wind_enabled);
        s.get("start_time", c.wind.start_time);
        s.get_vec3("magnitude", c.wind.magnitude);
        s.get("gust_amplitude", c.wind.gust_amplitude);
        s.get("gust_period", c.wind.gust_period);
        s.get("noise_std", c.wind.noise_std);
        s.get("seed", c.wind.seed);
        s.finish();
        try {
            c.wind.validate();
        } catch (const InvalidInput& e) {
            throw ConfigError("wind", e.what());
        }
    }

    if (const auto* tj = root.sub("tracking")) {
        Section s(*tj, "tracking");
        s.get("quad_mass", c.tracking.quad_mass);
        s.get("load_mass", c.tracking.load_mass);
        s.get("true_cable_length", c.tracking.true_cable_length);
        s.get("policy_cable_lengths", c.tracking.policy_cable_lengths);
        s.get("warmup_s", c.tracking.warmup_s);
        s.get("phase_length_s", c.tracking.phase_length_s);
        s.get("lateral_force_limit", c.tracking.lateral_force_limit);
        s.get("vertical_force_limit", c.tracking.vertical_force_limit);
        s.get("agreement_threshold", c.tracking.agreement_threshold);
        if (const auto* rj = s.sub("reference")) {
            Section r(*rj, "tracking.reference");
            r.get("period", c.tracking.reference.period);
            r.get_vec3("amplitude", c.tracking.reference.amplitude);
            r.get_vec3("phase", c.tracking.reference.phase);
            r.get_vec3("center", c.tracking.reference.center);
            r.finish();
            if (c.tracking.reference.period <= 0.0)
                throw ConfigError("tracking.reference.period", "must be > 0");
        }
        if (const auto* aj = s.sub("agent")) parse_hyper(*aj, "tracking.agent", c.tracking.agent);
        s.finish();
        if (c.tracking.policy_cable_lengths.size() != 2)
            throw ConfigError("tracking.policy_cable_lengths", "expected exactly two lengths");
    }

    root.finish();

    if (c.parallelism < 1) throw ConfigError("parallelism", "must be >= 1");
    if (c.algorithm != "ddpg" && c.algorithm != "qlearn")
        throw ConfigError("algorithm", "expected ddpg or qlearn");
    if (c.plant.length_range.first <= 0.0 ||
        c.plant.length_range.second < c.plant.length_range.first)
        throw ConfigError("plant.length_range", "expected 0 < lo <= hi");
    if (c.plant.mass_range.first <= 0.0 || c.plant.mass_range.second < c.plant.mass_range.first)
        throw ConfigError("plant.mass_range", "expected 0 < lo <= hi");
    if (c.cluster.n_clusters < 1) throw ConfigError("cluster.n_clusters", "must be >= 1");
    if (c.cluster.q <= 1.0) throw ConfigError("cluster.q", "fuzziness must be > 1");
    if (c.cluster.tol <= 0.0) throw ConfigError("cluster.tol", "must be > 0");
    if (c.train_torque_limit <= 0.0) throw ConfigError("train_torque_limit", "must be > 0");
    if (c.action_limit <= 0.0) throw ConfigError("action_limit", "must be > 0");
    return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw MissingArtifact("missing config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("<json>", e.what());
    }
    return from_json(j);
}

nlohmann::json ExperimentConfig::to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["seed"] = seed;
    j["out_dir"] = out_dir;
    j["parallelism"] = parallelism;
    j["cache_dir"] = cache_dir;
    j["algorithm"] = algorithm;
    j["action_limit"] = action_limit;
    j["train_torque_limit"] = train_torque_limit;
    j["inner_dt"] = inner_dt;
    j["plant"] = {{"gravity", plant.gravity},
                  {"length_range", {plant.length_range.first, plant.length_range.second}},
                  {"mass_range", {plant.mass_range.first, plant.mass_range.second}},
                  {"nominal_mass", plant.nominal_mass},
                  {"nominal_length", plant.nominal_length}};
    j["cluster"] = {{"n_clusters", cluster.n_clusters},
                    {"q", cluster.q},
                    {"tol", cluster.tol},
                    {"max_iter", cluster.max_iter},
                    {"fit_grid", {cluster.fit_grid[0], cluster.fit_grid[1]}}};
    j["agent"] = {{"actor_lr", agent.actor_lr},
                  {"critic_lr", agent.critic_lr},
                  {"discount", agent.discount},
                  {"noise_variance", agent.noise_variance},
                  {"episode_length_s", agent.episode_length_s},
                  {"agent_dt", agent.agent_dt},
                  {"replay_capacity", agent.replay_capacity},
                  {"batch_size", agent.batch_size},
                  {"target_tau", agent.target_tau},
                  {"episodes", agent.episodes},
                  {"warmup_steps", agent.warmup_steps},
                  {"warmup_uniform", agent.warmup_uniform},
                  {"hidden1", agent.hidden1},
                  {"hidden2", agent.hidden2},
                  {"l2_weight_decay", agent.l2_weight_decay},
                  {"grad_clip_norm", agent.grad_clip_norm}};
    j["early_stop"] = {{"enabled", early_stop.enabled},
                       {"eval_every", early_stop.eval_every},
                       {"eval_episodes", early_stop.eval_episodes},
                       {"required_passes", early_stop.required_passes},
                       {"min_episodes", early_stop.min_episodes},
                       {"init_jitter", early_stop.init_jitter}};
    j["ensemble"] = {{"mode", ensemble.mode},
                     {"agreement_threshold", ensemble.agreement_threshold}};
    j["evaluation"] = {{"episodes", evaluation.episodes},
                       {"init_jitter", evaluation.init_jitter},
                       {"torque_limit", evaluation.torque_limit},
                       {"duration", evaluation.duration},
                       {"agent_dt", evaluation.agent_dt},
                       {"inner_dt", evaluation.inner_dt},
                       {"angle_band", evaluation.criteria.angle_band},
                       {"hold_window_s", evaluation.criteria.hold_window}};
    j["study"] = {{"grid", {study.grid[0], study.grid[1]}},
                  {"trials", study.trials},
                  {"cluster_counts", study.cluster_counts},
                  {"methods", study.methods}};
    j["identification"] = {{"enabled", identification.enabled},
                           {"forgetting", identification.forgetting},
                           {"initial_covariance", identification.initial_covariance},
                           {"initial_length", identification.initial_length},
                           {"initial_mass", identification.initial_mass},
                           {"gate_window", identification.gate_window},
                           {"gate_rel_change", identification.gate_rel_change},
                           {"sample_dt", identification.sample_dt},
                           {"excitation_amplitude", identification.excitation_amplitude}};
    nlohmann::json sched = nlohmann::json::array();
    for (const auto& bp : schedule)
        sched.push_back({{"t", bp[0]}, {"length", bp[1]}, {"mass", bp[2]}});
    j["schedule"] = sched;
    j["wind"] = {{"enabled", wind_enabled},
                 {"start_time", wind.start_time},
                 {"magnitude", {wind.magnitude[0], wind.magnitude[1], wind.magnitude[2]}},
                 {"gust_amplitude", wind.gust_amplitude},
                 {"gust_period", wind.gust_period},
                 {"noise_std", wind.noise_std},
                 {"seed", wind.seed}};
    j["tracking"] = {
        {"quad_mass", tracking.quad_mass},
        {"load_mass", tracking.load_mass},
        {"true_cable_length", tracking.true_cable_length},
        {"policy_cable_lengths", tracking.policy_cable_lengths},
        {"warmup_s", tracking.warmup_s},
        {"phase_length_s", tracking.phase_length_s},
        {"lateral_force_limit", tracking.lateral_force_limit},
        {"vertical_force_limit", tracking.vertical_force_limit},
        {"agreement_threshold", tracking.agreement_threshold},
        {"reference",
         {{"period", tracking.reference.period},
          {"amplitude",
           {tracking.reference.amplitude[0], tracking.reference.amplitude[1],
            tracking.reference.amplitude[2]}},
          {"phase",
           {tracking.reference.phase[0], tracking.reference.phase[1], tracking.reference.phase[2]}},
          {"center",
           {tracking.reference.center[0], tracking.reference.center[1],
            tracking.reference.center[2]}}}},
        {"agent",
         {{"actor_lr", tracking.agent.actor_lr},
          {"critic_lr", tracking.agent.critic_lr},
          {"discount", tracking.agent.discount},
          {"noise_variance", tracking.agent.noise_variance},
          {"episode_length_s", tracking.agent.episode_length_s},
          {"agent_dt", tracking.agent.agent_dt},
          {"replay_capacity", tracking.agent.replay_capacity},
          {"batch_size", tracking.agent.batch_size},
          {"target_tau", tracking.agent.target_tau},
          {"episodes", tracking.agent.episodes},
          {"warmup_steps", tracking.agent.warmup_steps},
          {"warmup_uniform", tracking.agent.warmup_uniform},
          {"hidden1", tracking.agent.hidden1},
          {"hidden2", tracking.agent.hidden2},
          {"l2_weight_decay", tracking.agent.l2_weight_decay},
          {"grad_clip_norm", tracking.agent.grad_clip_norm}}}};
    return j;
}

ClusterTrainingConfig ExperimentConfig::cluster_training_config() const {
    ClusterTrainingConfig tc;
    tc.hyper = agent;
    tc.action_limit = action_limit;
    tc.train_torque_limit = train_torque_limit;
    tc.inner_dt = inner_dt;
    tc.early_stop = early_stop;
    tc.eval = evaluation;
    tc.parallelism = parallelism;
    tc.cache_dir = cache_dir;
    return tc;
}

FailureStudyConfig ExperimentConfig::failure_study_config() const {
    FailureStudyConfig fc;
    fc.length_range = plant.length_range;
    fc.mass_range = plant.mass_range;
    fc.eval_grid = study.grid;
    fc.fit_grid = cluster.fit_grid;
    fc.cluster_counts = study.cluster_counts;
    fc.methods = study.methods;
    fc.trials = study.trials;
    fc.fcm_q = cluster.q;
    fc.fcm_tol = cluster.tol;
    fc.fcm_max_iter = cluster.max_iter;
    fc.agreement_threshold = ensemble.agreement_threshold;
    fc.training = cluster_training_config();
    fc.eval = evaluation;
    fc.base_seed = seed;
    return fc;
}

TrackingStudyConfig ExperimentConfig::tracking_study_config() const {
    TrackingStudyConfig tc;
    tc.plant.quad_mass = tracking.quad_mass;
    tc.plant.load_mass = tracking.load_mass;
    tc.plant.cable_length = tracking.true_cable_length;
    tc.plant.gravity = plant.gravity;
    tc.policy_cable_lengths = tracking.policy_cable_lengths;
    tc.reference = tracking.reference;
    tc.warmup_s = tracking.warmup_s;
    tc.phase_length_s = tracking.phase_length_s;
    tc.agent_dt = tracking.agent.agent_dt;
    tc.inner_dt = inner_dt;
    tc.wind = wind;
    tc.agreement_threshold = tracking.agreement_threshold;
    tc.fcm_q = cluster.q;
    tc.hyper = tracking.agent;
    tc.env_template.lateral_force_limit = tracking.lateral_force_limit;
    tc.env_template.vertical_force_limit = tracking.vertical_force_limit;
    tc.base_seed = seed;
    tc.parallelism = parallelism;
    tc.cache_dir = cache_dir;
    return tc;
}

ParameterSchedule<PendulumParams> ExperimentConfig::pendulum_schedule() const {
    std::vector<std::pair<double, PendulumParams>> bps;
    if (schedule.empty()) {
        PendulumParams p;
        p.mass = plant.nominal_mass;
        p.length = plant.nominal_length;
        p.gravity = plant.gravity;
        bps.emplace_back(0.0, p);
    } else {
        for (const auto& bp : schedule) {
            PendulumParams p;
            p.length = bp[1];
            p.mass = bp[2];
            p.gravity = plant.gravity;
            p.validate();
            bps.emplace_back(bp[0], p);
        }
    }
    return ParameterSchedule<PendulumParams>(bps);
}

}  // namespace ferl
