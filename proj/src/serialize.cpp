#include "ferl/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ferl/common.hpp"

namespace ferl {

namespace {

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
    return arr;
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& arr, Eigen::Index rows, Eigen::Index cols) {
    require(arr.is_array() && static_cast<Eigen::Index>(arr.size()) == rows * cols,
            "serialize: matrix size mismatch");
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = arr[k++].get<double>();
    return m;
}

nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& arr) {
    require(arr.is_array(), "serialize: expected array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = arr[i].get<double>();
    return v;
}

}  // namespace

nlohmann::json cluster_model_to_json(const ClusterModel& model) {
    nlohmann::json j;
    j["version"] = 1;
    j["dim"] = model.dim();
    j["n_clusters"] = model.n_clusters();
    j["q"] = model.fuzziness();
    j["normalization"] = {{"lo", vector_to_json(model.norm_lo())},
                          {"hi", vector_to_json(model.norm_hi())}};
    j["centers"] = matrix_to_json(model.centers());
    return j;
}

ClusterModel cluster_model_from_json(const nlohmann::json& j) {
    require(j.value("version", 0) == 1, "cluster model: unsupported version");
    const int dim = j.at("dim").get<int>();
    const int n = j.at("n_clusters").get<int>();
    return ClusterModel(matrix_from_json(j.at("centers"), n, dim), j.at("q").get<double>(),
                        vector_from_json(j.at("normalization").at("lo")),
                        vector_from_json(j.at("normalization").at("hi")));
}

nlohmann::json policy_to_json(const Policy& policy) {
    nlohmann::json j;
    j["version"] = 1;
    j["kind"] = policy.kind == Policy::Kind::actor_net ? "actor_net" : "q_table";
    j["obs_spec"] = policy.obs_spec;
    j["action_low"] = vector_to_json(policy.action_low);
    j["action_high"] = vector_to_json(policy.action_high);
    if (policy.kind == Policy::Kind::actor_net) {
        nlohmann::json layers = nlohmann::json::array();
        for (const auto& layer : policy.actor.layers()) {
            layers.push_back({{"rows", layer.w.rows()},
                              {"cols", layer.w.cols()},
                              {"activation", activation_name(layer.act)},
                              {"w", matrix_to_json(layer.w)},
                              {"b", vector_to_json(layer.b)}});
        }
        j["actor"] = {{"layers", layers}};
    } else {
        j["q_table"] = {{"theta_bins", policy.qspec.theta_bins},
                        {"omega_bins", policy.qspec.omega_bins},
                        {"omega_max", policy.qspec.omega_max},
                        {"action_levels", vector_to_json(policy.qspec.action_levels)},
                        {"values", matrix_to_json(policy.qtable)}};
    }
    return j;
}

Policy policy_from_json(const nlohmann::json& j) {
    require(j.value("version", 0) == 1, "policy: unsupported version");
    Policy p;
    const std::string kind = j.at("kind").get<std::string>();
    p.obs_spec = j.at("obs_spec").get<std::string>();
    p.action_low = vector_from_json(j.at("action_low"));
    p.action_high = vector_from_json(j.at("action_high"));
    if (kind == "actor_net") {
        p.kind = Policy::Kind::actor_net;
        std::vector<DenseLayer> layers;
        for (const auto& lj : j.at("actor").at("layers")) {
            DenseLayer layer;
            const auto rows = lj.at("rows").get<Eigen::Index>();
            const auto cols = lj.at("cols").get<Eigen::Index>();
            layer.w = matrix_from_json(lj.at("w"), rows, cols);
            layer.b = vector_from_json(lj.at("b"));
            layer.act = activation_from_name(lj.at("activation").get<std::string>());
            layers.push_back(std::move(layer));
        }
        p.actor = DenseNet(std::move(layers));
    } else if (kind == "q_table") {
        p.kind = Policy::Kind::q_table;
        const auto& qt = j.at("q_table");
        p.qspec.theta_bins = qt.at("theta_bins").get<int>();
        p.qspec.omega_bins = qt.at("omega_bins").get<int>();
        p.qspec.omega_max = qt.at("omega_max").get<double>();
        p.qspec.action_levels = vector_from_json(qt.at("action_levels"));
        p.qtable = matrix_from_json(qt.at("values"), p.qspec.n_states(), p.qspec.n_actions());
    } else {
        throw InvalidInput("policy: unknown kind " + kind);
    }
    return p;
}

void save_json(const nlohmann::json& j, const std::string& path) {
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    require(out.good(), "serialize: cannot open for write: " + path);
    out << j.dump(2) << '\n';
}

nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw MissingArtifact("missing artifact: " + path);
    nlohmann::json j;
    in >> j;
    return j;
}

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(const std::string& bytes) {
    std::ostringstream os;
    os << std::hex << fnv1a(bytes);
    return os.str();
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw MissingArtifact("missing artifact: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return hash_hex(ss.str());
}

}  // namespace ferl
