#include <nlohmann/json.hpp>

#include "xfhmm/models.hpp"

namespace xfhmm::models {

namespace {

constexpr const char* kFormat = "xfhmm.detector";
constexpr int kVersion = 1;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

nlohmann::json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vec_of(const nlohmann::json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

nlohmann::json rows_json(const Eigen::MatrixXd& m) {
    auto out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Eigen::VectorXd row = m.row(r).transpose();
        out.push_back(vec_json(row));
    }
    return out;
}

Eigen::MatrixXd rows_of(const nlohmann::json& j) {
    if (!j.is_array() || j.empty()) throw Error("detector matrix must be a nonempty array");
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
    for (std::size_t r = 0; r < j.size(); ++r) {
        const auto row = vec_of(j[r]);
        if (row.size() != cols) throw Error("detector matrix is ragged");
        m.row(static_cast<Eigen::Index>(r)) = row.transpose();
    }
    return m;
}

nlohmann::json models_json(const std::vector<hmm::GaussianHmm>& models) {
    auto out = nlohmann::json::array();
    for (const auto& m : models) out.push_back(hmm::to_json(m));
    return out;
}

std::vector<hmm::GaussianHmm> models_of(const nlohmann::json& j) {
    std::vector<hmm::GaussianHmm> out;
    for (const auto& m : j) out.push_back(hmm::model_from_json(m));
    return out;
}

}  // namespace

nlohmann::json to_json(const FallDetector& detector) {
    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["variant"] = std::string(variant_name(detector.variant()));
    j["xi"] = detector.xi() ? nlohmann::json(*detector.xi()) : nlohmann::json(nullptr);
    j["activity_names"] = detector.activity_names();
    j["feature_mask"] = detector.preprocess.mask;
    j["standardizer"] = {{"mean", vec_json(detector.preprocess.standardizer.mean)},
                         {"scale", vec_json(detector.preprocess.standardizer.scale)}};
    nlohmann::json p;
    std::visit(overloaded{
                   [&](const ThresholdSet& s) {
                       p["kind"] = "threshold_set";
                       p["names"] = s.names;
                       p["models"] = models_json(s.models);
                       p["thresholds"] = s.thresholds;
                   },
                   [&](const CompetingSet& s) {
                       p["kind"] = "competing_set";
                       p["names"] = s.names;
                       p["models"] = models_json(s.models);
                   },
                   [&](const ActivityChain& s) {
                       p["kind"] = "activity_chain";
                       p["names"] = s.names;
                       p["chain"] = hmm::to_json(s.chain);
                   },
                   [&](const NearestNeighbour& s) {
                       p["kind"] = "nearest_neighbour";
                       p["k"] = s.k;
                       p["train"] = rows_json(s.train);
                       p["nn_distance"] = vec_json(s.nn_distance);
                   },
               },
               detector.payload());
    j["payload"] = std::move(p);
    return j;
}

FallDetector detector_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", std::string()) != kFormat) throw Error("not a serialized fall detector");
        if (j.value("version", 0) != kVersion) throw Error("unsupported detector format version");
        const auto variant = parse_variant(j.at("variant").get<std::string>());
        std::optional<double> xi;
        if (!j.at("xi").is_null()) xi = j.at("xi").get<double>();
        const auto& p = j.at("payload");
        const auto kind = p.at("kind").get<std::string>();
        Payload payload;
        if (kind == "threshold_set") {
            payload = ThresholdSet{p.at("names").get<std::vector<std::string>>(), models_of(p.at("models")),
                                   p.at("thresholds").get<std::vector<double>>()};
        } else if (kind == "competing_set") {
            payload = CompetingSet{p.at("names").get<std::vector<std::string>>(), models_of(p.at("models"))};
        } else if (kind == "activity_chain") {
            payload = ActivityChain{p.at("names").get<std::vector<std::string>>(), hmm::model_from_json(p.at("chain"))};
        } else if (kind == "nearest_neighbour") {
            payload = NearestNeighbour{rows_of(p.at("train")), vec_of(p.at("nn_distance")), p.at("k").get<int>()};
        } else {
            throw Error("unknown detector payload kind '" + kind + "'");
        }
        FallDetector d(variant, std::move(payload), xi, j.at("activity_names").get<std::vector<std::string>>());
        d.preprocess.mask = j.at("feature_mask").get<features::FeatureMask>();
        d.preprocess.standardizer.mean = vec_of(j.at("standardizer").at("mean"));
        d.preprocess.standardizer.scale = vec_of(j.at("standardizer").at("scale"));
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed detector file: ") + e.what());
    }
}

}  // namespace xfhmm::models
