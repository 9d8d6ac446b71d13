#include <nlohmann/json.hpp>

#include "xfhmm/hmm.hpp"

namespace xfhmm::hmm {

namespace {

constexpr const char* kFormat = "xfhmm.gaussian_hmm";
constexpr int kVersion = 1;

nlohmann::json rows_of(const Eigen::MatrixXd& m) {
    auto out = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

Eigen::MatrixXd matrix_of(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.empty()) throw Error(std::string("model field '") + what + "' must be a nonempty array");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw Error(std::string("model field '") + what + "' is ragged");
        }
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace

nlohmann::json to_json(const GaussianHmm& model) {
    nlohmann::json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["n_states"] = model.n_states();
    j["dim"] = model.dim();
    j["prior"] = std::vector<double>(model.prior.data(), model.prior.data() + model.prior.size());
    j["trans"] = rows_of(model.trans);
    j["means"] = rows_of(model.means);
    j["diag_covs"] = rows_of(model.vars);
    return j;
}

GaussianHmm model_from_json(const nlohmann::json& j) {
    if (j.value("format", std::string()) != kFormat) throw Error("not a serialized Gaussian HMM");
    if (j.value("version", 0) != kVersion) throw Error("unsupported Gaussian HMM format version");
    GaussianHmm m;
    const auto prior = j.at("prior").get<std::vector<double>>();
    m.prior = Eigen::Map<const Eigen::VectorXd>(prior.data(), static_cast<Eigen::Index>(prior.size()));
    m.trans = matrix_of(j.at("trans"), "trans");
    m.means = matrix_of(j.at("means"), "means");
    m.vars = matrix_of(j.at("diag_covs"), "diag_covs");
    if (j.at("n_states").get<int>() != m.n_states() || j.at("dim").get<int>() != m.dim()) {
        throw Error("serialized model shape does not match its header");
    }
    m.validate();
    return m;
}

}  // namespace xfhmm::hmm
