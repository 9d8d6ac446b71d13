#include "xfhmm/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>

namespace xfhmm::models {

namespace {

const std::string kFall(kFallLabel);

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_same_shape(std::span<const hmm::GaussianHmm> models) {
    if (models.empty()) throw Error("no models to combine");
    for (const auto& m : models) {
        if (m.n_states() != models.front().n_states() || m.dim() != models.front().dim()) {
            throw Error("models differ in state count or dimension");
        }
    }
}

std::vector<ObservationSequence> flatten(const ActivityGroups& groups) {
    std::vector<ObservationSequence> out;
    for (const auto& g : groups) out.insert(out.end(), g.sequences.begin(), g.sequences.end());
    return out;
}

}  // namespace

std::string_view variant_name(Variant v) {
    switch (v) {
        case Variant::hmm1: return "hmm1";
        case Variant::hmm2: return "hmm2";
        case Variant::xhmm1: return "xhmm1";
        case Variant::xhmm2: return "xhmm2";
        case Variant::xhmm3: return "xhmm3";
        case Variant::hmm_normout: return "hmm_normout";
        case Variant::hmm1_sup: return "hmm1_sup";
        case Variant::hmm2_sup: return "hmm2_sup";
        case Variant::hmm3_sup: return "hmm3_sup";
        case Variant::ocnn: return "ocnn";
    }
    return "?";
}

std::vector<Variant> all_variants() {
    return {Variant::hmm1,        Variant::hmm2,     Variant::xhmm1,    Variant::xhmm2,    Variant::xhmm3,
            Variant::hmm_normout, Variant::hmm1_sup, Variant::hmm2_sup, Variant::hmm3_sup, Variant::ocnn};
}

Variant parse_variant(std::string_view name) {
    for (auto v : all_variants()) {
        if (variant_name(v) == name) return v;
    }
    throw Error("unknown detector variant '" + std::string(name) + "'");
}

bool is_xfactor(Variant v) { return v == Variant::xhmm1 || v == Variant::xhmm2 || v == Variant::xhmm3; }

bool is_supervised(Variant v) { return v == Variant::hmm1_sup || v == Variant::hmm2_sup || v == Variant::hmm3_sup; }

bool uses_window_vectors(Variant v) { return v == Variant::xhmm3 || v == Variant::hmm3_sup || v == Variant::ocnn; }

ActivityGroups group_by_label(std::span<const ObservationSequence> sequences) {
    std::set<std::string> labels;
    for (const auto& s : sequences) {
        if (s.is_fall()) throw Error("normal-activity groups cannot contain fall sequences");
        labels.insert(s.label);
    }
    ActivityGroups groups;
    for (const auto& l : labels) groups.push_back({l, {}});
    for (const auto& s : sequences) {
        const auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.label == s.label; });
        it->sequences.push_back(s);
    }
    return groups;
}

// ---------------------------------------------------------------------------

FallDetector::FallDetector(Variant variant, Payload payload, std::optional<double> xi,
                           std::vector<std::string> activity_names)
    : variant_(variant), payload_(std::move(payload)), xi_(xi), activity_names_(std::move(activity_names)) {
    const bool payload_ok = std::visit(
        overloaded{
            [&](const ThresholdSet& p) {
                return (variant == Variant::hmm1 || variant == Variant::hmm2) && !p.models.empty() &&
                       p.models.size() == p.thresholds.size() && p.models.size() == p.names.size();
            },
            [&](const CompetingSet& p) {
                return (variant == Variant::xhmm1 || variant == Variant::xhmm2 || variant == Variant::hmm_normout ||
                        variant == Variant::hmm1_sup || variant == Variant::hmm2_sup) &&
                       p.models.size() >= 2 && p.models.size() == p.names.size();
            },
            [&](const ActivityChain& p) {
                return (variant == Variant::xhmm3 || variant == Variant::hmm3_sup) &&
                       static_cast<int>(p.names.size()) == p.chain.n_states() && p.chain.n_states() >= 2;
            },
            [&](const NearestNeighbour& p) {
                return variant == Variant::ocnn && p.train.rows() >= 2 && p.nn_distance.size() == p.train.rows();
            },
        },
        payload_);
    if (!payload_ok) throw Error("payload does not match detector variant " + std::string(variant_name(variant)));
    if (is_xfactor(variant) != xi.has_value()) {
        throw Error("xi must be set exactly for X-factor variants (" + std::string(variant_name(variant)) + ")");
    }
    if (xi && !(*xi >= 1.0)) throw Error("xi must be at least 1");
}

Verdict FallDetector::classify(const ObservationSequence& seq) const { return classify(seq.obs); }

Verdict FallDetector::classify(const Eigen::MatrixXd& obs) const {
    Verdict v;
    std::visit(
        overloaded{
            [&](const ThresholdSet& p) {
                bool above_all = true;
                std::size_t best = 0;
                double best_ll = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < p.models.size(); ++i) {
                    const double ll = hmm::log_likelihood(p.models[i], obs);
                    v.per_model_loglik[p.names[i]] = ll;
                    above_all = above_all && (-ll > p.thresholds[i]);
                    if (ll > best_ll) {
                        best_ll = ll;
                        best = i;
                    }
                }
                v.is_fall = above_all;
                v.winning_label = above_all ? kFall : p.names[best];
            },
            [&](const CompetingSet& p) {
                std::size_t best = 0;
                double best_ll = -std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < p.models.size(); ++i) {
                    const double ll = hmm::log_likelihood(p.models[i], obs);
                    v.per_model_loglik[p.names[i]] = ll;
                    if (i == 0 || ll > best_ll) {
                        best_ll = ll;
                        best = i;
                    }
                }
                v.is_fall = best + 1 == p.models.size();
                v.winning_label = v.is_fall ? kFall : p.names[best];
            },
            [&](const ActivityChain& p) {
                auto decoded = hmm::viterbi(p.chain, obs);
                const int novel = p.chain.n_states() - 1;
                v.fall_steps.reserve(decoded.path.size());
                for (int s : decoded.path) v.fall_steps.push_back(s == novel);
                v.is_fall = std::find(decoded.path.begin(), decoded.path.end(), novel) != decoded.path.end();
                v.winning_label = v.is_fall ? kFall : p.names[static_cast<std::size_t>(decoded.path.back())];
                v.decoded_path = std::move(decoded.path);
            },
            [&](const NearestNeighbour& p) {
                if (obs.cols() != p.train.cols()) throw Error("observation dimension does not match the OCNN training data");
                for (Eigen::Index r = 0; r < obs.rows(); ++r) {
                    const Eigen::VectorXd d2 = (p.train.rowwise() - obs.row(r)).rowwise().squaredNorm();
                    Eigen::Index nearest = 0;
                    const double d = std::sqrt(d2.minCoeff(&nearest));
                    // Accept iff the test point is no farther from its nearest
                    // neighbour than that neighbour is from its own.
                    v.fall_steps.push_back(d > p.nn_distance(nearest));
                }
                v.is_fall = std::find(v.fall_steps.begin(), v.fall_steps.end(), true) != v.fall_steps.end();
                v.winning_label = v.is_fall ? kFall : std::string("normal");
            },
        },
        payload_);
    return v;
}

// ---------------------------------------------------------------------------

std::vector<hmm::GaussianHmm> train_activity_models(const ActivityGroups& groups, int n_states,
                                                    const hmm::TrainConfig& config) {
    std::vector<hmm::GaussianHmm> out;
    for (const auto& g : groups) {
        if (g.sequences.empty()) throw Error("activity '" + g.label + "' has no training sequences");
        out.push_back(hmm::train(g.sequences, n_states, config).model);
    }
    return out;
}

double max_nll(const hmm::GaussianHmm& model, std::span<const ObservationSequence> sequences) {
    if (sequences.empty()) throw Error("threshold needs at least one training sequence");
    double worst = -std::numeric_limits<double>::infinity();
    for (const auto& s : sequences) worst = std::max(worst, -hmm::log_likelihood(model, s));
    return worst;
}

FallDetector make_hmm1(const ActivityGroups& groups, std::vector<hmm::GaussianHmm> models) {
    if (groups.empty() || groups.size() != models.size()) throw Error("HMM1 needs one model per activity");
    ThresholdSet p;
    std::vector<std::string> names;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        names.push_back(groups[i].label);
        p.thresholds.push_back(max_nll(models[i], groups[i].sequences));
    }
    p.names = names;
    p.models = std::move(models);
    return FallDetector(Variant::hmm1, std::move(p), std::nullopt, std::move(names));
}

FallDetector train_hmm1(const ActivityGroups& groups, int n_states, const hmm::TrainConfig& config) {
    if (groups.empty()) throw Error("HMM1 needs at least one activity");
    return make_hmm1(groups, train_activity_models(groups, n_states, config));
}

FallDetector make_hmm2(std::span<const ObservationSequence> normal, hmm::GaussianHmm pooled) {
    ThresholdSet p;
    p.names = {"normal"};
    p.thresholds = {max_nll(pooled, normal)};
    p.models = {std::move(pooled)};
    return FallDetector(Variant::hmm2, std::move(p), std::nullopt, {"normal"});
}

FallDetector train_hmm2(std::span<const ObservationSequence> normal, int n_states, const hmm::TrainConfig& config) {
    if (normal.empty()) throw Error("HMM2 needs at least one normal sequence");
    return make_hmm2(normal, hmm::train(normal, n_states, config).model);
}

hmm::GaussianHmm xfactor_model(std::span<const hmm::GaussianHmm> models, double xi) {
    require_same_shape(models);
    if (!(xi >= 1.0)) throw Error("xi must be at least 1");
    const double k = static_cast<double>(models.size());
    hmm::GaussianHmm out = models.front();
    for (std::size_t i = 1; i < models.size(); ++i) {
        out.prior += models[i].prior;
        out.trans += models[i].trans;
        out.means += models[i].means;
        out.vars += models[i].vars;
    }
    out.prior /= k;
    out.trans /= k;
    out.means /= k;
    out.vars *= xi / k;
    return out;
}

FallDetector build_xhmm1(std::vector<std::string> activities, std::vector<hmm::GaussianHmm> models, double xi) {
    if (activities.size() != models.size()) throw Error("XHMM1 needs one model per activity");
    CompetingSet p;
    p.names = activities;
    p.names.push_back(kFall);
    p.models = models;
    p.models.push_back(xfactor_model(models, xi));
    return FallDetector(Variant::xhmm1, std::move(p), xi, std::move(activities));
}

FallDetector build_xhmm2(hmm::GaussianHmm pooled, double xi) {
    CompetingSet p;
    p.names = {"normal", kFall};
    const std::array<hmm::GaussianHmm, 1> one{pooled};
    p.models = {pooled, xfactor_model(one, xi)};
    return FallDetector(Variant::xhmm2, std::move(p), xi, {"normal"});
}

FallDetector train_hmm_normout(std::span<const ObservationSequence> non_fall,
                               std::span<const ObservationSequence> outliers, int n_states,
                               const hmm::TrainConfig& config) {
    if (non_fall.empty()) throw Error("HMM_NormOut needs non-fall training sequences");
    if (outliers.empty()) {
        throw Error("HMM_NormOut needs at least one outlier sequence; lower the whisker multiplier omega");
    }
    CompetingSet p;
    p.names = {"normal", kFall};
    p.models = {hmm::train(non_fall, n_states, config).model, hmm::train(outliers, n_states, config).model};
    return FallDetector(Variant::hmm_normout, std::move(p), std::nullopt, {"normal"});
}

FallDetector build_hmm1_sup(std::vector<std::string> activities, std::vector<hmm::GaussianHmm> models,
                            hmm::GaussianHmm fall_model) {
    if (activities.size() != models.size() || models.empty()) throw Error("HMM1_sup needs one model per activity");
    CompetingSet p;
    p.names = activities;
    p.names.push_back(kFall);
    p.models = std::move(models);
    p.models.push_back(std::move(fall_model));
    return FallDetector(Variant::hmm1_sup, std::move(p), std::nullopt, std::move(activities));
}

FallDetector build_hmm2_sup(hmm::GaussianHmm pooled, hmm::GaussianHmm fall_model) {
    CompetingSet p;
    p.names = {"normal", kFall};
    p.models = {std::move(pooled), std::move(fall_model)};
    return FallDetector(Variant::hmm2_sup, std::move(p), std::nullopt, {"normal"});
}

FallDetector train_supervised(Variant variant, const ActivityGroups& normal, std::span<const ObservationSequence> falls,
                              int n_states, const hmm::TrainConfig& config) {
    if (falls.empty()) throw Error("supervised detectors cannot be trained without fall sequences");
    if (normal.empty()) throw Error("supervised detectors need normal-activity sequences");
    auto fall_model = hmm::train(falls, n_states, config).model;
    switch (variant) {
        case Variant::hmm1_sup: {
            std::vector<std::string> names;
            for (const auto& g : normal) names.push_back(g.label);
            return build_hmm1_sup(std::move(names), train_activity_models(normal, n_states, config), std::move(fall_model));
        }
        case Variant::hmm2_sup: {
            const auto pooled = flatten(normal);
            return build_hmm2_sup(hmm::train(pooled, n_states, config).model, std::move(fall_model));
        }
        default:
            throw Error("train_supervised handles hmm1_sup and hmm2_sup; use build_hmm3_sup for the activity chain");
    }
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd empirical_transitions(std::span<const features::ActivityRun> runs,
                                      std::span<const features::WindowFeatures* const> windows,
                                      const std::vector<std::string>& activities) {
    const auto n = static_cast<Eigen::Index>(activities.size());
    auto state_of = [&](const std::string& label) -> Eigen::Index {
        const auto it = std::find(activities.begin(), activities.end(), label);
        return it == activities.end() ? -1 : static_cast<Eigen::Index>(it - activities.begin());
    };
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(n, n);
    for (const auto& run : runs) {
        for (std::size_t i = 0; i + 1 < run.members.size(); ++i) {
            const auto a = state_of(windows[run.members[i]]->label);
            const auto b = state_of(windows[run.members[i + 1]]->label);
            if (a >= 0 && b >= 0) counts(a, b) += 1.0;
        }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double total = counts.row(i).sum();
        if (total > 0.0) {
            counts.row(i) /= total;
        } else {
            counts.row(i).setZero();
            counts(i, i) = 1.0;
        }
    }
    return counts;
}

Eigen::MatrixXd augment_transitions(const Eigen::MatrixXd& empirical) {
    const auto n = empirical.rows();
    if (n < 1 || empirical.cols() != n) throw Error("empirical transition matrix must be square and nonempty");
    Eigen::MatrixXd a(n + 1, n + 1);
    a.topLeftCorner(n, n) = empirical * kNovelSelfTransition;
    a.topRightCorner(n, 1).setConstant(kNormalToNovel);
    a.bottomLeftCorner(1, n).setConstant((1.0 - kNovelSelfTransition) / static_cast<double>(n));
    a(n, n) = kNovelSelfTransition;
    return a;
}

void activity_moments(const Eigen::MatrixXd& rows, double var_floor, double var_ceil, Eigen::RowVectorXd& mean,
                      Eigen::RowVectorXd& var) {
    if (rows.rows() == 0) throw Error("moments of an empty sample");
    mean = rows.colwise().mean();
    var = (rows.rowwise() - mean).array().square().colwise().mean();
    var = var.cwiseMax(var_floor).cwiseMin(var_ceil);
}

namespace {

FallDetector build_chain(Variant variant, const ActivityLevelData& data, const Eigen::RowVectorXd& novel_mean,
                         const Eigen::RowVectorXd& novel_var, std::optional<double> xi, double var_floor,
                         double var_ceil) {
    const auto n = static_cast<Eigen::Index>(data.activities.size());
    const auto d = novel_mean.size();
    hmm::GaussianHmm chain;
    chain.prior = Eigen::VectorXd::Constant(n + 1, 1.0 / static_cast<double>(n + 1));
    chain.trans = augment_transitions(data.transitions);
    chain.means.resize(n + 1, d);
    chain.vars.resize(n + 1, d);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::RowVectorXd mu, var;
        activity_moments(data.vectors[static_cast<std::size_t>(j)], var_floor, var_ceil, mu, var);
        chain.means.row(j) = mu;
        chain.vars.row(j) = var;
    }
    chain.means.row(n) = novel_mean;
    chain.vars.row(n) = novel_var;
    chain.validate(1e-12);
    ActivityChain p;
    p.names = data.activities;
    p.names.push_back(kFall);
    p.chain = std::move(chain);
    return FallDetector(variant, std::move(p), xi, data.activities);
}

void check_activity_data(const ActivityLevelData& data) {
    const auto n = data.activities.size();
    if (n == 0) throw Error("activity chain needs at least one activity");
    if (data.vectors.size() != n) throw Error("activity chain needs one vector block per activity");
    if (data.transitions.rows() != static_cast<Eigen::Index>(n) || data.transitions.cols() != static_cast<Eigen::Index>(n)) {
        throw Error("empirical transition matrix does not match the activity count");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (data.vectors[i].rows() < 2) {
            throw Error("activity '" + data.activities[i] + "' has fewer than 2 windows; its moments are undefined");
        }
    }
}

}  // namespace

FallDetector build_xhmm3(const ActivityLevelData& data, double xi, double var_floor, double var_ceil) {
    check_activity_data(data);
    if (!(xi >= 1.0)) throw Error("xi must be at least 1");
    const auto d = data.vectors.front().cols();
    Eigen::RowVectorXd mean_sum = Eigen::RowVectorXd::Zero(d), var_sum = Eigen::RowVectorXd::Zero(d);
    for (const auto& rows : data.vectors) {
        Eigen::RowVectorXd mu, var;
        activity_moments(rows, var_floor, var_ceil, mu, var);
        mean_sum += mu;
        var_sum += var;
    }
    const double n = static_cast<double>(data.vectors.size());
    return build_chain(Variant::xhmm3, data, mean_sum / n, var_sum * (xi / n), xi, var_floor, var_ceil);
}

FallDetector build_hmm3_sup(const ActivityLevelData& data, const Eigen::MatrixXd& fall_vectors, double var_floor,
                            double var_ceil) {
    check_activity_data(data);
    if (fall_vectors.rows() == 0) throw Error("supervised detectors cannot be trained without fall windows");
    Eigen::RowVectorXd mu, var;
    activity_moments(fall_vectors, var_floor, var_ceil, mu, var);
    return build_chain(Variant::hmm3_sup, data, mu, var, std::nullopt, var_floor, var_ceil);
}

FallDetector train_ocnn(const Eigen::MatrixXd& normal_vectors, int k) {
    if (k != 1) throw Error("OCNN supports k = 1 only");
    if (normal_vectors.rows() < 2) throw Error("OCNN needs at least two training vectors");
    NearestNeighbour p;
    p.train = normal_vectors;
    p.k = k;
    p.nn_distance.resize(normal_vectors.rows());
    for (Eigen::Index i = 0; i < normal_vectors.rows(); ++i) {
        Eigen::VectorXd d2 = (normal_vectors.rowwise() - normal_vectors.row(i)).rowwise().squaredNorm();
        d2(i) = std::numeric_limits<double>::infinity();
        p.nn_distance(i) = std::sqrt(d2.minCoeff());
    }
    return FallDetector(Variant::ocnn, std::move(p), std::nullopt, {"normal"});
}

}  // namespace xfhmm::models
