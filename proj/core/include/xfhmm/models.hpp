#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xfhmm/features.hpp"
#include "xfhmm/hmm.hpp"

namespace xfhmm::models {

enum class Variant { hmm1, hmm2, xhmm1, xhmm2, xhmm3, hmm_normout, hmm1_sup, hmm2_sup, hmm3_sup, ocnn };

std::string_view variant_name(Variant v);
Variant parse_variant(std::string_view name);
std::vector<Variant> all_variants();

[[nodiscard]] bool is_xfactor(Variant v);      // xhmm1, xhmm2, xhmm3
[[nodiscard]] bool is_supervised(Variant v);   // hmm*_sup
[[nodiscard]] bool uses_window_vectors(Variant v);  // xhmm3, hmm3_sup, ocnn

inline constexpr int kDefaultStates = 4;
inline constexpr double kNovelSelfTransition = 0.95;
inline constexpr double kNormalToNovel = 0.05;

/// Activity-name-ordered groups of training sequences.
struct LabelledGroup {
    std::string label;
    std::vector<ObservationSequence> sequences;
};
using ActivityGroups = std::vector<LabelledGroup>;

/// Groups sequences by label (sorted); fall sequences are rejected.
ActivityGroups group_by_label(std::span<const ObservationSequence> sequences);

// -- Detector payloads ----------------------------------------------------------

/// HMM1 (one model per activity) or HMM2 (one pooled model) with a
/// negative-log-likelihood threshold per model.
struct ThresholdSet {
    std::vector<std::string> names;
    std::vector<hmm::GaussianHmm> models;
    std::vector<double> thresholds;
};

/// Argmax over competing models. The last model represents falls (an
/// X-factor alternate, an outlier model or a model fitted to real falls).
struct CompetingSet {
    std::vector<std::string> names;  // last entry is "fall"
    std::vector<hmm::GaussianHmm> models;
};

/// One state per activity plus a final novel (fall) state, decoded by Viterbi.
struct ActivityChain {
    std::vector<std::string> names;  // state order; last entry is "fall"
    hmm::GaussianHmm chain;
};

/// One-class 1-NN data description.
struct NearestNeighbour {
    Eigen::MatrixXd train;
    Eigen::VectorXd nn_distance;  // each training point's distance to its nearest other training point
    int k = 1;
};

using Payload = std::variant<ThresholdSet, CompetingSet, ActivityChain, NearestNeighbour>;

struct Verdict {
    bool is_fall = false;
    std::string winning_label;
    std::map<std::string, double> per_model_loglik;  // empty for chain and nearest-neighbour variants
    std::vector<int> decoded_path;                   // chain variants only
    std::vector<bool> fall_steps;                    // per-row decisions (chain and nearest-neighbour variants)
};

/// Feature-space preprocessing a detector expects its inputs to have gone
/// through; carried for serialization, not applied by classify().
struct Preprocess {
    features::FeatureMask mask;
    features::Standardizer standardizer;
};

class FallDetector {
public:
    /// Throws unless the payload and xi match the variant: ThresholdSet for
    /// hmm1/hmm2, CompetingSet for xhmm1/xhmm2/hmm_normout/hmm1_sup/hmm2_sup,
    /// ActivityChain for xhmm3/hmm3_sup, NearestNeighbour for ocnn; xi
    /// (>= 1) present exactly for X-factor variants.
    FallDetector(Variant variant, Payload payload, std::optional<double> xi, std::vector<std::string> activity_names);

    [[nodiscard]] Variant variant() const { return variant_; }
    [[nodiscard]] std::optional<double> xi() const { return xi_; }
    [[nodiscard]] const std::vector<std::string>& activity_names() const { return activity_names_; }
    [[nodiscard]] const Payload& payload() const { return payload_; }

    /// Deterministic, read-only classification of one observation sequence.
    [[nodiscard]] Verdict classify(const ObservationSequence& seq) const;
    [[nodiscard]] Verdict classify(const Eigen::MatrixXd& obs) const;

    Preprocess preprocess;

private:
    Variant variant_;
    Payload payload_;
    std::optional<double> xi_;
    std::vector<std::string> activity_names_;
};

// -- Pose-level detectors -------------------------------------------------------

std::vector<hmm::GaussianHmm> train_activity_models(const ActivityGroups& groups, int n_states,
                                                    const hmm::TrainConfig& config);

/// max over the sequences of -log P(O | model).
double max_nll(const hmm::GaussianHmm& model, std::span<const ObservationSequence> sequences);

/// HMM1: per-activity models trained on the full normal data; fall iff the
/// NLL exceeds every activity's threshold.
FallDetector train_hmm1(const ActivityGroups& groups, int n_states, const hmm::TrainConfig& config);
FallDetector make_hmm1(const ActivityGroups& groups, std::vector<hmm::GaussianHmm> models);

/// HMM2: one pooled model with a single threshold.
FallDetector train_hmm2(std::span<const ObservationSequence> normal, int n_states, const hmm::TrainConfig& config);
FallDetector make_hmm2(std::span<const ObservationSequence> normal, hmm::GaussianHmm pooled);

/// Element-wise average of equally shaped models, with averaged variances
/// multiplied by xi.
hmm::GaussianHmm xfactor_model(std::span<const hmm::GaussianHmm> models, double xi);

FallDetector build_xhmm1(std::vector<std::string> activities, std::vector<hmm::GaussianHmm> models, double xi);
FallDetector build_xhmm2(hmm::GaussianHmm pooled, double xi);

FallDetector train_hmm_normout(std::span<const ObservationSequence> non_fall,
                               std::span<const ObservationSequence> outliers, int n_states,
                               const hmm::TrainConfig& config);

FallDetector build_hmm1_sup(std::vector<std::string> activities, std::vector<hmm::GaussianHmm> models,
                            hmm::GaussianHmm fall_model);
FallDetector build_hmm2_sup(hmm::GaussianHmm pooled, hmm::GaussianHmm fall_model);

/// hmm1_sup / hmm2_sup from sequences. Throws when `falls` is empty.
FallDetector train_supervised(Variant variant, const ActivityGroups& normal, std::span<const ObservationSequence> falls,
                              int n_states, const hmm::TrainConfig& config);

// -- Activity-level detectors -----------------------------------------------------

/// Window-level training material for the activity chain.
struct ActivityLevelData {
    std::vector<std::string> activities;   // state order
    std::vector<Eigen::MatrixXd> vectors;  // per activity, one row per window
    Eigen::MatrixXd transitions;           // empirical, row-stochastic, activities x activities
};

/// Row-normalized counts of consecutive (normal, normal) window-label pairs
/// within runs. An activity never followed by another window keeps a pure
/// self-transition.
Eigen::MatrixXd empirical_transitions(std::span<const features::ActivityRun> runs,
                                      std::span<const features::WindowFeatures* const> windows,
                                      const std::vector<std::string>& activities);

/// Appends the novel state: normal rows are scaled by 0.95 and gain 0.05
/// toward the novel state; the novel row keeps 0.95 on itself and spreads
/// 0.05 uniformly over the activities.
Eigen::MatrixXd augment_transitions(const Eigen::MatrixXd& empirical);

/// Per-activity population moments, clamped to [var_floor, var_ceil].
void activity_moments(const Eigen::MatrixXd& rows, double var_floor, double var_ceil, Eigen::RowVectorXd& mean,
                      Eigen::RowVectorXd& var);

FallDetector build_xhmm3(const ActivityLevelData& data, double xi, double var_floor = 0.01, double var_ceil = 100.0);

/// hmm3_sup: the novel state's moments come from real fall windows.
FallDetector build_hmm3_sup(const ActivityLevelData& data, const Eigen::MatrixXd& fall_vectors,
                            double var_floor = 0.01, double var_ceil = 100.0);

FallDetector train_ocnn(const Eigen::MatrixXd& normal_vectors, int k = 1);

// -- Serialization ----------------------------------------------------------------

nlohmann::json to_json(const FallDetector& detector);
FallDetector detector_from_json(const nlohmann::json& j);

}  // namespace xfhmm::models
