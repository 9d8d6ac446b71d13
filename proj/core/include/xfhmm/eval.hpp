#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "xfhmm/features.hpp"
#include "xfhmm/hmm.hpp"
#include "xfhmm/models.hpp"
#include "xfhmm/tuning.hpp"

namespace xfhmm::eval {

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Fall is the positive class. A rate whose class is absent is NaN.
struct Metrics {
    Confusion counts;
    double tpr = 0.0;
    double tnr = 0.0;
    double gmean = 0.0;
    double fdr = 0.0;  // == tpr
    double far = 0.0;  // FP / (FP + TN)
};

Metrics metrics_from_counts(const Confusion& c);
Metrics compute_metrics(const std::vector<bool>& predicted_fall, const std::vector<bool>& truly_fall);

struct EvalConfig {
    int n_states = models::kDefaultStates;
    double omega = tuning::kDefaultOmega;
    std::vector<double> xi_grid = tuning::kDefaultXiGrid;
    int cv_folds = tuning::kDefaultFolds;
    std::uint64_t seed = 0;
    int top_features = 0;  // 0 keeps every feature
    int jobs = 1;
    hmm::TrainConfig train;
};

/// Everything a fold's detector was trained from, recorded for auditing.
struct FoldAudit {
    std::vector<std::string> training_subjects;
    std::size_t training_windows = 0;
    std::size_t training_falls = 0;
    std::size_t outliers = 0;
    bool falls_capped = false;
};

struct FoldResult {
    std::string subject_id;
    Metrics metrics;
    std::optional<double> xi;
    std::optional<tuning::XiSelection> xi_selection;
    FoldAudit audit;
    std::vector<std::string> notes;
};

struct Summary {
    double gmean = 0.0;
    double fdr = 0.0;
    double far = 0.0;
    std::size_t folds_in_gmean = 0;  // folds whose test subject had both classes
};

struct EvalReport {
    models::Variant variant = models::Variant::xhmm3;
    std::vector<FoldResult> folds;
    Summary summary;
};

/// Unweighted means over folds, skipping NaN entries.
Summary summarize(std::span<const FoldResult> folds);

/// Window selections carrying their training-side preprocessing.
struct PreparedFold {
    std::vector<features::WindowFeatures> train;  // input order, after masking and standardizing
    std::vector<features::WindowFeatures> test;
    models::Preprocess pose;      // frame-level preprocessing
    models::Preprocess activity;  // window-level preprocessing
};

/// Fits feature selection (optional) and standardization on the normal
/// windows of `train`, then applies them to both sides.
PreparedFold prepare_fold(std::span<const features::WindowFeatures* const> train,
                          std::span<const features::WindowFeatures* const> test, int top_features,
                          std::uint64_t seed);

struct TrainedFold {
    models::FallDetector detector;
    std::optional<tuning::XiSelection> xi_selection;
    std::size_t outliers = 0;
    std::size_t falls_used = 0;
    std::vector<std::string> notes;
};

/// The per-fold recipe for one variant: outlier split, xi selection and
/// retraining for X-factor variants; thresholds for hmm1/hmm2; supervised
/// variants use every fall in `train`. Unsupervised variants never see falls.
TrainedFold train_detector(models::Variant variant, std::span<const features::WindowFeatures> train,
                           const EvalConfig& config, std::uint64_t seed);

/// One decision per test window. Activity-chain variants decode each
/// temporal run and read the decision at each window's step.
std::vector<bool> classify_windows(const models::FallDetector& detector,
                                   std::span<const features::WindowFeatures> windows);

/// Leave-one-subject-out evaluation.
EvalReport loocv(const features::FeatureDataset& dataset, models::Variant variant, const EvalConfig& config);

inline const std::vector<int> kDefaultInjectionCounts{1, 2, 4, 6, 8, 10, 25, 50};
inline constexpr int kDefaultInjectionRepeats = 10;

struct InjectionPoint {
    int count = 0;
    double mean_gmean = 0.0;
    double std_gmean = 0.0;  // population std over repeats
    double mean_fdr = 0.0;
    double mean_far = 0.0;
    std::vector<double> repeat_gmean;
    bool capped = false;  // some fold had fewer training falls than requested
};

struct InjectionCurve {
    models::Variant variant = models::Variant::hmm3_sup;
    int repeats = kDefaultInjectionRepeats;
    std::vector<InjectionPoint> points;
};

/// Supervised detectors trained on seeded random subsets of the training
/// falls; each repeat is a full LOOCV and its fold-averaged gmean is one
/// sample of the point.
InjectionCurve fall_injection_curve(const features::FeatureDataset& dataset, models::Variant variant,
                                    std::span<const int> counts, int repeats, const EvalConfig& config);

struct DiagnosticRow {
    std::string activity;
    std::size_t outliers = 0;
    std::size_t flagged_as_fall = 0;
    [[nodiscard]] double fraction() const;
};

struct Diagnostic {
    models::Variant variant = models::Variant::hmm1_sup;
    std::vector<DiagnosticRow> rows;  // sorted by activity
};

/// Trains hmm1_sup or hmm2_sup on the non-fall part of every subject's data
/// plus all falls, then classifies the pooled proxy outliers.
Diagnostic outlier_vs_fall_diagnostic(const features::FeatureDataset& dataset, models::Variant variant,
                                      const EvalConfig& config);

// -- Report output ---------------------------------------------------------------

nlohmann::json to_json(const Metrics& m);
nlohmann::json to_json(const EvalReport& report);
nlohmann::json to_json(const InjectionCurve& curve);
nlohmann::json to_json(const Diagnostic& diagnostic);

/// Flat rows: variant,subject,tp,fp,tn,fn,tpr,tnr,gmean,fdr,far,xi
std::string report_csv(std::span<const EvalReport> reports);
/// Plot data: variant,count,mean_gmean,std_gmean,mean_fdr,mean_far,capped
std::string injection_csv(std::span<const InjectionCurve> curves);
/// variant,xi,fold,gmean
std::string xi_trace_csv(models::Variant variant, const tuning::XiSelection& selection);
std::string diagnostic_csv(const Diagnostic& diagnostic);

}  // namespace xfhmm::eval
