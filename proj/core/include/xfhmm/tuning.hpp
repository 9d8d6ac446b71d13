#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "xfhmm/features.hpp"
#include "xfhmm/hmm.hpp"
#include "xfhmm/models.hpp"
#include "xfhmm/stats.hpp"

namespace xfhmm::tuning {

inline constexpr double kDefaultOmega = 1.5;
inline constexpr int kDefaultFolds = 3;
inline const std::vector<double> kDefaultXiGrid{1.5, 5.0, 10.0, 100.0};

/// Activities with fewer sequences than this keep all of them.
inline constexpr std::size_t kMinSequencesForRejection = 4;

struct ActivityQuartiles {
    std::string activity;
    stats::Quartiles quartiles;
    std::size_t count = 0;
    bool rejection_applied = false;
};

/// Partition of normal training sequences into non-fall and outliers.
/// Indices refer to the input sequence order.
struct OutlierSplit {
    double omega = kDefaultOmega;
    std::vector<ActivityQuartiles> activities;  // sorted by name
    std::vector<double> scores;                 // log-likelihood of every input under its activity's model
    std::vector<std::size_t> non_fall;
    std::vector<std::size_t> outliers;
    std::vector<std::string> notes;
};

/// The rejection rule on precomputed scores: within each label, a score is
/// an outlier iff it lies strictly beyond Q3 + omega IQR or Q1 - omega IQR.
OutlierSplit split_by_scores(std::span<const std::string> labels, std::span<const double> scores, double omega);

/// Trains one HMM per activity on all of its sequences, scores each sequence
/// under its own activity's model and applies split_by_scores.
OutlierSplit split_outliers(std::span<const ObservationSequence> sequences, double omega, int n_states,
                            const hmm::TrainConfig& config);

struct XiTraceRow {
    double xi = 0.0;
    int fold = 0;
    double gmean = 0.0;
};

struct XiSelection {
    std::vector<double> grid;
    int folds = kDefaultFolds;
    double chosen_xi = 0.0;
    std::vector<double> mean_gmean;  // per grid entry
    std::vector<XiTraceRow> trace;   // grid-major, then fold
};

struct XiConfig {
    std::vector<double> grid = kDefaultXiGrid;
    int folds = kDefaultFolds;
    std::uint64_t seed = 0;
    int n_states = models::kDefaultStates;
    hmm::TrainConfig train;
    int jobs = 1;
};

/// Stratified K-fold assignment of `labels`: each label's items are shuffled
/// with `seed` and dealt round-robin. Throws when a label has fewer than two
/// items, since some fold would then train without that label.
std::vector<int> stratified_folds(std::span<const std::string> labels, int folds, std::uint64_t seed);

/// Internal cross-validation of xi for xhmm1, xhmm2 or xhmm3. `windows` are
/// the normal training windows and `split` indexes them. Pose-level variants
/// score each window's frame sequence; xhmm3 decodes each window's summary
/// vector as a one-step sequence. The chosen xi maximizes mean gmean over
/// folds; ties go to the smaller xi.
XiSelection select_xi(models::Variant variant, std::span<const features::WindowFeatures> windows,
                      const OutlierSplit& split, const XiConfig& config);

/// Activity-level training material from a set of normal windows.
models::ActivityLevelData activity_level_data(std::span<const features::WindowFeatures* const> windows,
                                              const std::vector<std::string>& activities);

}  // namespace xfhmm::tuning
