#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "xfhmm/features.hpp"
#include "xfhmm/hmm.hpp"

namespace xfhmm::synthetic {

/// Generator for labelled feature datasets with known ground truth.
///
/// Each subject follows a Markov chain over activities, one window per step.
/// A window's frames are drawn from its activity's archetype HMM. Fall
/// windows use the current activity's archetype with variances multiplied by
/// fall_variance_scale. Artifact windows keep their activity label but use
/// artifact_variance_scale; they stand in for corrupt segments in real
/// recordings.
struct SyntheticConfig {
    std::vector<std::string> activity_names;
    std::vector<hmm::GaussianHmm> archetypes;  // one per activity, equal dimension
    Eigen::MatrixXd activity_transitions;      // activities x activities, row-stochastic
    int subjects = 5;
    int windows_per_subject = 300;
    int frames_per_window = 8;
    double fall_prevalence = 0.05;
    double fall_variance_scale = 6.0;
    double artifact_rate = 0.03;
    double artifact_variance_scale = 10.0;
    double subject_offset_sd = 0.1;

    /// Throws on shape mismatches, non-simplex rows or out-of-range rates.
    void validate() const;
};

/// Deterministic archetype set: `activities` activities with `states` states
/// each over `dim` features, and sticky activity transitions with mean run
/// length `mean_run`.
SyntheticConfig default_config(int activities = 3, int dim = 6, int states = 2, double mean_run = 20.0);

/// Window summary used for activity-level models: per-feature mean of the
/// frames followed by their population standard deviation.
Eigen::VectorXd summarize_frames(const Eigen::MatrixXd& frames);

features::FeatureDataset generate(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace xfhmm::synthetic
