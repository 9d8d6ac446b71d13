#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xfhmm/common.hpp"
#include "xfhmm/dsp.hpp"
#include "xfhmm/ingest.hpp"

namespace xfhmm::features {

inline constexpr int kFeatureCount = 31;

/// The 31 time/frequency features, f1..f31 stored at indices 0..30:
///
///   f1-f5    mean of a_x, a_y, a_z, a_norm, w_norm
///   f6-f10   maximum of the same five signals
///   f11-f15  minimum
///   f16-f20  standard deviation (population)
///   f21-f22  interquartile range of a_norm, w_norm
///   f23      normalized signal magnitude area, sum(|a_x|+|a_y|+|a_z|)/n
///   f24      normalized average PSD of a_norm
///   f25      spectral entropy of a_norm, in [0, 1]
///   f26      DC component |X_0|/n of a_norm
///   f27      energy of a_norm, sum_{k>=1} |X_k|^2 / L
///   f28      normalized information entropy of |X_k|, in [0, 1]
///   f29-f31  Pearson correlation (a_x,a_y), (a_x,a_z), (a_y,a_z)
///
/// Spectra use the DFT of the raw signal zero-padded to L = next power of
/// two >= n. One-sided spectra exclude DC: bins k = 1..L/2.
struct FeatureVector {
    std::array<double, kFeatureCount> values{};

    [[nodiscard]] double operator[](int feature) const { return values[static_cast<std::size_t>(feature)]; }
    [[nodiscard]] Eigen::VectorXd as_vector() const;
};

/// Ordered subset of feature indices (0-based). Empty means "all".
using FeatureMask = std::vector<int>;

Eigen::VectorXd apply_mask(const Eigen::VectorXd& v, const FeatureMask& mask);
Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& rows, const FeatureMask& mask);

struct DerivedSignals {
    std::vector<double> ax, ay, az, a_norm, w_norm;
};

DerivedSignals derive_signals(std::span<const Vec3> accel, std::span<const Vec3> gyro);

/// Requires at least two samples.
FeatureVector extract(std::span<const Vec3> accel, std::span<const Vec3> gyro);

std::string feature_name(int index);  // "f1" .. "f31"

/// Per-window features at both model granularities.
struct WindowFeatures {
    std::string subject_id;
    std::string recording;
    std::string label;
    long index = 0;            // stride-grid position; consecutive indices are contiguous
    Eigen::MatrixXd frames;    // pose-level sequence, one row per frame
    Eigen::VectorXd summary;   // activity-level vector for the whole window

    [[nodiscard]] bool is_fall() const { return is_fall_label(label); }
};

struct FeatureDataset {
    std::vector<WindowFeatures> windows;
    std::vector<std::string> activities;  // normal labels, sorted
    std::size_t dropped_mixed = 0;

    [[nodiscard]] std::vector<std::string> subjects() const;  // sorted, unique
    /// Recomputes `activities` from the window labels.
    void index_activities();
};

struct FeatureConfig {
    double window_s = 1.28;
    double overlap = dsp::kDefaultOverlap;
    double frame_s = dsp::kDefaultFrameSeconds;
    double cutoff_hz = dsp::kDefaultCutoffHz;
    int filter_order = dsp::kDefaultFilterOrder;
};

WindowFeatures featurize_window(const dsp::Window& window, double frame_s);

/// Filter, window, frame and extract every usable subject's streams.
FeatureDataset featurize(const ingest::LoadedDataset& data, const FeatureConfig& config);

enum class SequenceMode { pose, activity };

/// Pose mode: one sequence per window, one vector per frame.
/// Activity mode: runs of consecutive same-subject windows, one vector per window.
std::vector<ObservationSequence> build_sequences(std::span<const dsp::Window> windows, SequenceMode mode,
                                                 double frame_s = dsp::kDefaultFrameSeconds);

/// One pose-level sequence per window (the window's frame matrix).
ObservationSequence pose_sequence(const WindowFeatures& w);

/// Maximal run of temporally consecutive windows of one subject and
/// recording. A fall window closes the run it belongs to. `members` indexes
/// the input span.
struct ActivityRun {
    ObservationSequence seq;
    std::vector<std::size_t> members;
};

std::vector<ActivityRun> activity_runs(std::span<const WindowFeatures> windows);

/// Pointer-based overload for callers holding a filtered selection.
std::vector<ActivityRun> activity_runs(std::span<const WindowFeatures* const> windows);

/// Per-feature affine standardization fitted on training rows only.
struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;  // population std; 1 for constant features

    static Standardizer fit(const Eigen::MatrixXd& rows);
    [[nodiscard]] Eigen::MatrixXd apply(const Eigen::MatrixXd& rows) const;
    [[nodiscard]] Eigen::VectorXd apply(const Eigen::VectorXd& v) const;
    [[nodiscard]] bool empty() const { return mean.size() == 0; }
};

// -- RELIEF-F ----------------------------------------------------------------

struct ReliefResult {
    std::vector<int> ranking;  // feature indices, most discriminative first
    Eigen::VectorXd weights;
};

/// RELIEF-F over labelled rows (normal activities only; rows carrying the
/// fall label are rejected). Features are standardized internally; the
/// per-feature difference is |x - y| / range on the standardized scale and
/// instance distance is the sum of differences. With n_probes >= rows every
/// row is probed once in order; otherwise probes are drawn without
/// replacement from a generator seeded with `seed`.
ReliefResult relief_f_rank(const Eigen::MatrixXd& rows, std::span<const std::string> labels, int k_neighbors,
                           int n_probes, std::uint64_t seed);

// -- Feature dataset CSV --------------------------------------------------------
//
// Header: subject,recording,window,level,label,f1,...,fK
// `level` is "window" (the summary vector) or "frame" (one row per frame, in
// order). Rows of a window are contiguous, its window row first. Cells past
// a row's own dimension are left empty.

void write_feature_csv(const std::filesystem::path& path, const FeatureDataset& data);
FeatureDataset read_feature_csv(const std::filesystem::path& path);
bool is_feature_csv(const std::filesystem::path& path);

}  // namespace xfhmm::features
