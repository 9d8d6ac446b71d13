#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "xfhmm/common.hpp"

namespace xfhmm::ingest {

/// Synchronized 6-axis recording with per-sample activity labels.
///
/// Invariants (checked by validate()): timestamps strictly increasing,
/// all per-sample arrays the same length, every label drawn from
/// label_set or equal to "fall", sample_rate_hz > 0.
struct SensorStream {
    std::string subject_id;
    std::string recording;
    double sample_rate_hz = 0.0;
    std::string accel_unit = "m/s2";
    std::optional<std::string> placement;  // carried, never used downstream

    std::vector<double> timestamps;
    std::vector<Vec3> accel;
    std::vector<Vec3> gyro;
    std::vector<std::string> labels;
    std::vector<std::string> label_set;  // normal activities; "fall" is implicit

    [[nodiscard]] std::size_t size() const { return timestamps.size(); }
    [[nodiscard]] bool has_label(std::string_view label) const;
    void validate() const;
};

/// A raw timestamped 3-axis track, optionally labelled per sample.
struct TimedTrack {
    std::vector<double> t;
    std::vector<Vec3> values;
    std::vector<std::string> labels;
};

/// Resamples the gyro track onto the accel timestamps by linear
/// interpolation. Accel samples outside the gyro time range are dropped.
/// Labels (if any) follow the surviving accel samples. Metadata fields of
/// the result are left for the caller, except sample_rate_hz, which is
/// estimated from the median accel spacing.
SensorStream synchronize(const TimedTrack& accel, const TimedTrack& gyro);

enum class Schema { generic_csv, dlr, mobifall };

Schema parse_schema(std::string_view name);
std::string_view schema_name(Schema schema);

/// Sidecar metadata for a generic CSV recording (`<stem>.meta`,
/// `key=value` lines, `#` comments).
struct RecordingMeta {
    std::string subject_id;
    double sample_rate_hz = 0.0;
    std::string accel_unit = "m/s2";
    std::vector<std::string> label_set;
    std::optional<std::string> placement;
};

RecordingMeta read_metadata(const std::filesystem::path& path);
void write_metadata(const std::filesystem::path& path, const RecordingMeta& meta);

/// Parses one generic CSV recording (`t,ax,ay,az,gx,gy,gz,label`).
/// Throws naming file and line on malformed rows or unknown labels.
SensorStream read_generic_csv(const std::filesystem::path& csv, const RecordingMeta& meta);
void write_generic_csv(const std::filesystem::path& csv, const SensorStream& stream);

struct LoadedDataset {
    std::vector<SensorStream> streams;
    /// Subjects that have both normal and fall samples.
    std::vector<std::string> usable_subjects;
    /// Subjects lacking either class; their streams are still returned.
    std::vector<std::string> excluded_subjects;
    std::vector<std::string> notes;

    [[nodiscard]] bool is_usable(std::string_view subject) const;
};

/// Loads every recording under `path` in the given layout.
LoadedDataset load_dataset(const std::filesystem::path& path, Schema schema);

/// Activity name for a MobiFall file code ("WAL" -> "walking", "FOL" -> "fall").
/// Throws on unknown codes.
std::string mobifall_label(std::string_view code);

/// Normalizes a DLR annotation ("Walking", "FALLING", ...) to an activity name.
std::string dlr_label(std::string_view raw);

}  // namespace xfhmm::ingest
