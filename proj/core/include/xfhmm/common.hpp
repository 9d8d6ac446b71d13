#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace xfhmm {

/// Reserved activity name for fall events in every label set.
inline constexpr std::string_view kFallLabel = "fall";

/// Any failure raised by the library: bad input data, violated
/// preconditions, or degenerate training sets.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Vec3 = std::array<double, 3>;

/// One HMM observation sequence: rows are time steps, columns features.
struct ObservationSequence {
    Eigen::MatrixXd obs;
    std::string label;
    std::string subject_id;

    [[nodiscard]] Eigen::Index length() const { return obs.rows(); }
    [[nodiscard]] Eigen::Index dim() const { return obs.cols(); }
    [[nodiscard]] bool is_fall() const { return label == kFallLabel; }
};

inline bool is_fall_label(std::string_view label) { return label == kFallLabel; }

/// Derives an independent 64-bit seed from a master seed and a stream index
/// (splitmix64 finalizer), so parallel jobs never share generator state.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace xfhmm
