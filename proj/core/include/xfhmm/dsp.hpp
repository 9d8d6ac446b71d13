#pragma once

#include <span>
#include <string>
#include <vector>

#include "xfhmm/ingest.hpp"

namespace xfhmm::dsp {

using ingest::SensorStream;

/// Cascade of second-order (and one first-order, for odd orders) sections
/// implementing a digital Butterworth low-pass designed by the bilinear
/// transform with frequency pre-warping. Unity gain at DC.
class ButterworthLowpass {
public:
    ButterworthLowpass(double cutoff_hz, double sample_rate_hz, int order);

    /// Causal forward filtering. The filter state starts at steady state for
    /// the first input value, so a constant signal passes through unchanged.
    [[nodiscard]] std::vector<double> apply(std::span<const double> x) const;

    /// |H(e^{jw})| at frequency f.
    [[nodiscard]] double magnitude(double freq_hz) const;

    struct Section {
        double b0, b1, b2, a1, a2;  // a0 == 1; first-order sections have b2 == a2 == 0
    };
    [[nodiscard]] const std::vector<Section>& sections() const { return sections_; }

private:
    double sample_rate_hz_;
    std::vector<Section> sections_;
};

inline constexpr double kDefaultCutoffHz = 20.0;
inline constexpr int kDefaultFilterOrder = 1;
inline constexpr double kDefaultOverlap = 0.5;
inline constexpr double kDefaultFrameSeconds = 0.160;

/// Filters each of the six inertial channels independently.
SensorStream lowpass_filter(const SensorStream& stream, double cutoff_hz = kDefaultCutoffHz,
                            int order = kDefaultFilterOrder);

/// Contiguous single-label slice of a parent stream. The parent must outlive it.
struct Window {
    const SensorStream* stream = nullptr;
    std::size_t begin = 0;
    std::size_t count = 0;
    double duration_s = 0.0;
    std::string label;
    std::string subject_id;
    std::size_t index = 0;  // position in the stride grid of its stream

    [[nodiscard]] std::span<const Vec3> accel() const { return {stream->accel.data() + begin, count}; }
    [[nodiscard]] std::span<const Vec3> gyro() const { return {stream->gyro.data() + begin, count}; }
    [[nodiscard]] double sample_rate_hz() const { return stream->sample_rate_hz; }
};

struct Frame {
    std::size_t begin = 0;  // absolute sample offset into the parent stream
    std::size_t count = 0;
    double duration_s = 0.0;
};

struct Windowing {
    std::vector<Window> windows;
    std::size_t dropped_mixed = 0;  // windows discarded for carrying more than one label
};

std::size_t window_samples(double duration_s, double sample_rate_hz);
std::size_t window_stride(double duration_s, double overlap_fraction, double sample_rate_hz);

/// Overlapping windows; a stream shorter than one window yields none.
Windowing make_windows(const SensorStream& stream, double duration_s, double overlap_fraction = kDefaultOverlap);

/// Non-overlapping frames tiling the window from its start; the frame count
/// is floor(window duration / frame duration) and a trailing remainder is
/// dropped. Throws if a frame would hold fewer than two samples.
std::vector<Frame> make_frames(const Window& window, double frame_duration_s = kDefaultFrameSeconds);

}  // namespace xfhmm::dsp
