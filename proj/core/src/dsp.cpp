#include "xfhmm/dsp.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace xfhmm::dsp {

ButterworthLowpass::ButterworthLowpass(double cutoff_hz, double sample_rate_hz, int order)
    : sample_rate_hz_(sample_rate_hz) {
    if (order < 1) throw Error("filter order must be a positive integer");
    if (!(sample_rate_hz > 0.0)) throw Error("sample rate must be positive");
    if (!(cutoff_hz > 0.0) || cutoff_hz >= sample_rate_hz / 2.0) {
        throw Error("cutoff " + std::to_string(cutoff_hz) + " Hz must lie in (0, Nyquist = " +
                    std::to_string(sample_rate_hz / 2.0) + " Hz)");
    }
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
    const double k2 = k * k;
    for (int i = 0; i < order / 2; ++i) {
        const double damping = std::sin(std::numbers::pi * (2.0 * i + 1.0) / (2.0 * order));
        const double a0 = 1.0 + 2.0 * damping * k + k2;
        sections_.push_back({k2 / a0, 2.0 * k2 / a0, k2 / a0, 2.0 * (k2 - 1.0) / a0,
                             (1.0 - 2.0 * damping * k + k2) / a0});
    }
    if (order % 2 == 1) {
        sections_.push_back({k / (1.0 + k), k / (1.0 + k), 0.0, (k - 1.0) / (k + 1.0), 0.0});
    }
}

std::vector<double> ButterworthLowpass::apply(std::span<const double> x) const {
    std::vector<double> y(x.begin(), x.end());
    if (y.empty()) return y;
    for (const auto& s : sections_) {
        const double x0 = y.front();
        double x1 = x0, x2 = x0, y1 = x0, y2 = x0;
        for (double& v : y) {
            const double in = v;
            const double out = s.b0 * in + s.b1 * x1 + s.b2 * x2 - s.a1 * y1 - s.a2 * y2;
            x2 = x1;
            x1 = in;
            y2 = y1;
            y1 = out;
            v = out;
        }
    }
    return y;
}

double ButterworthLowpass::magnitude(double freq_hz) const {
    const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate_hz_;
    const std::complex<double> z1 = std::polar(1.0, -w);
    const std::complex<double> z2 = z1 * z1;
    std::complex<double> h = 1.0;
    for (const auto& s : sections_) h *= (s.b0 + s.b1 * z1 + s.b2 * z2) / (1.0 + s.a1 * z1 + s.a2 * z2);
    return std::abs(h);
}

SensorStream lowpass_filter(const SensorStream& stream, double cutoff_hz, int order) {
    const ButterworthLowpass filter(cutoff_hz, stream.sample_rate_hz, order);
    SensorStream out = stream;
    std::vector<double> channel(stream.size());
    for (auto member : {&SensorStream::accel, &SensorStream::gyro}) {
        const auto& src = stream.*member;
        auto& dst = out.*member;
        for (int axis = 0; axis < 3; ++axis) {
            for (std::size_t i = 0; i < src.size(); ++i) channel[i] = src[i][axis];
            const auto filtered = filter.apply(channel);
            for (std::size_t i = 0; i < src.size(); ++i) dst[i][axis] = filtered[i];
        }
    }
    return out;
}

std::size_t window_samples(double duration_s, double sample_rate_hz) {
    return static_cast<std::size_t>(std::llround(duration_s * sample_rate_hz));
}

std::size_t window_stride(double duration_s, double overlap_fraction, double sample_rate_hz) {
    const auto stride = std::llround(duration_s * (1.0 - overlap_fraction) * sample_rate_hz);
    return static_cast<std::size_t>(std::max<long long>(stride, 1));
}

Windowing make_windows(const SensorStream& stream, double duration_s, double overlap_fraction) {
    if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) throw Error("overlap fraction must lie in [0, 1)");
    if (!(duration_s > 0.0)) throw Error("window duration must be positive");
    const std::size_t w = window_samples(duration_s, stream.sample_rate_hz);
    if (w == 0) throw Error("window of " + std::to_string(duration_s) + " s holds no samples");
    const std::size_t stride = window_stride(duration_s, overlap_fraction, stream.sample_rate_hz);

    Windowing out;
    if (stream.size() < w) return out;
    std::size_t index = 0;
    for (std::size_t start = 0; start + w <= stream.size(); start += stride, ++index) {
        const auto& first = stream.labels[start];
        bool single = true;
        for (std::size_t i = start + 1; i < start + w && single; ++i) single = stream.labels[i] == first;
        if (!single) {
            ++out.dropped_mixed;
            continue;
        }
        out.windows.push_back({&stream, start, w, duration_s, first, stream.subject_id, index});
    }
    return out;
}

std::vector<Frame> make_frames(const Window& window, double frame_duration_s) {
    if (!(frame_duration_s > 0.0)) throw Error("frame duration must be positive");
    if (frame_duration_s > window.duration_s + 1e-12) throw Error("frame duration exceeds the window duration");
    const auto per_frame =
        static_cast<std::size_t>(std::floor(frame_duration_s * window.sample_rate_hz() + 1e-9));
    if (per_frame < 2) {
        throw Error("a " + std::to_string(frame_duration_s * 1e3) + " ms frame holds " + std::to_string(per_frame) +
                    " sample(s) at " + std::to_string(window.sample_rate_hz()) +
                    " Hz; frame statistics need at least 2, use a larger frame duration");
    }
    const auto by_time = static_cast<std::size_t>(std::floor(window.duration_s / frame_duration_s + 1e-9));
    const std::size_t n = std::min(by_time, window.count / per_frame);
    std::vector<Frame> frames;
    frames.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        frames.push_back({window.begin + i * per_frame, per_frame, frame_duration_s});
    }
    return frames;
}

}  // namespace xfhmm::dsp
