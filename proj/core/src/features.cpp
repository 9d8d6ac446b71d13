#include "xfhmm/features.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <set>

#include <unsupported/Eigen/FFT>

#include "xfhmm/stats.hpp"

namespace xfhmm::features {

namespace {

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Shannon entropy of a nonnegative weight vector, normalized by log(count).
double normalized_entropy(std::span<const double> w) {
    if (w.size() < 2) return 0.0;
    double total = 0.0;
    for (double v : w) total += v;
    if (!(total > 0.0)) return 0.0;
    double h = 0.0;
    for (double v : w) {
        const double p = v / total;
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::clamp(h / std::log(static_cast<double>(w.size())), 0.0, 1.0);
}

struct SpectralFeatures {
    double psd = 0.0;
    double spectral_entropy = 0.0;
    double dc = 0.0;
    double energy = 0.0;
    double info_entropy = 0.0;
};

SpectralFeatures spectral(const std::vector<double>& x) {
    const std::size_t n = x.size();
    const std::size_t len = next_pow2(n);
    std::vector<double> padded(len, 0.0);
    std::copy(x.begin(), x.end(), padded.begin());
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, padded);

    const double dn = static_cast<double>(n);
    SpectralFeatures f;
    f.dc = std::abs(spec[0]) / dn;
    for (std::size_t k = 1; k < len; ++k) f.energy += std::norm(spec[k]);
    f.energy /= static_cast<double>(len);

    const std::size_t half = len / 2;
    std::vector<double> power(half), magnitude(half);
    for (std::size_t k = 1; k <= half; ++k) {
        power[k - 1] = std::norm(spec[k]) / dn;
        magnitude[k - 1] = std::abs(spec[k]);
    }
    f.psd = stats::mean(power) / dn;
    if (stats::stddev(x) > 0.0) {
        f.spectral_entropy = normalized_entropy(power);
        f.info_entropy = normalized_entropy(magnitude);
    }
    return f;
}

}  // namespace

Eigen::VectorXd FeatureVector::as_vector() const {
    return Eigen::Map<const Eigen::VectorXd>(values.data(), kFeatureCount);
}

Eigen::VectorXd apply_mask(const Eigen::VectorXd& v, const FeatureMask& mask) {
    if (mask.empty()) return v;
    Eigen::VectorXd out(static_cast<Eigen::Index>(mask.size()));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] < 0 || mask[i] >= v.size()) throw Error("feature mask index out of range");
        out(static_cast<Eigen::Index>(i)) = v(mask[i]);
    }
    return out;
}

Eigen::MatrixXd apply_mask(const Eigen::MatrixXd& rows, const FeatureMask& mask) {
    if (mask.empty()) return rows;
    Eigen::MatrixXd out(rows.rows(), static_cast<Eigen::Index>(mask.size()));
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] < 0 || mask[i] >= rows.cols()) throw Error("feature mask index out of range");
        out.col(static_cast<Eigen::Index>(i)) = rows.col(mask[i]);
    }
    return out;
}

DerivedSignals derive_signals(std::span<const Vec3> accel, std::span<const Vec3> gyro) {
    if (accel.size() != gyro.size()) throw Error("derive_signals: accel and gyro lengths differ");
    DerivedSignals s;
    const auto n = accel.size();
    s.ax.resize(n);
    s.ay.resize(n);
    s.az.resize(n);
    s.a_norm.resize(n);
    s.w_norm.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a = accel[i];
        const auto& w = gyro[i];
        s.ax[i] = a[0];
        s.ay[i] = a[1];
        s.az[i] = a[2];
        s.a_norm[i] = std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        s.w_norm[i] = std::sqrt(w[0] * w[0] + w[1] * w[1] + w[2] * w[2]);
    }
    return s;
}

FeatureVector extract(std::span<const Vec3> accel, std::span<const Vec3> gyro) {
    if (accel.size() < 2) throw Error("feature extraction needs at least 2 samples");
    const auto s = derive_signals(accel, gyro);
    const std::array<const std::vector<double>*, 5> channels = {&s.ax, &s.ay, &s.az, &s.a_norm, &s.w_norm};

    FeatureVector f;
    auto& v = f.values;
    for (std::size_t c = 0; c < channels.size(); ++c) {
        const auto& x = *channels[c];
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        v[c] = stats::mean(x);
        v[5 + c] = *hi;
        v[10 + c] = *lo;
        v[15 + c] = stats::stddev(x);
    }
    v[20] = stats::quartiles(s.a_norm).iqr();
    v[21] = stats::quartiles(s.w_norm).iqr();

    double sma = 0.0;
    for (std::size_t i = 0; i < s.ax.size(); ++i) sma += std::abs(s.ax[i]) + std::abs(s.ay[i]) + std::abs(s.az[i]);
    v[22] = sma / static_cast<double>(s.ax.size());

    const auto sp = spectral(s.a_norm);
    v[23] = sp.psd;
    v[24] = sp.spectral_entropy;
    v[25] = sp.dc;
    v[26] = sp.energy;
    v[27] = sp.info_entropy;

    v[28] = stats::pearson(s.ax, s.ay);
    v[29] = stats::pearson(s.ax, s.az);
    v[30] = stats::pearson(s.ay, s.az);
    return f;
}

std::string feature_name(int index) { return "f" + std::to_string(index + 1); }

std::vector<std::string> FeatureDataset::subjects() const {
    std::set<std::string> s;
    for (const auto& w : windows) s.insert(w.subject_id);
    return {s.begin(), s.end()};
}

void FeatureDataset::index_activities() {
    std::set<std::string> s;
    for (const auto& w : windows) {
        if (!w.is_fall()) s.insert(w.label);
    }
    activities.assign(s.begin(), s.end());
}

WindowFeatures featurize_window(const dsp::Window& window, double frame_s) {
    WindowFeatures out;
    out.subject_id = window.subject_id;
    out.recording = window.stream->recording;
    out.label = window.label;
    out.index = static_cast<long>(window.index);
    out.summary = extract(window.accel(), window.gyro()).as_vector();
    const auto frames = dsp::make_frames(window, frame_s);
    out.frames.resize(static_cast<Eigen::Index>(frames.size()), kFeatureCount);
    const auto& st = *window.stream;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const auto& fr = frames[i];
        const auto fv = extract({st.accel.data() + fr.begin, fr.count}, {st.gyro.data() + fr.begin, fr.count});
        out.frames.row(static_cast<Eigen::Index>(i)) = fv.as_vector().transpose();
    }
    return out;
}

FeatureDataset featurize(const ingest::LoadedDataset& data, const FeatureConfig& config) {
    FeatureDataset out;
    for (const auto& stream : data.streams) {
        if (!data.is_usable(stream.subject_id)) continue;
        const auto filtered = dsp::lowpass_filter(stream, config.cutoff_hz, config.filter_order);
        const auto windowing = dsp::make_windows(filtered, config.window_s, config.overlap);
        out.dropped_mixed += windowing.dropped_mixed;
        for (const auto& w : windowing.windows) out.windows.push_back(featurize_window(w, config.frame_s));
    }
    out.index_activities();
    return out;
}

ObservationSequence pose_sequence(const WindowFeatures& w) { return {w.frames, w.label, w.subject_id}; }

std::vector<ObservationSequence> build_sequences(std::span<const dsp::Window> windows, SequenceMode mode,
                                                 double frame_s) {
    std::vector<WindowFeatures> feats;
    feats.reserve(windows.size());
    for (const auto& w : windows) feats.push_back(featurize_window(w, frame_s));
    std::vector<ObservationSequence> out;
    if (mode == SequenceMode::pose) {
        for (const auto& f : feats) out.push_back(pose_sequence(f));
    } else {
        for (auto& run : activity_runs(feats)) out.push_back(std::move(run.seq));
    }
    return out;
}

std::vector<ActivityRun> activity_runs(std::span<const WindowFeatures* const> windows) {
    // Group by (subject, recording) keeping first-appearance order, then
    // order by window index inside each group.
    std::vector<std::pair<std::string, std::string>> keys;
    std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        std::pair<std::string, std::string> key{windows[i]->subject_id, windows[i]->recording};
        auto [it, inserted] = groups.try_emplace(key);
        if (inserted) keys.push_back(key);
        it->second.push_back(i);
    }
    std::vector<ActivityRun> runs;
    for (const auto& key : keys) {
        auto& idx = groups[key];
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return windows[a]->index < windows[b]->index; });
        std::vector<std::size_t> current;
        auto flush = [&] {
            if (current.empty()) return;
            ActivityRun run;
            const auto d = windows[current.front()]->summary.size();
            run.seq.obs.resize(static_cast<Eigen::Index>(current.size()), d);
            for (std::size_t r = 0; r < current.size(); ++r) {
                run.seq.obs.row(static_cast<Eigen::Index>(r)) = windows[current[r]]->summary.transpose();
            }
            run.seq.subject_id = key.first;
            // A run is labelled "fall" when it ends in a fall window, otherwise by its first window.
            run.seq.label = windows[current.back()]->is_fall() ? std::string(kFallLabel) : windows[current.front()]->label;
            run.members = std::move(current);
            runs.push_back(std::move(run));
            current.clear();
        };
        for (std::size_t i : idx) {
            if (!current.empty() && windows[i]->index != windows[current.back()]->index + 1) flush();
            current.push_back(i);
            if (windows[i]->is_fall()) flush();
        }
        flush();
    }
    return runs;
}

std::vector<ActivityRun> activity_runs(std::span<const WindowFeatures> windows) {
    std::vector<const WindowFeatures*> ptrs;
    ptrs.reserve(windows.size());
    for (const auto& w : windows) ptrs.push_back(&w);
    return activity_runs(std::span<const WindowFeatures* const>(ptrs));
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
    if (rows.rows() == 0) throw Error("cannot fit a standardizer on zero rows");
    Standardizer s;
    s.mean = rows.colwise().mean().transpose();
    s.scale.resize(rows.cols());
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
        const double sd = std::sqrt((rows.col(c).array() - s.mean(c)).square().mean());
        s.scale(c) = sd > 1e-12 ? sd : 1.0;
    }
    return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != mean.size()) throw Error("standardizer dimension mismatch");
    return (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& v) const {
    if (v.size() != mean.size()) throw Error("standardizer dimension mismatch");
    return (v - mean).cwiseQuotient(scale);
}

}  // namespace xfhmm::features
