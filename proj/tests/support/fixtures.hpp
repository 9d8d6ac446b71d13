#pragma once

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "xfhmm/hmm.hpp"
#include "xfhmm/ingest.hpp"

namespace fixtures {

namespace fs = std::filesystem;

/// Fresh directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = fs::temp_directory_path() / ("xfhmm_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                                             std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    [[nodiscard]] const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

inline Eigen::VectorXd random_simplex(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = u(rng);
    return v / v.sum();
}

/// Random diagonal Gaussian HMM. With `duplicate`, the last state copies the
/// first (emission, transitions in and out, prior), which creates exact
/// score ties between paths.
inline xfhmm::hmm::GaussianHmm random_hmm(std::mt19937_64& rng, int n, int d, bool duplicate = false) {
    std::normal_distribution<double> z(0.0, 1.5);
    std::uniform_real_distribution<double> v(0.2, 2.0);
    xfhmm::hmm::GaussianHmm m;
    m.prior = random_simplex(rng, n);
    m.trans.resize(n, n);
    for (int i = 0; i < n; ++i) m.trans.row(i) = random_simplex(rng, n).transpose();
    m.means.resize(n, d);
    m.vars.resize(n, d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
            m.means(i, k) = z(rng);
            m.vars(i, k) = v(rng);
        }
    }
    if (duplicate && n >= 2) {
        const int last = n - 1;
        m.means.row(last) = m.means.row(0);
        m.vars.row(last) = m.vars.row(0);
        m.prior(last) = m.prior(0);
        m.prior /= m.prior.sum();
        for (int i = 0; i < n; ++i) m.trans(i, last) = m.trans(i, 0);
        for (int i = 0; i < n; ++i) m.trans.row(i) /= m.trans.row(i).sum();
        m.trans.row(last) = m.trans.row(0);
    }
    return m;
}

inline oracle::Hmm to_oracle(const xfhmm::hmm::GaussianHmm& m) { return {m.prior, m.trans, m.means, m.vars}; }

inline Eigen::MatrixXd random_obs(std::mt19937_64& rng, int t, int d, double sd = 2.0) {
    std::normal_distribution<double> z(0.0, sd);
    Eigen::MatrixXd o(t, d);
    for (int i = 0; i < t; ++i) {
        for (int k = 0; k < d; ++k) o(i, k) = z(rng);
    }
    return o;
}

/// Samples a sequence from a model.
inline Eigen::MatrixXd sample(const xfhmm::hmm::GaussianHmm& m, int t_len, std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::discrete_distribution<int> init(m.prior.data(), m.prior.data() + m.prior.size());
    Eigen::MatrixXd o(t_len, m.dim());
    int s = init(rng);
    for (int t = 0; t < t_len; ++t) {
        if (t > 0) {
            Eigen::VectorXd row = m.trans.row(s).transpose();
            std::discrete_distribution<int> next(row.data(), row.data() + row.size());
            s = next(rng);
        }
        for (int k = 0; k < m.dim(); ++k) o(t, k) = m.means(s, k) + std::sqrt(m.vars(s, k)) * z(rng);
    }
    return o;
}

/// A small raw recording set in the generic CSV layout: each subject walks,
/// sits and falls; the last subject (when `with_fallless` is set) never falls.
inline void write_raw_dataset(const fs::path& dir, int subjects, double rate_hz, std::uint64_t seed,
                              bool with_fallless = false) {
    fs::create_directories(dir);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.2);
    for (int s = 0; s < subjects; ++s) {
        xfhmm::ingest::SensorStream st;
        st.subject_id = "P" + std::to_string(s + 1);
        st.recording = "rec";
        st.sample_rate_hz = rate_hz;
        st.label_set = {"sitting", "walking"};
        const bool falls = !(with_fallless && s == subjects - 1);
        struct Segment {
            const char* label;
            double seconds;
        };
        std::vector<Segment> plan{{"walking", 12}, {"sitting", 10}, {"walking", 8}};
        if (falls) plan.insert(plan.begin() + 2, Segment{"fall", 3});
        if (falls) plan.push_back({"fall", 3});
        plan.push_back({"sitting", 6});
        std::size_t i = 0;
        for (const auto& seg : plan) {
            const auto n = static_cast<std::size_t>(seg.seconds * rate_hz);
            for (std::size_t k = 0; k < n; ++k, ++i) {
                const double t = static_cast<double>(i) / rate_hz;
                xfhmm::Vec3 a{0, 0, 9.81}, w{0, 0, 0};
                const std::string label = seg.label;
                if (label == "walking") {
                    a = {2.0 * std::sin(2 * std::numbers::pi * 1.8 * t), 1.0 * std::cos(2 * std::numbers::pi * 1.8 * t), 9.81 + 1.5 * std::sin(2 * std::numbers::pi * 3.6 * t)};
                    w = {0.5 * std::sin(2 * std::numbers::pi * 1.8 * t), 0.3, 0.2 * std::cos(2 * std::numbers::pi * 0.9 * t)};
                } else if (label == "fall") {
                    a = {12.0 * std::sin(2 * std::numbers::pi * 4.0 * t), 8.0 * std::cos(2 * std::numbers::pi * 5.0 * t), 3.0};
                    w = {3.0 * std::sin(2 * std::numbers::pi * 3.0 * t), 2.5, 1.5};
                }
                for (auto& v : a) v += noise(rng);
                for (auto& v : w) v += 0.1 * noise(rng);
                st.timestamps.push_back(t);
                st.accel.push_back(a);
                st.gyro.push_back(w);
                st.labels.push_back(label);
            }
        }
        const auto stem = dir / ("P" + std::to_string(s + 1));
        xfhmm::ingest::write_generic_csv(stem.string() + ".csv", st);
        xfhmm::ingest::RecordingMeta meta;
        meta.subject_id = st.subject_id;
        meta.sample_rate_hz = rate_hz;
        meta.label_set = st.label_set;
        xfhmm::ingest::write_metadata(stem.string() + ".meta", meta);
    }
}

}  // namespace fixtures
