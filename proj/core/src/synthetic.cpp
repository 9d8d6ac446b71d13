#include "xfhmm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstdio>
#include <random>

namespace xfhmm::synthetic {

namespace {

constexpr double kSimplexTol = 1e-9;

void check_simplex(const Eigen::VectorXd& row, const std::string& what) {
    if ((row.array() < 0.0).any() || std::abs(row.sum() - 1.0) > kSimplexTol) {
        throw Error(what + " is not a probability simplex");
    }
}

int draw(const Eigen::VectorXd& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        acc += p(i);
        if (x < acc) return static_cast<int>(i);
    }
    return static_cast<int>(p.size() - 1);
}

Eigen::MatrixXd sample_window(const hmm::GaussianHmm& m, int frames, double var_scale, const Eigen::RowVectorXd& offset,
                              std::mt19937_64& rng) {
    std::normal_distribution<double> z(0.0, 1.0);
    Eigen::MatrixXd out(frames, m.dim());
    int s = draw(m.prior, rng);
    for (int t = 0; t < frames; ++t) {
        if (t > 0) s = draw(m.trans.row(s).transpose(), rng);
        for (int d = 0; d < m.dim(); ++d) {
            out(t, d) = m.means(s, d) + offset(d) + std::sqrt(m.vars(s, d) * var_scale) * z(rng);
        }
    }
    return out;
}

/// `count` distinct positions in [0, n), none adjacent to another or to a
/// position already in `taken`.
std::vector<int> sparse_positions(int n, int count, std::vector<char>& taken, std::mt19937_64& rng) {
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> out;
    for (int p : order) {
        if (static_cast<int>(out.size()) == count) break;
        const bool clear = !taken[static_cast<std::size_t>(p)] && (p == 0 || !taken[static_cast<std::size_t>(p - 1)]) &&
                           (p + 1 == n || !taken[static_cast<std::size_t>(p + 1)]);
        if (clear) {
            taken[static_cast<std::size_t>(p)] = 1;
            out.push_back(p);
        }
    }
    if (static_cast<int>(out.size()) < count) throw Error("too many special windows requested for the window count");
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

void SyntheticConfig::validate() const {
    if (activity_names.size() < 2) throw Error("synthetic data needs at least 2 activities");
    if (archetypes.size() != activity_names.size()) throw Error("one archetype per activity is required");
    for (std::size_t a = 0; a < archetypes.size(); ++a) {
        const auto& m = archetypes[a];
        if (m.dim() != archetypes.front().dim()) throw Error("archetypes differ in dimension");
        check_simplex(m.prior, "archetype '" + activity_names[a] + "' prior");
        for (Eigen::Index i = 0; i < m.trans.rows(); ++i) {
            check_simplex(m.trans.row(i).transpose(), "archetype '" + activity_names[a] + "' transition row");
        }
        m.validate();
        if (is_fall_label(activity_names[a])) throw Error("activity names cannot use the fall label");
    }
    const auto n = static_cast<Eigen::Index>(activity_names.size());
    if (activity_transitions.rows() != n || activity_transitions.cols() != n) {
        throw Error("activity transition matrix does not match the activity count");
    }
    for (Eigen::Index i = 0; i < n; ++i) check_simplex(activity_transitions.row(i).transpose(), "activity transition row");
    if (subjects < 1 || windows_per_subject < 1 || frames_per_window < 2) throw Error("synthetic sizes must be positive");
    if (fall_prevalence < 0.0 || artifact_rate < 0.0 || fall_prevalence + artifact_rate > 0.3) {
        throw Error("fall prevalence and artifact rate must be nonnegative and sum to at most 0.3");
    }
    if (!(fall_variance_scale > 0.0) || !(artifact_variance_scale > 0.0)) throw Error("variance scales must be positive");
}

SyntheticConfig default_config(int activities, int dim, int states, double mean_run) {
    if (activities < 2 || dim < 1 || states < 1 || !(mean_run > 1.0)) throw Error("invalid synthetic archetype shape");
    SyntheticConfig c;
    for (int a = 0; a < activities; ++a) {
        c.activity_names.push_back("activity" + std::to_string(a + 1));
        hmm::GaussianHmm m;
        m.prior = Eigen::VectorXd::Constant(states, 1.0 / states);
        m.trans = Eigen::MatrixXd::Constant(states, states, states > 1 ? 0.3 / (states - 1) : 0.0);
        m.trans.diagonal().setConstant(states > 1 ? 0.7 : 1.0);
        m.means.resize(states, dim);
        m.vars.resize(states, dim);
        for (int s = 0; s < states; ++s) {
            for (int d = 0; d < dim; ++d) {
                m.means(s, d) = 1.5 * std::sin(1.3 * a + 0.7 * d + 2.1 * s) + 0.8 * a * ((d % 2) ? 1.0 : -1.0);
                m.vars(s, d) = 0.3 + 0.15 * ((a + d + s) % 3);
            }
        }
        c.archetypes.push_back(std::move(m));
    }
    const double stay = 1.0 - 1.0 / mean_run;
    c.activity_transitions = Eigen::MatrixXd::Constant(activities, activities, (1.0 - stay) / (activities - 1));
    c.activity_transitions.diagonal().setConstant(stay);
    return c;
}

Eigen::VectorXd summarize_frames(const Eigen::MatrixXd& frames) {
    const auto d = frames.cols();
    Eigen::VectorXd out(2 * d);
    const Eigen::RowVectorXd mu = frames.colwise().mean();
    out.head(d) = mu.transpose();
    out.tail(d) = (frames.rowwise() - mu).array().square().colwise().mean().sqrt().transpose();
    return out;
}

features::FeatureDataset generate(const SyntheticConfig& config, std::uint64_t seed) {
    config.validate();
    const int n_windows = config.windows_per_subject;
    const int dim = config.archetypes.front().dim();
    const auto n_act = static_cast<Eigen::Index>(config.activity_names.size());
    features::FeatureDataset out;

    for (int subj = 0; subj < config.subjects; ++subj) {
        std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(subj)));
        std::normal_distribution<double> z(0.0, 1.0);
        Eigen::RowVectorXd offset(dim);
        for (int d = 0; d < dim; ++d) offset(d) = config.subject_offset_sd * z(rng);

        std::vector<char> taken(static_cast<std::size_t>(n_windows), 0);
        const int n_falls = static_cast<int>(std::lround(config.fall_prevalence * n_windows));
        const int n_artifacts = static_cast<int>(std::lround(config.artifact_rate * n_windows));
        const auto falls = sparse_positions(n_windows, n_falls, taken, rng);
        const auto artifacts = sparse_positions(n_windows, n_artifacts, taken, rng);

        char id[16];
        std::snprintf(id, sizeof id, "S%02d", subj + 1);
        int activity = draw(Eigen::VectorXd::Constant(n_act, 1.0 / static_cast<double>(n_act)), rng);
        for (int w = 0; w < n_windows; ++w) {
            if (w > 0) activity = draw(config.activity_transitions.row(activity).transpose(), rng);
            const bool fall = std::binary_search(falls.begin(), falls.end(), w);
            const bool artifact = std::binary_search(artifacts.begin(), artifacts.end(), w);
            const double scale = fall ? config.fall_variance_scale : artifact ? config.artifact_variance_scale : 1.0;
            features::WindowFeatures wf;
            wf.subject_id = id;
            wf.recording = "synthetic";
            wf.index = w;
            wf.label = fall ? std::string(kFallLabel) : config.activity_names[static_cast<std::size_t>(activity)];
            wf.frames = sample_window(config.archetypes[static_cast<std::size_t>(activity)], config.frames_per_window,
                                      scale, offset, rng);
            wf.summary = summarize_frames(wf.frames);
            out.windows.push_back(std::move(wf));
        }
    }
    out.index_activities();
    return out;
}

}  // namespace xfhmm::synthetic
