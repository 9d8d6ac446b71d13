#include "xfhmm/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "xfhmm/parallel.hpp"

namespace xfhmm::tuning {

OutlierSplit split_by_scores(std::span<const std::string> labels, std::span<const double> scores, double omega) {
    if (labels.size() != scores.size()) throw Error("labels and scores differ in length");
    if (!(omega >= 0.0)) throw Error("omega must be nonnegative");
    OutlierSplit split;
    split.omega = omega;
    split.scores.assign(scores.begin(), scores.end());

    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (is_fall_label(labels[i])) throw Error("outlier splitting only accepts normal-activity sequences");
        by_label[labels[i]].push_back(i);
    }

    std::vector<bool> rejected(labels.size(), false);
    for (const auto& [label, members] : by_label) {
        ActivityQuartiles aq;
        aq.activity = label;
        aq.count = members.size();
        std::vector<double> s;
        for (auto i : members) s.push_back(scores[i]);
        aq.quartiles = stats::quartiles(s);
        if (members.size() < kMinSequencesForRejection) {
            split.notes.push_back("activity '" + label + "' has " + std::to_string(members.size()) +
                                  " sequences; quartiles unstable, no outliers rejected");
        } else {
            aq.rejection_applied = true;
            const double upper = aq.quartiles.q3 + omega * aq.quartiles.iqr();
            const double lower = aq.quartiles.q1 - omega * aq.quartiles.iqr();
            for (auto i : members) rejected[i] = scores[i] > upper || scores[i] < lower;
        }
        split.activities.push_back(aq);
    }
    for (std::size_t i = 0; i < labels.size(); ++i) (rejected[i] ? split.outliers : split.non_fall).push_back(i);
    return split;
}

OutlierSplit split_outliers(std::span<const ObservationSequence> sequences, double omega, int n_states,
                            const hmm::TrainConfig& config) {
    if (sequences.empty()) throw Error("outlier split needs training sequences");
    std::vector<std::string> labels;
    for (const auto& s : sequences) labels.push_back(s.label);
    const auto groups = models::group_by_label(sequences);
    std::vector<double> scores(sequences.size());
    for (const auto& g : groups) {
        const auto model = hmm::train(g.sequences, n_states, config).model;
        for (std::size_t i = 0; i < sequences.size(); ++i) {
            if (labels[i] == g.label) scores[i] = hmm::log_likelihood(model, sequences[i]);
        }
    }
    return split_by_scores(labels, scores, omega);
}

std::vector<int> stratified_folds(std::span<const std::string> labels, int folds, std::uint64_t seed) {
    if (folds < 2) throw Error("cross-validation needs at least 2 folds");
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
    std::vector<int> fold(labels.size(), 0);
    std::mt19937_64 rng(seed);
    for (auto& [label, members] : by_label) {
        if (members.size() < 2) {
            throw Error("activity '" + label + "' has fewer than 2 non-fall sequences; cannot stratify " +
                        std::to_string(folds) + " folds");
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (std::size_t k = 0; k < members.size(); ++k) fold[members[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
    }
    return fold;
}

models::ActivityLevelData activity_level_data(std::span<const features::WindowFeatures* const> windows,
                                              const std::vector<std::string>& activities) {
    models::ActivityLevelData data;
    data.activities = activities;
    for (const auto& a : activities) {
        std::vector<const features::WindowFeatures*> rows;
        for (const auto* w : windows) {
            if (w->label == a) rows.push_back(w);
        }
        Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : rows.front()->summary.size());
        for (std::size_t r = 0; r < rows.size(); ++r) m.row(static_cast<Eigen::Index>(r)) = rows[r]->summary.transpose();
        data.vectors.push_back(std::move(m));
    }
    const auto runs = features::activity_runs(windows);
    data.transitions = models::empirical_transitions(runs, windows, activities);
    return data;
}

namespace {

double gmean_of(std::size_t tp, std::size_t fn, std::size_t tn, std::size_t fp) {
    const double tpr = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double tnr = tn + fp == 0 ? 0.0 : static_cast<double>(tn) / static_cast<double>(tn + fp);
    return std::sqrt(tpr * tnr);
}

std::vector<std::string> sorted_labels(std::span<const features::WindowFeatures> windows,
                                       std::span<const std::size_t> idx) {
    std::set<std::string> s;
    for (auto i : idx) s.insert(windows[i].label);
    return {s.begin(), s.end()};
}

}  // namespace

XiSelection select_xi(models::Variant variant, std::span<const features::WindowFeatures> windows,
                      const OutlierSplit& split, const XiConfig& config) {
    using models::Variant;
    if (!models::is_xfactor(variant)) {
        throw Error("xi selection applies to xhmm1, xhmm2 and xhmm3, not " + std::string(models::variant_name(variant)));
    }
    if (config.grid.empty()) throw Error("xi grid is empty");
    for (double xi : config.grid) {
        if (!(xi >= 1.0)) throw Error("every xi in the grid must be at least 1");
    }
    if (split.outliers.empty()) {
        throw Error("xi selection needs proxy outliers but the split rejected none; lower omega");
    }

    std::vector<std::string> labels;
    for (auto i : split.non_fall) labels.push_back(windows[i].label);
    const auto fold_of = stratified_folds(labels, config.folds, config.seed);
    const auto activities = sorted_labels(windows, split.non_fall);

    const std::size_t n_grid = config.grid.size();
    const auto k = static_cast<std::size_t>(config.folds);
    std::vector<std::vector<double>> scores(k, std::vector<double>(n_grid, 0.0));

    parallel_for(k, config.jobs, [&](std::size_t fold) {
        std::vector<std::size_t> train_idx, held_idx;
        for (std::size_t j = 0; j < split.non_fall.size(); ++j) {
            (static_cast<std::size_t>(fold_of[j]) == fold ? held_idx : train_idx).push_back(split.non_fall[j]);
        }
        hmm::TrainConfig tc = config.train;
        tc.seed = derive_seed(config.seed, fold + 1);

        // Fit whatever does not depend on xi once per fold.
        std::vector<hmm::GaussianHmm> per_activity;
        hmm::GaussianHmm pooled;
        models::ActivityLevelData level;
        if (variant == Variant::xhmm1) {
            std::vector<ObservationSequence> seqs;
            for (auto i : train_idx) seqs.push_back(features::pose_sequence(windows[i]));
            per_activity = models::train_activity_models(models::group_by_label(seqs), config.n_states, tc);
        } else if (variant == Variant::xhmm2) {
            std::vector<ObservationSequence> seqs;
            for (auto i : train_idx) seqs.push_back(features::pose_sequence(windows[i]));
            pooled = hmm::train(seqs, config.n_states, tc).model;
        } else {
            std::vector<const features::WindowFeatures*> ptrs;
            for (auto i : train_idx) ptrs.push_back(&windows[i]);
            level = activity_level_data(ptrs, activities);
        }

        for (std::size_t g = 0; g < n_grid; ++g) {
            const double xi = config.grid[g];
            const auto detector = variant == Variant::xhmm1   ? models::build_xhmm1(activities, per_activity, xi)
                                  : variant == Variant::xhmm2 ? models::build_xhmm2(pooled, xi)
                                                              : models::build_xhmm3(level, xi, tc.var_floor, tc.var_ceil);
            auto flagged = [&](std::size_t i) {
                if (variant == Variant::xhmm3) return detector.classify(Eigen::MatrixXd(windows[i].summary.transpose())).is_fall;
                return detector.classify(windows[i].frames).is_fall;
            };
            std::size_t tp = 0, fn = 0, tn = 0, fp = 0;
            for (auto i : held_idx) (flagged(i) ? fp : tn)++;
            for (auto i : split.outliers) (flagged(i) ? tp : fn)++;
            scores[fold][g] = gmean_of(tp, fn, tn, fp);
        }
    });

    XiSelection sel;
    sel.grid = config.grid;
    sel.folds = config.folds;
    sel.mean_gmean.assign(n_grid, 0.0);
    for (std::size_t g = 0; g < n_grid; ++g) {
        for (std::size_t f = 0; f < k; ++f) {
            sel.trace.push_back({config.grid[g], static_cast<int>(f), scores[f][g]});
            sel.mean_gmean[g] += scores[f][g];
        }
        sel.mean_gmean[g] /= static_cast<double>(k);
    }
    std::size_t best = 0;
    for (std::size_t g = 1; g < n_grid; ++g) {
        if (sel.mean_gmean[g] > sel.mean_gmean[best] ||
            (sel.mean_gmean[g] == sel.mean_gmean[best] && sel.grid[g] < sel.grid[best])) {
            best = g;
        }
    }
    sel.chosen_xi = sel.grid[best];
    return sel;
}

}  // namespace xfhmm::tuning
