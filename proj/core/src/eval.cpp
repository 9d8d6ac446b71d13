#include "xfhmm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "xfhmm/parallel.hpp"
#include "xfhmm/text.hpp"

namespace xfhmm::eval {

using features::WindowFeatures;
using models::Variant;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kReliefNeighbours = 10;
constexpr int kReliefProbes = 300;

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}

std::vector<const WindowFeatures*> pointers(std::span<const WindowFeatures> windows) {
    std::vector<const WindowFeatures*> out;
    out.reserve(windows.size());
    for (const auto& w : windows) out.push_back(&w);
    return out;
}

std::vector<std::string> sorted_activities(std::span<const WindowFeatures* const> windows) {
    std::set<std::string> s;
    for (const auto* w : windows) {
        if (!w->is_fall()) s.insert(w->label);
    }
    return {s.begin(), s.end()};
}

std::vector<ObservationSequence> pose_sequences(std::span<const WindowFeatures* const> windows) {
    std::vector<ObservationSequence> out;
    out.reserve(windows.size());
    for (const auto* w : windows) out.push_back(features::pose_sequence(*w));
    return out;
}

Eigen::MatrixXd summary_rows(std::span<const WindowFeatures* const> windows) {
    if (windows.empty()) return {};
    Eigen::MatrixXd m(static_cast<Eigen::Index>(windows.size()), windows.front()->summary.size());
    for (std::size_t i = 0; i < windows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = windows[i]->summary.transpose();
    return m;
}

features::FeatureMask select_features(const Eigen::MatrixXd& rows, const std::vector<std::string>& labels, int top,
                                      std::uint64_t seed) {
    if (top <= 0 || top >= rows.cols()) return {};
    const auto ranked = features::relief_f_rank(rows, labels, kReliefNeighbours, kReliefProbes, seed);
    features::FeatureMask mask(ranked.ranking.begin(), ranked.ranking.begin() + top);
    std::sort(mask.begin(), mask.end());
    return mask;
}

hmm::TrainConfig seeded(const hmm::TrainConfig& base, std::uint64_t seed) {
    hmm::TrainConfig tc = base;
    tc.seed = seed;
    return tc;
}

/// Normal-side parameters of a supervised detector, fitted once and reused
/// with any subset of fall data.
struct SupervisedBase {
    Variant variant;
    std::vector<std::string> activities;
    std::vector<hmm::GaussianHmm> per_activity;
    hmm::GaussianHmm pooled;
    models::ActivityLevelData level;
};

SupervisedBase supervised_base(Variant variant, std::span<const WindowFeatures* const> normal, int n_states,
                               const hmm::TrainConfig& tc) {
    SupervisedBase base{variant, sorted_activities(normal), {}, {}, {}};
    switch (variant) {
        case Variant::hmm1_sup:
            base.per_activity =
                models::train_activity_models(models::group_by_label(pose_sequences(normal)), n_states, tc);
            break;
        case Variant::hmm2_sup:
            base.pooled = hmm::train(pose_sequences(normal), n_states, tc).model;
            break;
        case Variant::hmm3_sup:
            base.level = tuning::activity_level_data(normal, base.activities);
            break;
        default:
            throw Error("not a supervised variant: " + std::string(models::variant_name(variant)));
    }
    return base;
}

models::FallDetector finish_supervised(const SupervisedBase& base, std::span<const WindowFeatures* const> falls,
                                       int n_states, const hmm::TrainConfig& tc) {
    if (falls.empty()) {
        throw Error("supervised variant " + std::string(models::variant_name(base.variant)) +
                    " cannot be trained without fall data");
    }
    if (base.variant == Variant::hmm3_sup) {
        return models::build_hmm3_sup(base.level, summary_rows(falls), tc.var_floor, tc.var_ceil);
    }
    auto fall_model = hmm::train(pose_sequences(falls), n_states, tc).model;
    if (base.variant == Variant::hmm1_sup) return models::build_hmm1_sup(base.activities, base.per_activity, std::move(fall_model));
    return models::build_hmm2_sup(base.pooled, std::move(fall_model));
}

void set_preprocess(models::FallDetector& detector, const PreparedFold* prep) {
    if (prep == nullptr) return;
    detector.preprocess = models::uses_window_vectors(detector.variant()) ? prep->activity : prep->pose;
}

struct FoldSplit {
    std::vector<const WindowFeatures*> train;
    std::vector<const WindowFeatures*> test;
};

FoldSplit split_subject(const features::FeatureDataset& dataset, const std::string& subject) {
    FoldSplit s;
    for (const auto& w : dataset.windows) (w.subject_id == subject ? s.test : s.train).push_back(&w);
    return s;
}

std::vector<std::string> subjects_of(std::span<const WindowFeatures* const> windows) {
    std::set<std::string> s;
    for (const auto* w : windows) s.insert(w->subject_id);
    return {s.begin(), s.end()};
}

std::vector<bool> truths(std::span<const WindowFeatures> windows) {
    std::vector<bool> t;
    t.reserve(windows.size());
    for (const auto& w : windows) t.push_back(w.is_fall());
    return t;
}

void check_loocv_input(const features::FeatureDataset& dataset) {
    if (dataset.subjects().size() < 2) throw Error("leave-one-subject-out evaluation needs at least 2 subjects");
}

}  // namespace

// ---------------------------------------------------------------------------

Metrics metrics_from_counts(const Confusion& c) {
    Metrics m;
    m.counts = c;
    m.tpr = ratio(c.tp, c.tp + c.fn);
    m.tnr = ratio(c.tn, c.tn + c.fp);
    m.gmean = std::sqrt(m.tpr * m.tnr);
    m.fdr = m.tpr;
    m.far = ratio(c.fp, c.fp + c.tn);
    return m;
}

Metrics compute_metrics(const std::vector<bool>& predicted_fall, const std::vector<bool>& truly_fall) {
    if (predicted_fall.size() != truly_fall.size()) throw Error("predictions and truths differ in length");
    if (predicted_fall.empty()) throw Error("cannot compute metrics on an empty test set");
    Confusion c;
    for (std::size_t i = 0; i < predicted_fall.size(); ++i) {
        if (truly_fall[i]) {
            (predicted_fall[i] ? c.tp : c.fn)++;
        } else {
            (predicted_fall[i] ? c.fp : c.tn)++;
        }
    }
    return metrics_from_counts(c);
}

Summary summarize(std::span<const FoldResult> folds) {
    Summary s;
    auto avg = [&](auto get, std::size_t* used) {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& f : folds) {
            const double v = get(f.metrics);
            if (!std::isnan(v)) {
                sum += v;
                ++n;
            }
        }
        if (used) *used = n;
        return n == 0 ? kNaN : sum / static_cast<double>(n);
    };
    s.gmean = avg([](const Metrics& m) { return m.gmean; }, &s.folds_in_gmean);
    s.fdr = avg([](const Metrics& m) { return m.fdr; }, nullptr);
    s.far = avg([](const Metrics& m) { return m.far; }, nullptr);
    return s;
}

PreparedFold prepare_fold(std::span<const WindowFeatures* const> train, std::span<const WindowFeatures* const> test,
                          int top_features, std::uint64_t seed) {
    std::vector<const WindowFeatures*> normal;
    for (const auto* w : train) {
        if (!w->is_fall()) normal.push_back(w);
    }
    if (normal.empty()) throw Error("training data contains no normal-activity windows");

    Eigen::Index frame_rows = 0;
    for (const auto* w : normal) frame_rows += w->frames.rows();
    Eigen::MatrixXd frames(frame_rows, normal.front()->frames.cols());
    std::vector<std::string> frame_labels;
    frame_labels.reserve(static_cast<std::size_t>(frame_rows));
    Eigen::Index r = 0;
    for (const auto* w : normal) {
        frames.middleRows(r, w->frames.rows()) = w->frames;
        r += w->frames.rows();
        frame_labels.insert(frame_labels.end(), static_cast<std::size_t>(w->frames.rows()), w->label);
    }
    Eigen::MatrixXd summaries = summary_rows(normal);
    std::vector<std::string> window_labels;
    for (const auto* w : normal) window_labels.push_back(w->label);

    PreparedFold prep;
    const bool rank = top_features > 0 && sorted_activities(normal).size() >= 2;
    if (rank) {
        prep.pose.mask = select_features(frames, frame_labels, top_features, derive_seed(seed, 11));
        prep.activity.mask = select_features(summaries, window_labels, top_features, derive_seed(seed, 12));
    }
    prep.pose.standardizer = features::Standardizer::fit(features::apply_mask(frames, prep.pose.mask));
    prep.activity.standardizer = features::Standardizer::fit(features::apply_mask(summaries, prep.activity.mask));

    auto transform = [&](const WindowFeatures& w) {
        WindowFeatures out = w;
        out.frames = prep.pose.standardizer.apply(features::apply_mask(w.frames, prep.pose.mask));
        out.summary = prep.activity.standardizer.apply(features::apply_mask(w.summary, prep.activity.mask));
        return out;
    };
    for (const auto* w : train) prep.train.push_back(transform(*w));
    for (const auto* w : test) prep.test.push_back(transform(*w));
    return prep;
}

TrainedFold train_detector(Variant variant, std::span<const WindowFeatures> train, const EvalConfig& config,
                           std::uint64_t seed) {
    std::vector<const WindowFeatures*> normal, falls;
    std::vector<WindowFeatures> normal_copy;
    for (const auto& w : train) (w.is_fall() ? falls : normal).push_back(&w);
    if (normal.empty()) throw Error("training data contains no normal-activity windows");
    const auto tc = seeded(config.train, derive_seed(seed, 1));
    const int n = config.n_states;

    auto make = [&](models::FallDetector d) { return TrainedFold{std::move(d), std::nullopt, 0, 0, {}}; };

    switch (variant) {
        case Variant::hmm1:
            return make(models::train_hmm1(models::group_by_label(pose_sequences(normal)), n, tc));
        case Variant::hmm2:
            return make(models::train_hmm2(pose_sequences(normal), n, tc));
        case Variant::ocnn:
            return make(models::train_ocnn(summary_rows(normal)));
        case Variant::hmm1_sup:
        case Variant::hmm2_sup:
        case Variant::hmm3_sup: {
            auto fold = make(finish_supervised(supervised_base(variant, normal, n, tc), falls, n, tc));
            fold.falls_used = falls.size();
            return fold;
        }
        default:
            break;
    }

    // Variants that learn from an outlier split of the normal data.
    for (const auto* w : normal) normal_copy.push_back(*w);
    const auto split = tuning::split_outliers(pose_sequences(normal), config.omega, n, tc);
    std::vector<const WindowFeatures*> kept, rejected;
    for (auto i : split.non_fall) kept.push_back(normal[i]);
    for (auto i : split.outliers) rejected.push_back(normal[i]);

    if (variant == Variant::hmm_normout) {
        auto fold = make(models::train_hmm_normout(pose_sequences(kept), pose_sequences(rejected), n, tc));
        fold.outliers = rejected.size();
        fold.notes = split.notes;
        return fold;
    }

    tuning::XiConfig xc;
    xc.grid = config.xi_grid;
    xc.folds = config.cv_folds;
    xc.seed = derive_seed(seed, 2);
    xc.n_states = n;
    xc.train = config.train;
    xc.jobs = 1;
    auto selection = tuning::select_xi(variant, normal_copy, split, xc);
    const double xi = selection.chosen_xi;

    const auto activities = sorted_activities(kept);
    std::optional<models::FallDetector> detector;
    if (variant == Variant::xhmm1) {
        const auto models = models::train_activity_models(models::group_by_label(pose_sequences(kept)), n, tc);
        detector.emplace(models::build_xhmm1(activities, models, xi));
    } else if (variant == Variant::xhmm2) {
        detector.emplace(models::build_xhmm2(hmm::train(pose_sequences(kept), n, tc).model, xi));
    } else {
        detector.emplace(models::build_xhmm3(tuning::activity_level_data(kept, activities), xi, tc.var_floor, tc.var_ceil));
    }
    TrainedFold fold{std::move(*detector), std::move(selection), rejected.size(), 0, split.notes};
    return fold;
}

std::vector<bool> classify_windows(const models::FallDetector& detector, std::span<const WindowFeatures> windows) {
    std::vector<bool> out(windows.size(), false);
    switch (detector.variant()) {
        case Variant::xhmm3:
        case Variant::hmm3_sup: {
            for (const auto& run : features::activity_runs(windows)) {
                const auto verdict = detector.classify(run.seq);
                for (std::size_t k = 0; k < run.members.size(); ++k) out[run.members[k]] = verdict.fall_steps[k];
            }
            break;
        }
        case Variant::ocnn: {
            const auto ptrs = pointers(windows);
            if (!ptrs.empty()) {
                const auto verdict = detector.classify(summary_rows(ptrs));
                for (std::size_t i = 0; i < windows.size(); ++i) out[i] = verdict.fall_steps[i];
            }
            break;
        }
        default:
            for (std::size_t i = 0; i < windows.size(); ++i) out[i] = detector.classify(windows[i].frames).is_fall;
    }
    return out;
}

EvalReport loocv(const features::FeatureDataset& dataset, Variant variant, const EvalConfig& config) {
    check_loocv_input(dataset);
    const auto subjects = dataset.subjects();
    EvalReport report;
    report.variant = variant;
    report.folds.resize(subjects.size());

    parallel_for(subjects.size(), config.jobs, [&](std::size_t f) {
        const auto fold_seed = derive_seed(config.seed, f);
        const auto split = split_subject(dataset, subjects[f]);
        const auto prep = prepare_fold(split.train, split.test, config.top_features, fold_seed);
        auto trained = train_detector(variant, prep.train, config, fold_seed);
        set_preprocess(trained.detector, &prep);

        FoldResult& out = report.folds[f];
        out.subject_id = subjects[f];
        const auto predicted = classify_windows(trained.detector, prep.test);
        const auto truth = truths(prep.test);
        out.metrics = compute_metrics(predicted, truth);
        out.xi = trained.detector.xi();
        out.xi_selection = std::move(trained.xi_selection);
        out.audit.training_subjects = subjects_of(split.train);
        out.audit.training_windows = split.train.size();
        out.audit.training_falls = trained.falls_used;
        out.audit.outliers = trained.outliers;
        out.notes = std::move(trained.notes);
        if (std::isnan(out.metrics.tpr)) out.notes.push_back("test subject has no falls; fold excluded from gmean");
    });
    report.summary = summarize(report.folds);
    return report;
}

// ---------------------------------------------------------------------------

InjectionCurve fall_injection_curve(const features::FeatureDataset& dataset, Variant variant,
                                    std::span<const int> counts, int repeats, const EvalConfig& config) {
    if (!models::is_supervised(variant)) {
        throw Error("fall injection needs a supervised variant, not " + std::string(models::variant_name(variant)));
    }
    if (repeats < 1) throw Error("fall injection needs at least one repeat");
    for (int c : counts) {
        if (c < 1) throw Error("fall injection counts must be positive; supervised variants cannot train on zero falls");
    }
    check_loocv_input(dataset);
    const auto subjects = dataset.subjects();

    struct FoldCache {
        PreparedFold prep;
        std::vector<const WindowFeatures*> falls;
        std::optional<SupervisedBase> base;
        hmm::TrainConfig tc;
        std::vector<bool> truth;
    };
    std::vector<FoldCache> cache(subjects.size());
    parallel_for(subjects.size(), config.jobs, [&](std::size_t f) {
        const auto fold_seed = derive_seed(config.seed, f);
        const auto split = split_subject(dataset, subjects[f]);
        auto& c = cache[f];
        c.prep = prepare_fold(split.train, split.test, config.top_features, fold_seed);
        std::vector<const WindowFeatures*> normal;
        for (const auto& w : c.prep.train) (w.is_fall() ? c.falls : normal).push_back(&w);
        c.tc = seeded(config.train, derive_seed(fold_seed, 1));
        c.base = supervised_base(variant, normal, config.n_states, c.tc);
        c.truth = truths(c.prep.test);
    });

    InjectionCurve curve;
    curve.variant = variant;
    curve.repeats = repeats;
    for (int count : counts) {
        InjectionPoint point;
        point.count = count;
        std::vector<double> fdrs(static_cast<std::size_t>(repeats)), fars(static_cast<std::size_t>(repeats));
        point.repeat_gmean.assign(static_cast<std::size_t>(repeats), 0.0);
        std::vector<std::vector<FoldResult>> results(static_cast<std::size_t>(repeats),
                                                     std::vector<FoldResult>(subjects.size()));
        std::vector<char> capped(subjects.size() * static_cast<std::size_t>(repeats), 0);
        parallel_for(subjects.size() * static_cast<std::size_t>(repeats), config.jobs, [&](std::size_t job) {
            const std::size_t r = job / subjects.size();
            const std::size_t f = job % subjects.size();
            const auto& c = cache[f];
            std::mt19937_64 rng(derive_seed(derive_seed(derive_seed(config.seed, 1000003), static_cast<std::uint64_t>(count)),
                                            r * 7919 + f));
            auto pool = c.falls;
            std::shuffle(pool.begin(), pool.end(), rng);
            const auto take = std::min(pool.size(), static_cast<std::size_t>(count));
            capped[job] = take < static_cast<std::size_t>(count);
            pool.resize(take);
            const auto detector = finish_supervised(*c.base, pool, config.n_states, c.tc);
            auto& fr = results[r][f];
            fr.subject_id = subjects[f];
            fr.metrics = compute_metrics(classify_windows(detector, c.prep.test), c.truth);
        });
        for (std::size_t r = 0; r < static_cast<std::size_t>(repeats); ++r) {
            const auto s = summarize(results[r]);
            point.repeat_gmean[r] = s.gmean;
            fdrs[r] = s.fdr;
            fars[r] = s.far;
        }
        point.capped = std::find(capped.begin(), capped.end(), 1) != capped.end();
        point.mean_gmean = stats::mean(point.repeat_gmean);
        point.std_gmean = stats::stddev(point.repeat_gmean);
        point.mean_fdr = stats::mean(fdrs);
        point.mean_far = stats::mean(fars);
        curve.points.push_back(std::move(point));
    }
    return curve;
}

// ---------------------------------------------------------------------------

double DiagnosticRow::fraction() const { return ratio(flagged_as_fall, outliers); }

Diagnostic outlier_vs_fall_diagnostic(const features::FeatureDataset& dataset, Variant variant,
                                      const EvalConfig& config) {
    if (variant != Variant::hmm1_sup && variant != Variant::hmm2_sup) {
        throw Error("the outlier diagnostic supports hmm1_sup and hmm2_sup");
    }
    const auto all = pointers(dataset.windows);
    const auto prep = prepare_fold(all, {}, config.top_features, derive_seed(config.seed, 0));
    std::vector<const WindowFeatures*> normal, falls;
    for (const auto& w : prep.train) (w.is_fall() ? falls : normal).push_back(&w);
    if (falls.empty()) throw Error("the outlier diagnostic needs fall data");
    const auto tc = seeded(config.train, derive_seed(config.seed, 1));
    const auto split = tuning::split_outliers(pose_sequences(normal), config.omega, config.n_states, tc);
    if (split.outliers.empty()) throw Error("no outliers were rejected; lower omega");

    std::vector<const WindowFeatures*> kept;
    for (auto i : split.non_fall) kept.push_back(normal[i]);
    const auto base = supervised_base(variant, kept, config.n_states, tc);
    const auto detector = finish_supervised(base, falls, config.n_states, tc);

    Diagnostic d;
    d.variant = variant;
    for (const auto& a : split.activities) d.rows.push_back({a.activity, 0, 0});
    for (auto i : split.outliers) {
        const auto* w = normal[i];
        auto row = std::find_if(d.rows.begin(), d.rows.end(), [&](const auto& r) { return r.activity == w->label; });
        row->outliers++;
        if (detector.classify(w->frames).is_fall) row->flagged_as_fall++;
    }
    return d;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const Metrics& m) {
    return {{"tp", m.counts.tp}, {"fp", m.counts.fp}, {"tn", m.counts.tn}, {"fn", m.counts.fn},
            {"tpr", m.tpr},      {"tnr", m.tnr},      {"gmean", m.gmean},  {"fdr", m.fdr},
            {"far", m.far}};
}

nlohmann::json to_json(const EvalReport& report) {
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : report.folds) {
        nlohmann::json j;
        j["subject"] = f.subject_id;
        j["metrics"] = to_json(f.metrics);
        j["xi"] = f.xi ? nlohmann::json(*f.xi) : nlohmann::json(nullptr);
        if (f.xi_selection) {
            j["xi_mean_gmean"] = f.xi_selection->mean_gmean;
        }
        j["audit"] = {{"training_subjects", f.audit.training_subjects},
                      {"training_windows", f.audit.training_windows},
                      {"training_falls", f.audit.training_falls},
                      {"outliers", f.audit.outliers}};
        j["notes"] = f.notes;
        folds.push_back(std::move(j));
    }
    return {{"variant", std::string(models::variant_name(report.variant))},
            {"folds", std::move(folds)},
            {"summary",
             {{"gmean", report.summary.gmean},
              {"fdr", report.summary.fdr},
              {"far", report.summary.far},
              {"folds_in_gmean", report.summary.folds_in_gmean}}}};
}

nlohmann::json to_json(const InjectionCurve& curve) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : curve.points) {
        points.push_back({{"count", p.count},
                          {"mean_gmean", p.mean_gmean},
                          {"std_gmean", p.std_gmean},
                          {"mean_fdr", p.mean_fdr},
                          {"mean_far", p.mean_far},
                          {"repeat_gmean", p.repeat_gmean},
                          {"capped", p.capped}});
    }
    return {{"variant", std::string(models::variant_name(curve.variant))},
            {"repeats", curve.repeats},
            {"points", std::move(points)}};
}

nlohmann::json to_json(const Diagnostic& diagnostic) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : diagnostic.rows) {
        rows.push_back({{"activity", r.activity},
                        {"outliers", r.outliers},
                        {"flagged_as_fall", r.flagged_as_fall},
                        {"fraction", r.fraction()}});
    }
    return {{"variant", std::string(models::variant_name(diagnostic.variant))}, {"rows", std::move(rows)}};
}

std::string report_csv(std::span<const EvalReport> reports) {
    std::ostringstream out;
    out << "variant,subject,tp,fp,tn,fn,tpr,tnr,gmean,fdr,far,xi\n";
    for (const auto& rep : reports) {
        for (const auto& f : rep.folds) {
            const auto& m = f.metrics;
            out << models::variant_name(rep.variant) << ',' << f.subject_id << ',' << m.counts.tp << ','
                << m.counts.fp << ',' << m.counts.tn << ',' << m.counts.fn << ',' << text::format_double(m.tpr) << ','
                << text::format_double(m.tnr) << ',' << text::format_double(m.gmean) << ','
                << text::format_double(m.fdr) << ',' << text::format_double(m.far) << ','
                << (f.xi ? text::format_double(*f.xi) : std::string()) << '\n';
        }
    }
    return out.str();
}

std::string injection_csv(std::span<const InjectionCurve> curves) {
    std::ostringstream out;
    out << "variant,count,mean_gmean,std_gmean,mean_fdr,mean_far,capped\n";
    for (const auto& c : curves) {
        for (const auto& p : c.points) {
            out << models::variant_name(c.variant) << ',' << p.count << ',' << text::format_double(p.mean_gmean) << ','
                << text::format_double(p.std_gmean) << ',' << text::format_double(p.mean_fdr) << ','
                << text::format_double(p.mean_far) << ',' << (p.capped ? 1 : 0) << '\n';
        }
    }
    return out.str();
}

std::string xi_trace_csv(Variant variant, const tuning::XiSelection& selection) {
    std::ostringstream out;
    out << "variant,xi,fold,gmean\n";
    for (const auto& row : selection.trace) {
        out << models::variant_name(variant) << ',' << text::format_double(row.xi) << ',' << row.fold << ','
            << text::format_double(row.gmean) << '\n';
    }
    return out.str();
}

std::string diagnostic_csv(const Diagnostic& diagnostic) {
    std::ostringstream out;
    out << "variant,activity,outliers,flagged_as_fall,fraction\n";
    for (const auto& r : diagnostic.rows) {
        out << models::variant_name(diagnostic.variant) << ',' << r.activity << ',' << r.outliers << ','
            << r.flagged_as_fall << ',' << text::format_double(r.fraction()) << '\n';
    }
    return out.str();
}

}  // namespace xfhmm::eval
