#include "xfhmm_cli/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "xfhmm/eval.hpp"
#include "xfhmm/features.hpp"
#include "xfhmm/ingest.hpp"
#include "xfhmm/parallel.hpp"
#include "xfhmm/synthetic.hpp"
#include "xfhmm/text.hpp"
#include "xfhmm/tuning.hpp"

namespace fs = std::filesystem;

namespace xfhmm::cli {

namespace {

/// Rejected configuration, reported before any computation (exit 2).
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

const std::vector<std::string> kCommands{"extract", "tune", "train", "evaluate", "inject", "diagnose", "synth"};

struct Settings {
    std::string command;
    std::string dataset;
    std::string schema = "auto";
    std::vector<std::string> variants;
    double window_s = 1.28;
    double overlap = dsp::kDefaultOverlap;
    double frame_ms = dsp::kDefaultFrameSeconds * 1000.0;
    double cutoff_hz = dsp::kDefaultCutoffHz;
    int filter_order = dsp::kDefaultFilterOrder;
    double omega = tuning::kDefaultOmega;
    std::vector<double> xi_grid = tuning::kDefaultXiGrid;
    int cv_folds = tuning::kDefaultFolds;
    std::uint64_t seed = 0;
    int n_states = models::kDefaultStates;
    std::string out = "xfhmm_out";
    int jobs = default_jobs();
    int top_features = 0;
    std::vector<int> counts = eval::kDefaultInjectionCounts;
    int repeats = eval::kDefaultInjectionRepeats;
    int subjects = 5;
    int windows_per_subject = 300;
    double fall_prevalence = 0.05;
};

std::vector<std::string> default_variants(const std::string& command) {
    if (command == "tune") return {"xhmm1", "xhmm2", "xhmm3"};
    if (command == "inject") return {"hmm3_sup"};
    if (command == "diagnose") return {"hmm1_sup", "hmm2_sup"};
    return {"xhmm3"};
}

std::vector<models::Variant> resolve_variants(const Settings& s) {
    std::vector<models::Variant> out;
    std::set<std::string> seen;
    for (const auto& name : s.variants) {
        if (!seen.insert(name).second) continue;
        models::Variant v;
        try {
            v = models::parse_variant(name);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
        if (s.command == "tune" && !models::is_xfactor(v)) {
            throw UsageError("tune applies to xhmm1, xhmm2 and xhmm3; got " + name);
        }
        if (s.command == "inject" && !models::is_supervised(v)) {
            throw UsageError("inject needs a supervised variant (hmm1_sup, hmm2_sup, hmm3_sup); got " + name);
        }
        if (s.command == "diagnose" && v != models::Variant::hmm1_sup && v != models::Variant::hmm2_sup) {
            throw UsageError("diagnose supports hmm1_sup and hmm2_sup; got " + name);
        }
        out.push_back(v);
    }
    return out;
}

void validate(const Settings& s) {
    if (s.command != "synth") {
        if (s.dataset.empty()) throw UsageError("--dataset is required for " + s.command);
        if (!fs::exists(s.dataset)) throw UsageError("dataset path '" + s.dataset + "' does not exist");
    }
    if (s.schema != "auto" && s.schema != "features") {
        try {
            (void)ingest::parse_schema(s.schema);
        } catch (const Error& e) {
            throw UsageError(e.what());
        }
    }
    if (!(s.window_s > 0.0)) throw UsageError("--window-s must be positive");
    if (!(s.overlap >= 0.0 && s.overlap < 1.0)) throw UsageError("--overlap must lie in [0, 1)");
    if (!(s.frame_ms > 0.0)) throw UsageError("--frame-ms must be positive");
    if (!(s.frame_ms / 1000.0 <= s.window_s)) throw UsageError("--frame-ms must not exceed the window length");
    if (!(s.cutoff_hz > 0.0)) throw UsageError("--cutoff-hz must be positive");
    if (s.filter_order < 1) throw UsageError("--filter-order must be at least 1");
    if (!(s.omega >= 0.0)) throw UsageError("--omega must be nonnegative");
    if (s.xi_grid.empty()) throw UsageError("--xi-grid must list at least one value");
    for (double xi : s.xi_grid) {
        if (!(xi >= 1.0)) throw UsageError("every --xi-grid value must be at least 1");
    }
    if (s.cv_folds < 2) throw UsageError("--cv-folds must be at least 2");
    if (s.n_states < 1) throw UsageError("--n-states must be at least 1");
    if (s.jobs < 1) throw UsageError("--jobs must be at least 1");
    if (s.top_features < 0) throw UsageError("--top-features must be nonnegative");
    if (s.repeats < 1) throw UsageError("--repeats must be at least 1");
    if (s.counts.empty()) throw UsageError("--counts must list at least one value");
    for (int c : s.counts) {
        if (c < 1) throw UsageError("--counts values must be positive; supervised detectors cannot train on zero falls");
    }
    if (s.subjects < 2) throw UsageError("--subjects must be at least 2");
    if (s.windows_per_subject < 10) throw UsageError("--windows-per-subject must be at least 10");
    if (!(s.fall_prevalence >= 0.0 && s.fall_prevalence <= 0.25)) throw UsageError("--fall-prevalence must lie in [0, 0.25]");
}

nlohmann::json config_json(const Settings& s) {
    return {{"command", s.command},
            {"dataset", s.dataset},
            {"schema", s.schema},
            {"variant", s.variants},
            {"window-s", s.window_s},
            {"overlap", s.overlap},
            {"frame-ms", s.frame_ms},
            {"cutoff-hz", s.cutoff_hz},
            {"filter-order", s.filter_order},
            {"omega", s.omega},
            {"xi-grid", s.xi_grid},
            {"cv-folds", s.cv_folds},
            {"seed", s.seed},
            {"n-states", s.n_states},
            {"top-features", s.top_features},
            {"counts", s.counts},
            {"repeats", s.repeats},
            {"subjects", s.subjects},
            {"windows-per-subject", s.windows_per_subject},
            {"fall-prevalence", s.fall_prevalence}};
}

eval::EvalConfig eval_config(const Settings& s) {
    eval::EvalConfig c;
    c.n_states = s.n_states;
    c.omega = s.omega;
    c.xi_grid = s.xi_grid;
    c.cv_folds = s.cv_folds;
    c.seed = s.seed;
    c.top_features = s.top_features;
    c.jobs = s.jobs;
    return c;
}

features::FeatureDataset load_features(const Settings& s, std::ostream& out) {
    const fs::path path(s.dataset);
    const bool as_features =
        s.schema == "features" || (s.schema == "auto" && fs::is_regular_file(path) && features::is_feature_csv(path));
    if (as_features) return features::read_feature_csv(path);

    const auto schema = s.schema == "auto" ? ingest::Schema::generic_csv : ingest::parse_schema(s.schema);
    const auto raw = ingest::load_dataset(path, schema);
    for (const auto& note : raw.notes) out << "note: " << note << '\n';
    if (raw.usable_subjects.empty()) throw Error("dataset '" + s.dataset + "' has no subject with both normal and fall data");
    features::FeatureConfig fc;
    fc.window_s = s.window_s;
    fc.overlap = s.overlap;
    fc.frame_s = s.frame_ms / 1000.0;
    fc.cutoff_hz = s.cutoff_hz;
    fc.filter_order = s.filter_order;
    auto data = features::featurize(raw, fc);
    if (data.dropped_mixed > 0) out << "note: dropped " << data.dropped_mixed << " mixed-label windows\n";
    return data;
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

std::string feature_csv_text(const features::FeatureDataset& data, const fs::path& scratch) {
    features::write_feature_csv(scratch, data);
    std::ifstream in(scratch, std::ios::binary);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    fs::remove(scratch);
    return text;
}

using Artifacts = std::map<std::string, std::string>;

std::vector<const features::WindowFeatures*> pointers(const features::FeatureDataset& d) {
    std::vector<const features::WindowFeatures*> out;
    for (const auto& w : d.windows) out.push_back(&w);
    return out;
}

Artifacts cmd_extract(const Settings& s, std::ostream& out, const fs::path& scratch) {
    const auto data = load_features(s, out);
    out << "extracted " << data.windows.size() << " windows from " << data.subjects().size() << " subjects\n";
    return {{"features.csv", feature_csv_text(data, scratch)}};
}

Artifacts cmd_synth(const Settings& s, std::ostream& out, const fs::path& scratch) {
    auto cfg = synthetic::default_config();
    cfg.subjects = s.subjects;
    cfg.windows_per_subject = s.windows_per_subject;
    cfg.fall_prevalence = s.fall_prevalence;
    const auto data = synthetic::generate(cfg, s.seed);
    out << "generated " << data.windows.size() << " synthetic windows\n";
    return {{"synth.csv", feature_csv_text(data, scratch)}};
}

Artifacts cmd_tune(const Settings& s, const std::vector<models::Variant>& variants, std::ostream& out) {
    const auto data = load_features(s, out);
    const auto ec = eval_config(s);
    const auto prep = eval::prepare_fold(pointers(data), {}, s.top_features, derive_seed(s.seed, 0));
    std::vector<features::WindowFeatures> normal;
    std::vector<ObservationSequence> seqs;
    for (const auto& w : prep.train) {
        if (w.is_fall()) continue;
        normal.push_back(w);
        seqs.push_back(features::pose_sequence(w));
    }
    hmm::TrainConfig tc = ec.train;
    tc.seed = derive_seed(s.seed, 1);
    const auto split = tuning::split_outliers(seqs, s.omega, s.n_states, tc);

    std::string csv;
    nlohmann::json results = nlohmann::json::array();
    for (auto v : variants) {
        tuning::XiConfig xc;
        xc.grid = s.xi_grid;
        xc.folds = s.cv_folds;
        xc.seed = derive_seed(s.seed, 2);
        xc.n_states = s.n_states;
        xc.train = ec.train;
        xc.jobs = s.jobs;
        const auto sel = tuning::select_xi(v, normal, split, xc);
        auto part = eval::xi_trace_csv(v, sel);
        csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
        out << models::variant_name(v) << ": chosen xi " << text::format_double(sel.chosen_xi) << '\n';
        results.push_back({{"variant", std::string(models::variant_name(v))},
                           {"chosen_xi", sel.chosen_xi},
                           {"grid", sel.grid},
                           {"mean_gmean", sel.mean_gmean}});
    }
    nlohmann::json report{{"config", config_json(s)},
                          {"outliers", split.outliers.size()},
                          {"non_fall", split.non_fall.size()},
                          {"notes", split.notes},
                          {"variants", results}};
    return {{"xi_trace.csv", csv}, {"tune.json", dump(report)}};
}

Artifacts cmd_train(const Settings& s, const std::vector<models::Variant>& variants, std::ostream& out) {
    const auto data = load_features(s, out);
    const auto ec = eval_config(s);
    const auto prep = eval::prepare_fold(pointers(data), {}, s.top_features, derive_seed(s.seed, 0));
    Artifacts a;
    for (auto v : variants) {
        auto trained = eval::train_detector(v, prep.train, ec, derive_seed(s.seed, 0));
        trained.detector.preprocess = models::uses_window_vectors(v) ? prep.activity : prep.pose;
        a["detector_" + std::string(models::variant_name(v)) + ".json"] = dump(models::to_json(trained.detector));
        out << "trained " << models::variant_name(v);
        if (trained.detector.xi()) out << " (xi " << text::format_double(*trained.detector.xi()) << ")";
        out << '\n';
    }
    return a;
}

Artifacts cmd_evaluate(const Settings& s, const std::vector<models::Variant>& variants, std::ostream& out) {
    const auto data = load_features(s, out);
    const auto ec = eval_config(s);
    std::vector<eval::EvalReport> reports;
    nlohmann::json j = nlohmann::json::array();
    for (auto v : variants) {
        reports.push_back(eval::loocv(data, v, ec));
        const auto& sm = reports.back().summary;
        out << models::variant_name(v) << ": gmean " << text::format_double(sm.gmean) << " fdr "
            << text::format_double(sm.fdr) << " far " << text::format_double(sm.far) << '\n';
        j.push_back(eval::to_json(reports.back()));
    }
    return {{"report.json", dump({{"config", config_json(s)}, {"reports", j}})},
            {"report.csv", eval::report_csv(reports)}};
}

Artifacts cmd_inject(const Settings& s, const std::vector<models::Variant>& variants, std::ostream& out) {
    const auto data = load_features(s, out);
    const auto ec = eval_config(s);
    std::vector<eval::InjectionCurve> curves;
    nlohmann::json j = nlohmann::json::array();
    for (auto v : variants) {
        curves.push_back(eval::fall_injection_curve(data, v, s.counts, s.repeats, ec));
        for (const auto& p : curves.back().points) {
            out << models::variant_name(v) << " falls=" << p.count << ": mean gmean " << text::format_double(p.mean_gmean)
                << (p.capped ? " (capped)" : "") << '\n';
        }
        j.push_back(eval::to_json(curves.back()));
    }
    return {{"injection.json", dump({{"config", config_json(s)}, {"curves", j}})},
            {"injection.csv", eval::injection_csv(curves)}};
}

Artifacts cmd_diagnose(const Settings& s, const std::vector<models::Variant>& variants, std::ostream& out) {
    const auto data = load_features(s, out);
    const auto ec = eval_config(s);
    std::string csv;
    nlohmann::json j = nlohmann::json::array();
    for (auto v : variants) {
        const auto d = eval::outlier_vs_fall_diagnostic(data, v, ec);
        auto part = eval::diagnostic_csv(d);
        csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
        for (const auto& r : d.rows) {
            out << models::variant_name(v) << ' ' << r.activity << ": " << r.flagged_as_fall << '/' << r.outliers
                << " outliers flagged as fall\n";
        }
        j.push_back(eval::to_json(d));
    }
    return {{"diagnostic.json", dump({{"config", config_json(s)}, {"diagnostics", j}})}, {"diagnostic.csv", csv}};
}

/// Writes every artifact or none: on any failure the files already written
/// are removed again.
void commit(const fs::path& dir, const Artifacts& artifacts) {
    fs::create_directories(dir);
    std::vector<fs::path> written;
    try {
        for (const auto& [name, content] : artifacts) {
            const auto target = dir / name;
            const auto tmp = dir / (name + ".partial");
            {
                std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
                if (!f) throw Error("cannot write '" + tmp.string() + "'");
                f << content;
                if (!f.flush()) throw Error("cannot write '" + tmp.string() + "'");
            }
            written.push_back(tmp);
            fs::rename(tmp, target);
            written.back() = target;
        }
    } catch (...) {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
        throw;
    }
}

void define_options(CLI::App& app, Settings& s) {
    app.add_option("command", s.command, "Subcommand: extract, tune, train, evaluate, inject, diagnose, synth")
        ->required()
        ->check(CLI::IsMember(kCommands));
    app.add_option("--dataset", s.dataset, "Recording directory/file, or a feature CSV");
    app.add_option("--schema", s.schema, "auto, features, generic-csv, dlr or mobifall")->capture_default_str();
    app.add_option("--variant", s.variants, "Detector variants (comma separated)")->delimiter(',');
    app.add_option("--window-s", s.window_s, "Window length in seconds")->capture_default_str();
    app.add_option("--overlap", s.overlap, "Window overlap fraction")->capture_default_str();
    app.add_option("--frame-ms", s.frame_ms, "Frame length in milliseconds")->capture_default_str();
    app.add_option("--cutoff-hz", s.cutoff_hz, "Low-pass cutoff frequency")->capture_default_str();
    app.add_option("--filter-order", s.filter_order, "Butterworth order")->capture_default_str();
    app.add_option("--omega", s.omega, "IQR whisker multiplier")->capture_default_str();
    app.add_option("--xi-grid", s.xi_grid, "Candidate inflation factors (comma separated)")->delimiter(',');
    app.add_option("--cv-folds", s.cv_folds, "Internal cross-validation folds")->capture_default_str();
    app.add_option("--seed", s.seed, "Master random seed")->required();
    app.add_option("--n-states", s.n_states, "Hidden states of pose-level HMMs")->capture_default_str();
    app.add_option("--out", s.out, "Output directory")->capture_default_str();
    app.add_option("--jobs", s.jobs, "Worker threads")->capture_default_str();
    app.add_option("--top-features", s.top_features, "Keep the k best RELIEF-F features (0 keeps all)")
        ->capture_default_str();
    app.add_option("--counts", s.counts, "Fall counts for inject (comma separated)")->delimiter(',');
    app.add_option("--repeats", s.repeats, "Random subsets per fall count")->capture_default_str();
    app.add_option("--subjects", s.subjects, "synth: subject count")->capture_default_str();
    app.add_option("--windows-per-subject", s.windows_per_subject, "synth: windows per subject")
        ->capture_default_str();
    app.add_option("--fall-prevalence", s.fall_prevalence, "synth: fraction of fall windows")->capture_default_str();
    app.set_config("--config", "", "Flat key=value file; keys are the long flag names");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Settings s;
    CLI::App app{"Fall detection with X-factor hidden Markov models", "xfhmm"};
    define_options(app, s);
    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        if (!reversed.empty()) reversed.pop_back();  // program name
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kUsage;
    }

    std::vector<models::Variant> variants;
    try {
        if (s.variants.empty()) s.variants = default_variants(s.command);
        validate(s);
        variants = resolve_variants(s);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    }

    const fs::path dir(s.out);
    const fs::path scratch = dir / ".features.partial";
    const bool created_dir = !fs::exists(dir);
    try {
        fs::create_directories(dir);
        Artifacts a;
        if (s.command == "extract") a = cmd_extract(s, out, scratch);
        else if (s.command == "synth") a = cmd_synth(s, out, scratch);
        else if (s.command == "tune") a = cmd_tune(s, variants, out);
        else if (s.command == "train") a = cmd_train(s, variants, out);
        else if (s.command == "evaluate") a = cmd_evaluate(s, variants, out);
        else if (s.command == "inject") a = cmd_inject(s, variants, out);
        else a = cmd_diagnose(s, variants, out);
        a["config.json"] = dump(config_json(s));
        commit(dir, a);
        for (const auto& [name, content] : a) out << "wrote " << (dir / name).string() << '\n';
        return kOk;
    } catch (const std::exception& e) {
        std::error_code ec;
        fs::remove(scratch, ec);
        if (created_dir) fs::remove_all(dir, ec);
        err << "error: " << e.what() << '\n';
        return kFailure;
    }
}

}  // namespace xfhmm::cli
