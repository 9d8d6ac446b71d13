// Acceptance run: one PASS/FAIL/SKIP line per criterion. Exit status is
// nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "xfhmm/eval.hpp"
#include "xfhmm/features.hpp"
#include "xfhmm/hmm.hpp"
#include "xfhmm/models.hpp"
#include "xfhmm/parallel.hpp"
#include "xfhmm/synthetic.hpp"
#include "xfhmm/tuning.hpp"
#include "xfhmm_cli/cli.hpp"

using namespace xfhmm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

enum class Outcome { pass, fail, skip };

struct Line {
    int id;
    Outcome outcome;
    std::string what;
    std::string detail;
};

std::vector<Line> g_lines;

void report(int id, Outcome o, const std::string& what, const std::string& detail) {
    const char* tag = o == Outcome::pass ? "PASS" : o == Outcome::fail ? "FAIL" : "SKIP";
    std::cout << "criterion " << id << ": " << tag << "  " << what << "  [" << detail << "]" << std::endl;
    g_lines.push_back({id, o, what, detail});
}

void report(int id, bool ok, const std::string& what, const std::string& detail) {
    report(id, ok ? Outcome::pass : Outcome::fail, what, detail);
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 6) {
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

ObservationSequence seq_of(Eigen::MatrixXd obs) {
    ObservationSequence s;
    s.obs = std::move(obs);
    s.label = "walk";
    return s;
}

struct Instance {
    hmm::GaussianHmm model;
    Eigen::MatrixXd obs;
};

// N <= 3, D <= 2, T <= 6; every fourth instance duplicates a state so that
// distinct paths tie exactly.
std::vector<Instance> oracle_instances(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Instance> out;
    for (int i = 0; i < count; ++i) {
        const int n = 1 + i % 3, d = 1 + (i / 3) % 2, t = 1 + (i / 6) % 6;
        Instance inst;
        inst.model = fixtures::random_hmm(rng, n, d, n >= 2 && i % 4 == 1);
        inst.obs = fixtures::random_obs(rng, t, d);
        out.push_back(std::move(inst));
    }
    return out;
}

void criterion_1() {
    const auto t0 = Clock::now();
    const auto inst = oracle_instances(200, 101);
    double worst = 0.0;
    for (const auto& c : inst) {
        const double got = hmm::log_likelihood(c.model, c.obs);
        const double want = oracle::brute_force_loglik(fixtures::to_oracle(c.model), c.obs);
        worst = std::max(worst, std::abs(got - want));
    }
    const double secs = seconds_since(t0);
    report(1, worst <= 1e-9 && secs < 10.0, "forward log-likelihood equals exhaustive path enumeration",
           "200 models, max |error| " + fmt(worst, 3) + " <= 1e-9, " + fmt(secs, 3) + " s < 10 s");
}

void criterion_2() {
    const auto inst = oracle_instances(200, 101);
    int agree = 0, tied = 0;
    for (const auto& c : inst) {
        const auto got = hmm::viterbi(c.model, c.obs);
        const auto want = oracle::brute_force_viterbi(fixtures::to_oracle(c.model), c.obs);
        agree += got.path == want.path;
        if (c.model.n_states() >= 2 && c.model.means.row(0) == c.model.means.row(c.model.n_states() - 1)) ++tied;
    }
    report(2, agree == 200, "Viterbi path equals the brute-force argmax with identical tie-breaking",
           std::to_string(agree) + "/200 paths identical, " + std::to_string(tied) + " instances with duplicated states");
}

void criterion_3() {
    std::mt19937_64 rng(303);
    hmm::TrainConfig cfg;
    cfg.max_iterations = 30;
    cfg.loglik_tolerance = 0.0;
    double worst_drop = 0.0;
    bool bounds_ok = true;
    bool invariants_ok = true;
    int steps = 0;
    for (int run = 0; run < 50; ++run) {
        cfg.seed = static_cast<std::uint64_t>(run);
        const int n = 1 + run % 4, d = 1 + run % 3;
        const auto truth = fixtures::random_hmm(rng, n, d);
        std::vector<ObservationSequence> data;
        for (int s = 0; s < 3 + run % 4; ++s) {
            Eigen::MatrixXd o = fixtures::sample(truth, 12 + 5 * s, rng);
            // Push the variance clamps: a nearly constant column and a very wide one.
            if (run % 5 == 0) o.col(0).setConstant(1.25);
            if (run % 5 == 1) o.col(d - 1) *= 40.0;
            data.push_back(seq_of(o));
        }
        auto model = hmm::init_from_segments(data, n, cfg);
        double prev = -std::numeric_limits<double>::infinity();
        for (int it = 0; it < cfg.max_iterations; ++it) {
            const auto r = hmm::baum_welch(model, data, cfg, 1);
            const double before = r.trace.loglik.front();
            if (it > 0) worst_drop = std::max(worst_drop, prev - before);
            prev = r.trace.loglik.back();
            worst_drop = std::max(worst_drop, r.trace.loglik.front() - r.trace.loglik.back());
            model = r.model;
            bounds_ok = bounds_ok && (model.vars.array() >= 0.01).all() && (model.vars.array() <= 100.0).all();
            try {
                model.validate(1e-9);
            } catch (const Error&) {
                invariants_ok = false;
            }
            ++steps;
        }
    }
    report(3, worst_drop <= 1e-8 && bounds_ok && invariants_ok,
           "Baum-Welch log-likelihood never decreases and variances stay within [0.01, 100]",
           "50 runs, " + std::to_string(steps) + " iterations, largest decrease " + fmt(std::max(worst_drop, 0.0), 3) +
               " <= 1e-8, bounds " + (bounds_ok ? "held" : "violated") + ", simplex invariants " +
               (invariants_ok ? "held" : "violated"));
}

void criterion_4() {
    std::mt19937_64 rng(404);
    std::normal_distribution<double> z;
    std::uniform_int_distribution<int> pick(0, 2);
    const char* names[] = {"sit", "stand", "walk"};
    int matched = 0, total = 0;
    std::size_t identical_outliers = 99;

    // All-identical sequences through the full path: identical scores, zero outliers.
    {
        std::vector<ObservationSequence> same;
        for (int i = 0; i < 12; ++i) {
            auto s = seq_of(Eigen::MatrixXd::Constant(6, 2, 0.5));
            s.label = "sit";
            same.push_back(s);
        }
        const auto split = tuning::split_outliers(same, 1.5, 2, hmm::TrainConfig{});
        std::vector<std::string> labels(12, "sit");
        const auto want = oracle::iqr_outliers(labels, split.scores, 1.5);
        std::vector<bool> got(12, false);
        for (auto i : split.outliers) got[i] = true;
        identical_outliers = split.outliers.size();
        matched += got == want && identical_outliers == 0;
        ++total;
    }
    // Sequence sets scored by trained per-activity models.
    for (int rep = 0; rep < 9; ++rep) {
        std::vector<ObservationSequence> seqs;
        std::vector<std::string> labels;
        for (int i = 0; i < 10 + 3 * rep; ++i) {
            const int a = pick(rng);
            Eigen::MatrixXd o(6, 2);
            const double spread = i % 9 == 0 ? 4.0 : 1.0;
            for (int t = 0; t < 6; ++t) {
                for (int k = 0; k < 2; ++k) o(t, k) = 2.0 * a + spread * z(rng);
            }
            auto s = seq_of(o);
            s.label = names[a];
            seqs.push_back(s);
            labels.push_back(s.label);
        }
        const auto split = tuning::split_outliers(seqs, 1.5, 1, hmm::TrainConfig{});
        std::vector<bool> got(seqs.size(), false);
        for (auto i : split.outliers) got[i] = true;
        matched += got == oracle::iqr_outliers(labels, split.scores, 1.5);
        ++total;
    }
    // Score sets applied directly, with ties and tiny activities mixed in.
    for (int rep = 0; rep < 90; ++rep) {
        const int n = 2 + rep % 50;
        std::vector<std::string> labels;
        std::vector<double> scores;
        for (int i = 0; i < n; ++i) {
            labels.push_back(names[pick(rng)]);
            const double v = z(rng) * (i % 11 == 0 ? 25.0 : 3.0);
            scores.push_back(rep % 3 == 0 ? std::round(v) : v);
        }
        const double omega = rep % 4 == 0 ? 0.5 : 1.5;
        const auto split = tuning::split_by_scores(labels, scores, omega);
        std::vector<bool> got(scores.size(), false);
        for (auto i : split.outliers) got[i] = true;
        matched += got == oracle::iqr_outliers(labels, scores, omega);
        ++total;
    }
    report(4, matched == total && total == 100, "IQR outlier decisions equal the sort-and-quartile oracle",
           std::to_string(matched) + "/" + std::to_string(total) + " sets identical, all-identical set rejected " +
               std::to_string(identical_outliers));
}

void criterion_5() {
    std::mt19937_64 rng(505);
    double worst_row = 0.0;
    bool exact = true;
    for (int rep = 0; rep < 200; ++rep) {
        const int n = 1 + rep % 8;
        Eigen::MatrixXd e(n, n);
        for (int i = 0; i < n; ++i) e.row(i) = fixtures::random_simplex(rng, n).transpose();
        const auto a = models::augment_transitions(e);
        for (int i = 0; i <= n; ++i) worst_row = std::max(worst_row, std::abs(a.row(i).sum() - 1.0));
        exact = exact && a(n, n) == 0.95;
        for (int i = 0; i < n; ++i) exact = exact && a(i, n) == 0.05;
    }
    Eigen::MatrixXd w(2, 2);
    w << 0.6, 0.4, 0.3, 0.7;
    const auto a = models::augment_transitions(w);
    const double expected[3][3] = {{0.57, 0.38, 0.05}, {0.285, 0.665, 0.05}, {0.025, 0.025, 0.95}};
    const char* expected_text[3][3] = {{"0.57", "0.38", "0.05"}, {"0.285", "0.665", "0.05"}, {"0.025", "0.025", "0.95"}};
    bool example = true;
    std::string shown;
    for (int i = 0; i < 3; ++i) {
        shown += i ? " / " : "";
        for (int j = 0; j < 3; ++j) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.15g", a(i, j));
            example = example && std::string(buf) == expected_text[i][j] && std::abs(a(i, j) - expected[i][j]) <= 1e-15;
            shown += std::string(j ? " " : "") + buf;
        }
    }
    report(5, worst_row <= 1e-12 && exact && example,
           "augmented activity transition matrix (row sums, fixed 0.95/0.05 entries, worked example)",
           "200 random matrices, max |row sum - 1| " + fmt(worst_row, 3) + ", fixed entries " +
               (exact ? "exact" : "inexact") + ", worked example " + shown);
}

void criterion_6() {
    std::mt19937_64 rng(606);
    double worst = 0.0;
    int flagged = 0, total = 0;
    std::vector<hmm::GaussianHmm> ms;
    for (int i = 0; i < 20; ++i) ms.push_back(fixtures::random_hmm(rng, 1 + i % 4, 1 + i % 3, i % 5 == 0));
    {
        const auto truth = fixtures::random_hmm(rng, 3, 2);
        std::vector<ObservationSequence> data;
        for (int s = 0; s < 6; ++s) data.push_back(seq_of(fixtures::sample(truth, 25, rng)));
        ms.push_back(hmm::train(data, 3, hmm::TrainConfig{}).model);
    }
    for (const auto& m : ms) {
        const auto det = models::build_xhmm2(m, 1.0);
        for (int rep = 0; rep < 25; ++rep) {
            const auto o = fixtures::random_obs(rng, 1 + rep % 12, m.dim(), rep % 2 ? 1.0 : 20.0);
            const auto v = det.classify(o);
            worst = std::max(worst, std::abs(v.per_model_loglik.at("normal") - v.per_model_loglik.at("fall")));
            flagged += v.is_fall;
            ++total;
        }
    }
    report(6, worst <= 1e-12 && flagged == 0, "XHMM2 with xi = 1 ties exactly and flags nothing",
           std::to_string(total) + " sequences, max |difference| " + fmt(worst, 3) + " <= 1e-12, " +
               std::to_string(flagged) + " flagged");
}

struct SyntheticRun {
    features::FeatureDataset data;
    eval::EvalConfig config;
    double xhmm3_gmean = std::nan("");
};

SyntheticRun criterion_7() {
    const auto t0 = Clock::now();
    SyntheticRun run;
    const auto cfg = synthetic::default_config();  // 5 subjects, 3 activities, 5% falls at 6x variance
    run.data = synthetic::generate(cfg, 42);
    run.config.seed = 7;
    run.config.jobs = default_jobs();
    std::string detail;
    bool ok = true;
    for (auto v : {models::Variant::xhmm2, models::Variant::xhmm3, models::Variant::hmm1, models::Variant::hmm2}) {
        const auto report = eval::loocv(run.data, v, run.config);
        const double g = report.summary.gmean;
        const bool xf = models::is_xfactor(v);
        ok = ok && (xf ? g >= 0.85 : g <= 0.3);
        if (v == models::Variant::xhmm3) run.xhmm3_gmean = g;
        detail += std::string(models::variant_name(v)) + " " + fmt(g, 4) + (xf ? " (>= 0.85)" : " (<= 0.3)") + ", ";
    }
    const double secs = seconds_since(t0);
    ok = ok && secs < 120.0;
    report(7, ok, "synthetic leave-one-subject-out: X-factor variants detect falls, thresholded HMMs do not",
           detail + fmt(secs, 3) + " s < 120 s");
    return run;
}

void criterion_8(const SyntheticRun& run) {
    const auto t0 = Clock::now();
    const std::vector<int> counts{1, 50};
    const auto curve = eval::fall_injection_curve(run.data, models::Variant::hmm3_sup, counts, 10, run.config);
    const double g1 = curve.points[0].mean_gmean, g50 = curve.points[1].mean_gmean;
    const bool ok = g1 <= g50 - 0.1 && g1 < run.xhmm3_gmean;
    report(8, ok, "fall injection: hmm3_sup with one fall trails fifty falls and unsupervised XHMM3",
           "mean gmean at 1 fall " + fmt(g1, 4) + ", at 50 falls " + fmt(g50, 4) + (curve.points[1].capped ? " (capped)" : "") +
               ", XHMM3 " + fmt(run.xhmm3_gmean, 4) + ", 10 repeats, " + fmt(seconds_since(t0), 3) + " s");
}

void criterion_9() {
    const char* dir = std::getenv("XFHMM_DLR_DIR");
    if (dir == nullptr || !fs::exists(dir)) {
        report(9, Outcome::skip, "DLR reproduction (ordering and XHMM3 gmean near 0.925)",
               "set XFHMM_DLR_DIR to a DLR recording directory to run");
        return;
    }
    const auto raw = ingest::load_dataset(dir, ingest::Schema::dlr);
    const auto data = features::featurize(raw, features::FeatureConfig{});
    eval::EvalConfig cfg;
    cfg.seed = 7;
    cfg.jobs = default_jobs();
    std::vector<double> g;
    std::string detail;
    for (auto v : {models::Variant::xhmm3, models::Variant::xhmm1, models::Variant::hmm_normout, models::Variant::hmm1}) {
        g.push_back(eval::loocv(data, v, cfg).summary.gmean);
        detail += std::string(models::variant_name(v)) + " " + fmt(g.back(), 4) + ", ";
    }
    const bool ok = g[0] > g[1] && g[1] > g[2] && g[2] > g[3] && std::abs(g[0] - 0.925) <= 0.10;
    report(9, ok, "DLR reproduction: XHMM3 > XHMM1 > HMM_NormOut > HMM1 and XHMM3 gmean within 0.10 of 0.925",
           detail + std::to_string(data.subjects().size()) + " subjects");
}

void criterion_10() {
    std::mt19937_64 rng(1010);
    std::normal_distribution<double> z(0.0, 2.0);
    double worst_parseval = 0.0, worst_scale = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 8 + static_cast<std::size_t>(rep) * 7;
        std::vector<Vec3> acc(n), gyr(n);
        for (std::size_t t = 0; t < n; ++t) {
            acc[t] = {z(rng), z(rng), 9.8 + z(rng)};
            gyr[t] = {z(rng), z(rng), z(rng)};
        }
        const auto f = features::extract(acc, gyr);
        const auto s = features::derive_signals(acc, gyr);
        std::size_t len = 1;
        while (len < n) len <<= 1;
        double sum_sq = 0.0;
        for (double v : s.a_norm) sum_sq += v * v;
        const double dn = static_cast<double>(n);
        const double dc_energy = (dn * f[25]) * (dn * f[25]) / static_cast<double>(len);
        worst_parseval = std::max(worst_parseval, std::abs(f[26] + dc_energy - sum_sq) / sum_sq);
        for (double c : {0.001, 0.5, 7.0, 1000.0}) {
            auto scaled = acc;
            for (auto& a : scaled) {
                for (auto& v : a) v *= c;
            }
            const auto g = features::extract(scaled, gyr);
            for (int i : {24, 27, 28, 29, 30}) worst_scale = std::max(worst_scale, std::abs(g[i] - f[i]));
        }
    }
    const std::vector<Vec3> acc{{0, 0, 0}, {3, 4, 0}, {0, 0, 0}};
    const std::vector<Vec3> gyr{{1, 2, 2}, {0, 0, 0}, {2, 3, 6}};
    const auto s = features::derive_signals(acc, gyr);
    const bool norms = s.a_norm[0] == 0.0 && s.a_norm[1] == 5.0 && s.w_norm[0] == 3.0 && s.w_norm[2] == 7.0;
    report(10, worst_parseval <= 1e-6 && worst_scale <= 1e-9 && norms,
           "feature extractor: Parseval identity, scale invariance, exact Euclidean norms",
           "max Parseval relative error " + fmt(worst_parseval, 3) + " <= 1e-6, max scale drift " + fmt(worst_scale, 3) +
               " <= 1e-9, norms " + (norms ? "exact" : "wrong"));
}

int run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "xfhmm");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

void criterion_11() {
    fixtures::TempDir tmp("acceptance");
    const auto root = tmp.path();
    fixtures::write_raw_dataset(root / "raw", 2, 50.0, 11);
    const auto synth_csv = (root / "synth_a" / "synth.csv").string();
    const std::vector<std::string> small{"--n-states", "2"};
    struct Job {
        std::string name;
        std::vector<std::string> args;
    };
    const std::vector<Job> jobs{
        {"synth", {"synth", "--seed", "5", "--subjects", "3", "--windows-per-subject", "150", "--fall-prevalence", "0.06"}},
        {"extract", {"extract", "--seed", "5", "--dataset", (root / "raw").string(), "--schema", "generic-csv"}},
        {"tune", {"tune", "--seed", "5", "--dataset", synth_csv, "--n-states", "2"}},
        {"train", {"train", "--seed", "5", "--dataset", synth_csv, "--n-states", "2", "--variant",
                   "hmm1,hmm2,xhmm1,xhmm2,xhmm3,hmm_normout,hmm1_sup,hmm2_sup,hmm3_sup,ocnn"}},
        {"evaluate", {"evaluate", "--seed", "5", "--dataset", synth_csv, "--n-states", "2", "--variant", "xhmm2,xhmm3,ocnn"}},
        {"inject", {"inject", "--seed", "5", "--dataset", synth_csv, "--counts", "1,4", "--repeats", "2"}},
        {"diagnose", {"diagnose", "--seed", "5", "--dataset", synth_csv, "--n-states", "2"}},
    };
    int identical = 0, files = 0;
    std::string failures;
    for (const auto& job : jobs) {
        bool ok = true;
        for (const char* run : {"_a", "_b"}) {
            auto args = job.args;
            args.push_back("--out");
            args.push_back((root / (job.name + run)).string());
            if (job.name != "synth" && std::string(run) == "_b") {
                args.push_back("--jobs");
                args.push_back("2");
            }
            ok = ok && run_cli(args) == 0;
        }
        if (ok) {
            const auto a = root / (job.name + "_a");
            int n = 0;
            for (const auto& entry : fs::directory_iterator(a)) {
                const auto b = root / (job.name + "_b") / entry.path().filename();
                ++n;
                ++files;
                ok = ok && fs::exists(b) && fixtures::slurp(entry.path()) == fixtures::slurp(b);
            }
            ok = ok && n >= 2;
        }
        identical += ok;
        if (!ok) failures += " " + job.name;
    }
    report(11, identical == static_cast<int>(jobs.size()), "every CLI subcommand is byte-for-byte reproducible",
           std::to_string(identical) + "/" + std::to_string(jobs.size()) + " subcommands, " + std::to_string(files) +
               " artifacts compared" + (failures.empty() ? "" : ", differing:" + failures));
}

template <class Fn>
void guarded(int id, Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        report(id, false, "raised an exception", e.what());
    }
}

}  // namespace

int main() {
    guarded(1, criterion_1);
    guarded(2, criterion_2);
    guarded(3, criterion_3);
    guarded(4, criterion_4);
    guarded(5, criterion_5);
    guarded(6, criterion_6);
    SyntheticRun run;
    bool have_run = false;
    guarded(7, [&] {
        run = criterion_7();
        have_run = true;
    });
    if (have_run) {
        guarded(8, [&] { criterion_8(run); });
    } else {
        report(8, false, "fall injection", "synthetic run unavailable");
    }
    guarded(9, criterion_9);
    guarded(10, criterion_10);
    guarded(11, criterion_11);

    int failed = 0;
    for (const auto& l : g_lines) failed += l.outcome == Outcome::fail;
    std::cout << (failed == 0 ? "acceptance: all criteria passed or skipped" : "acceptance: " + std::to_string(failed) + " failing")
              << std::endl;
    return failed == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
