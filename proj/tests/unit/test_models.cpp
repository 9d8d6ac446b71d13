#include <doctest.h>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "xfhmm/models.hpp"

using namespace xfhmm;
using models::Variant;

namespace {

ObservationSequence seq_of(Eigen::MatrixXd obs, std::string label = "walk") {
    ObservationSequence s;
    s.obs = std::move(obs);
    s.label = std::move(label);
    return s;
}

hmm::GaussianHmm one_state(double mean, double var, int d = 1) {
    hmm::GaussianHmm m;
    m.prior = Eigen::VectorXd::Ones(1);
    m.trans = Eigen::MatrixXd::Ones(1, 1);
    m.means = Eigen::MatrixXd::Constant(1, d, mean);
    m.vars = Eigen::MatrixXd::Constant(1, d, var);
    return m;
}

std::vector<ObservationSequence> gaussian_sequences(std::mt19937_64& rng, int count, int len, double mean,
                                                    const std::string& label, int d = 2) {
    std::normal_distribution<double> z(mean, 1.0);
    std::vector<ObservationSequence> out;
    for (int i = 0; i < count; ++i) {
        Eigen::MatrixXd o(len, d);
        for (int t = 0; t < len; ++t) {
            for (int k = 0; k < d; ++k) o(t, k) = z(rng);
        }
        out.push_back(seq_of(o, label));
    }
    return out;
}

models::ActivityLevelData two_activities(std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    models::ActivityLevelData data;
    data.activities = {"sit", "walk"};
    for (double c : {-3.0, 3.0}) {
        Eigen::MatrixXd rows(40, 2);
        for (int i = 0; i < 40; ++i) rows.row(i) << c + z(rng), -c + z(rng);
        data.vectors.push_back(rows);
    }
    data.transitions.resize(2, 2);
    data.transitions << 0.6, 0.4, 0.3, 0.7;
    return data;
}

}  // namespace

TEST_CASE("variant names round trip") {
    for (auto v : models::all_variants()) CHECK(models::parse_variant(models::variant_name(v)) == v);
    CHECK(models::all_variants().size() == 10);
    CHECK_THROWS_AS(models::parse_variant("hmm4"), Error);
}

TEST_CASE("HMM1 never flags its own training sequences and flags far points") {
    std::mt19937_64 rng(21);
    auto walk = gaussian_sequences(rng, 12, 10, 0.0, "walk");
    auto sit = gaussian_sequences(rng, 12, 10, 4.0, "sit");
    std::vector<ObservationSequence> all = walk;
    all.insert(all.end(), sit.begin(), sit.end());
    const auto groups = models::group_by_label(all);
    const auto det = models::train_hmm1(groups, 2, hmm::TrainConfig{});
    for (const auto& s : all) {
        const auto v = det.classify(s);
        CHECK_FALSE(v.is_fall);
        CHECK(v.winning_label != "fall");
    }
    const auto far = det.classify(Eigen::MatrixXd::Constant(10, 2, 50.0));
    CHECK(far.is_fall);
    CHECK(far.winning_label == "fall");

    const auto pooled = models::train_hmm2(all, 2, hmm::TrainConfig{});
    for (const auto& s : all) CHECK_FALSE(pooled.classify(s).is_fall);
    CHECK(pooled.classify(Eigen::MatrixXd::Constant(10, 2, -50.0)).is_fall);

    std::vector<ObservationSequence> with_fall = all;
    with_fall.push_back(seq_of(Eigen::MatrixXd::Zero(3, 2), "fall"));
    CHECK_THROWS_AS(models::group_by_label(with_fall), Error);
}

TEST_CASE("X-factor model averages parameters and inflates variances") {
    const std::vector<hmm::GaussianHmm> ms{one_state(0.0, 1.0), one_state(2.0, 3.0)};
    const auto x = models::xfactor_model(ms, 5.0);
    CHECK(x.means(0, 0) == 1.0);
    CHECK(x.vars(0, 0) == 10.0);
    CHECK_THROWS_AS(models::xfactor_model(ms, 0.5), Error);
    const std::vector<hmm::GaussianHmm> mismatched{one_state(0, 1), one_state(0, 1, 2)};
    CHECK_THROWS_AS(models::xfactor_model(mismatched, 2.0), Error);
    // Inflated variances are not capped.
    const std::vector<hmm::GaussianHmm> wide{one_state(0.0, 90.0)};
    CHECK(models::xfactor_model(wide, 100.0).vars(0, 0) == 9000.0);
}

TEST_CASE("xi = 1 produces an exact tie resolved toward normal") {
    std::mt19937_64 rng(22);
    const auto m = fixtures::random_hmm(rng, 3, 2);
    const auto x2 = models::build_xhmm2(m, 1.0);
    const auto x1 = models::build_xhmm1({"walk"}, {m}, 1.0);
    for (int rep = 0; rep < 50; ++rep) {
        const auto o = fixtures::random_obs(rng, 1 + rep % 7, 2, 5.0);
        const auto v = x2.classify(o);
        CHECK(v.per_model_loglik.at("normal") == v.per_model_loglik.at("fall"));
        CHECK_FALSE(v.is_fall);
        CHECK_FALSE(x1.classify(o).is_fall);
    }
}

TEST_CASE("XHMM2 keeps an observation at a state mean normal for every xi") {
    std::mt19937_64 rng(23);
    const auto m = fixtures::random_hmm(rng, 1, 3);
    for (double xi : {1.0001, 1.5, 5.0, 10.0, 100.0, 1e4}) {
        const auto det = models::build_xhmm2(m, xi);
        CHECK_FALSE(det.classify(Eigen::MatrixXd(m.means.row(0))).is_fall);
    }
}

TEST_CASE("X-factor flags follow the analytic single-Gaussian boundary") {
    // One 1-D state with unit variance: the alternate wins iff
    // z^2 > xi log(xi) / (xi - 1), a boundary that moves outward as xi grows.
    const auto m = one_state(0.0, 1.0);
    const std::vector<double> grid{1.5, 5.0, 10.0, 100.0};
    std::vector<int> flagged;
    for (double xi : grid) {
        const auto det = models::build_xhmm2(m, xi);
        const double boundary = std::sqrt(xi * std::log(xi) / (xi - 1.0));
        int count = 0;
        for (int i = 0; i <= 600; ++i) {
            const double z = i * 0.01;
            if (std::abs(std::abs(z) - boundary) < 1e-6) continue;
            const bool fall = det.classify(Eigen::MatrixXd::Constant(1, 1, z)).is_fall;
            CHECK(fall == (z > boundary));
            count += fall;
        }
        flagged.push_back(count);
        CHECK(det.classify(Eigen::MatrixXd::Constant(1, 1, 60.0)).is_fall);
    }
    for (std::size_t i = 1; i < flagged.size(); ++i) CHECK(flagged[i] <= flagged[i - 1]);
}

TEST_CASE("argmax is unchanged when every log-likelihood shifts by a constant") {
    // Scaling observations, means and standard deviations by c shifts every
    // model's log-likelihood by -T D log c.
    std::mt19937_64 rng(24);
    const auto a = fixtures::random_hmm(rng, 2, 2), b = fixtures::random_hmm(rng, 2, 2);
    const auto det = models::build_hmm1_sup({"walk"}, {a}, b);
    auto scaled = [](hmm::GaussianHmm m, double c) {
        m.means *= c;
        m.vars *= c * c;
        return m;
    };
    const double c = 3.7;
    const auto det_scaled = models::build_hmm1_sup({"walk"}, {scaled(a, c)}, scaled(b, c));
    for (int rep = 0; rep < 40; ++rep) {
        const auto o = fixtures::random_obs(rng, 5, 2);
        const auto v = det.classify(o), w = det_scaled.classify(o * c);
        CHECK(v.is_fall == w.is_fall);
        CHECK(v.winning_label == w.winning_label);
        CHECK(w.per_model_loglik.at("walk") ==
              doctest::Approx(v.per_model_loglik.at("walk") - 10 * std::log(c)).epsilon(1e-10));
    }
}

TEST_CASE("augmented activity transitions") {
    Eigen::MatrixXd e(2, 2);
    e << 0.6, 0.4, 0.3, 0.7;
    const auto a = models::augment_transitions(e);
    Eigen::MatrixXd expected(3, 3);
    expected << 0.57, 0.38, 0.05, 0.285, 0.665, 0.05, 0.025, 0.025, 0.95;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) CHECK(a(i, j) == doctest::Approx(expected(i, j)).epsilon(1e-15));
    }
    std::mt19937_64 rng(25);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 1 + rep % 6;
        Eigen::MatrixXd r(n, n);
        for (int i = 0; i < n; ++i) r.row(i) = fixtures::random_simplex(rng, n).transpose();
        const auto aug = models::augment_transitions(r);
        for (int i = 0; i <= n; ++i) CHECK(std::abs(aug.row(i).sum() - 1.0) <= 1e-12);
        CHECK(aug(n, n) == 0.95);
        for (int i = 0; i < n; ++i) CHECK(aug(i, n) == 0.05);
    }
}

TEST_CASE("XHMM3 chain and its decoding") {
    std::mt19937_64 rng(26);
    const auto data = two_activities(rng);
    const auto det = models::build_xhmm3(data, 1.0);
    const auto& chain = std::get<models::ActivityChain>(det.payload()).chain;
    CHECK(chain.n_states() == 3);
    CHECK((chain.prior.array() == 1.0 / 3.0).all());
    CHECK(chain.means.row(2).isApprox((chain.means.row(0) + chain.means.row(1)) / 2));
    const auto v = det.classify(Eigen::MatrixXd(chain.means.row(0)));
    CHECK(v.decoded_path == std::vector<int>{0});
    CHECK(v.winning_label == "sit");
    CHECK_FALSE(v.is_fall);

    const auto inflated = models::build_xhmm3(data, 10.0);
    CHECK(std::get<models::ActivityChain>(inflated.payload()).chain.vars.row(2).isApprox(chain.vars.row(2) * 10.0));
    const auto far = inflated.classify(Eigen::MatrixXd::Constant(1, 2, 40.0));
    CHECK(far.is_fall);
    CHECK(far.fall_steps == std::vector<bool>{true});

    auto thin = data;
    thin.vectors[1] = thin.vectors[1].topRows(1);
    CHECK_THROWS_AS(models::build_xhmm3(thin, 2.0), Error);
    CHECK_THROWS_AS(models::build_hmm3_sup(data, Eigen::MatrixXd(0, 2)), Error);
    const auto sup = models::build_hmm3_sup(data, Eigen::MatrixXd::Constant(1, 2, 40.0));
    CHECK_FALSE(sup.xi().has_value());
}

TEST_CASE("empirical transitions count consecutive window labels") {
    std::vector<features::WindowFeatures> w(6);
    const char* labels[] = {"a", "a", "b", "fall", "b", "b"};
    for (int i = 0; i < 6; ++i) {
        w[i].subject_id = "S";
        w[i].recording = "r";
        w[i].index = i;
        w[i].label = labels[i];
        w[i].summary = Eigen::VectorXd::Zero(1);
        w[i].frames = Eigen::MatrixXd::Zero(1, 1);
    }
    std::vector<const features::WindowFeatures*> ptrs;
    for (auto& x : w) ptrs.push_back(&x);
    const auto runs = features::activity_runs(std::span<const features::WindowFeatures* const>(ptrs));
    const auto t = models::empirical_transitions(runs, ptrs, {"a", "b", "c"});
    CHECK(t(0, 0) == 0.5);
    CHECK(t(0, 1) == 0.5);
    CHECK(t(1, 1) == 1.0);
    CHECK(t(2, 2) == 1.0);
}

TEST_CASE("HMM_NormOut recognizes its own normal data") {
    std::mt19937_64 rng(27);
    const auto normal = gaussian_sequences(rng, 40, 8, 0.0, "walk");
    const auto outliers = gaussian_sequences(rng, 6, 8, 6.0, "walk");
    const auto det = models::train_hmm_normout(normal, outliers, 2, hmm::TrainConfig{});
    int ok = 0;
    for (const auto& s : normal) ok += !det.classify(s).is_fall;
    CHECK(ok >= 38);
    CHECK_THROWS_WITH_AS(models::train_hmm_normout(normal, {}, 2, hmm::TrainConfig{}),
                         doctest::Contains("omega"), Error);
}

TEST_CASE("supervised detectors need falls") {
    std::mt19937_64 rng(28);
    const auto groups = models::group_by_label(gaussian_sequences(rng, 10, 8, 0.0, "walk"));
    CHECK_THROWS_AS(models::train_supervised(Variant::hmm1_sup, groups, {}, 2, hmm::TrainConfig{}), Error);
    const auto one_fall = gaussian_sequences(rng, 1, 8, 5.0, "fall");
    const auto det = models::train_supervised(Variant::hmm2_sup, groups, one_fall, 2, hmm::TrainConfig{});
    CHECK(det.classify(one_fall[0]).is_fall);
    CHECK_THROWS_AS(models::train_supervised(Variant::hmm3_sup, groups, one_fall, 2, hmm::TrainConfig{}), Error);
}

TEST_CASE("one-class nearest neighbour") {
    Eigen::MatrixXd train(3, 1);
    train << 0, 1, 3;
    const auto det = models::train_ocnn(train);
    const auto& nn = std::get<models::NearestNeighbour>(det.payload());
    CHECK(nn.nn_distance(0) == 1.0);
    CHECK(nn.nn_distance(1) == 1.0);
    CHECK(nn.nn_distance(2) == 2.0);
    CHECK_FALSE(det.classify(Eigen::MatrixXd::Constant(1, 1, 1.0)).is_fall);
    CHECK_FALSE(det.classify(Eigen::MatrixXd::Constant(1, 1, 5.0)).is_fall);
    CHECK(det.classify(Eigen::MatrixXd::Constant(1, 1, 5.5)).is_fall);
    CHECK(det.classify(Eigen::MatrixXd::Constant(1, 1, -1.5)).is_fall);
    const auto v = det.classify(Eigen::MatrixXd::Constant(1, 1, 0.2));
    CHECK(v.winning_label == "normal");
    CHECK_THROWS_AS(models::train_ocnn(train, 3), Error);
    CHECK_THROWS_AS(models::train_ocnn(train.topRows(1)), Error);
}

TEST_CASE("detector payload and xi must match the variant") {
    models::CompetingSet cs{{"normal", "fall"}, {one_state(0, 1), one_state(0, 2)}};
    CHECK_THROWS_AS(models::FallDetector(Variant::hmm1, cs, std::nullopt, {"walk"}), Error);
    CHECK_THROWS_AS(models::FallDetector(Variant::xhmm2, cs, std::nullopt, {"walk"}), Error);
    CHECK_THROWS_AS(models::FallDetector(Variant::xhmm2, cs, 0.5, {"walk"}), Error);
    CHECK_THROWS_AS(models::FallDetector(Variant::hmm2_sup, cs, 2.0, {"walk"}), Error);
    CHECK_NOTHROW(models::FallDetector(Variant::hmm2_sup, cs, std::nullopt, {"walk"}));
}

TEST_CASE("detectors serialize faithfully") {
    std::mt19937_64 rng(29);
    std::vector<models::FallDetector> dets;
    auto walk = gaussian_sequences(rng, 8, 6, 0.0, "walk");
    dets.push_back(models::train_hmm1(models::group_by_label(walk), 2, hmm::TrainConfig{}));
    dets.push_back(models::build_xhmm2(fixtures::random_hmm(rng, 2, 2), 7.25));
    dets.push_back(models::build_xhmm3(two_activities(rng), 1.5));
    Eigen::MatrixXd pts = fixtures::random_obs(rng, 10, 2);
    dets.push_back(models::train_ocnn(pts));
    dets[1].preprocess.mask = {3, 1};
    dets[1].preprocess.standardizer.mean = Eigen::Vector2d(0.1, 1.0 / 3.0);
    dets[1].preprocess.standardizer.scale = Eigen::Vector2d(2.0, 0.7);
    for (const auto& d : dets) {
        const auto text = models::to_json(d).dump();
        const auto back = models::detector_from_json(nlohmann::json::parse(text));
        CHECK(back.variant() == d.variant());
        CHECK(back.xi() == d.xi());
        CHECK(back.activity_names() == d.activity_names());
        CHECK(back.preprocess.mask == d.preprocess.mask);
        CHECK(back.preprocess.standardizer.mean == d.preprocess.standardizer.mean);
        CHECK(models::to_json(back).dump() == text);
        for (int rep = 0; rep < 10; ++rep) {
            const auto o = fixtures::random_obs(rng, 1 + rep % 3, 2, 4.0);
            const auto a = d.classify(o), b = back.classify(o);
            CHECK(a.is_fall == b.is_fall);
            CHECK(a.per_model_loglik == b.per_model_loglik);
            CHECK(a.decoded_path == b.decoded_path);
        }
    }
    CHECK_THROWS_AS(models::detector_from_json(nlohmann::json::parse(R"({"format":"nope"})")), Error);
}
