#include <random>

#include <benchmark/benchmark.h>

#include "xfhmm/features.hpp"
#include "xfhmm/hmm.hpp"

using namespace xfhmm;

namespace {

hmm::GaussianHmm make_model(int n, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    hmm::GaussianHmm m;
    m.prior = Eigen::VectorXd::Constant(n, 1.0 / n);
    m.trans = Eigen::MatrixXd::Constant(n, n, 0.1 / std::max(1, n - 1));
    m.trans.diagonal().setConstant(n == 1 ? 1.0 : 0.9);
    m.means.resize(n, d);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) m.means(i, k) = 2.0 * z(rng);
    }
    m.vars = Eigen::MatrixXd::Ones(n, d);
    return m;
}

Eigen::MatrixXd random_obs(int t, int d, std::mt19937_64& rng) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd o(t, d);
    for (int i = 0; i < t; ++i) {
        for (int k = 0; k < d; ++k) o(i, k) = z(rng);
    }
    return o;
}

void BM_Forward(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto m = make_model(static_cast<int>(state.range(0)), 31, rng);
    const auto o = random_obs(static_cast<int>(state.range(1)), 31, rng);
    for (auto _ : state) benchmark::DoNotOptimize(hmm::log_likelihood(m, o));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Forward)->Args({4, 8})->Args({4, 64})->Args({8, 256});

void BM_Viterbi(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto m = make_model(static_cast<int>(state.range(0)), 31, rng);
    const auto o = random_obs(static_cast<int>(state.range(1)), 31, rng);
    for (auto _ : state) benchmark::DoNotOptimize(hmm::viterbi(m, o));
    state.SetItemsProcessed(state.iterations() * state.range(1));
}
BENCHMARK(BM_Viterbi)->Args({4, 8})->Args({4, 64})->Args({8, 256});

void BM_BaumWelch(benchmark::State& state) {
    std::mt19937_64 rng(3);
    const auto truth = make_model(4, 12, rng);
    std::vector<ObservationSequence> data;
    for (int s = 0; s < state.range(0); ++s) {
        ObservationSequence seq;
        seq.obs = random_obs(8, 12, rng);
        data.push_back(seq);
    }
    hmm::TrainConfig cfg;
    cfg.loglik_tolerance = 0.0;
    for (auto _ : state) benchmark::DoNotOptimize(hmm::baum_welch(truth, data, cfg, 5));
}
BENCHMARK(BM_BaumWelch)->Arg(50)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_Extract(benchmark::State& state) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    const auto n = static_cast<std::size_t>(state.range(0));
    std::vector<Vec3> acc(n), gyr(n);
    for (std::size_t i = 0; i < n; ++i) {
        acc[i] = {z(rng), z(rng), 9.8 + z(rng)};
        gyr[i] = {z(rng), z(rng), z(rng)};
    }
    for (auto _ : state) benchmark::DoNotOptimize(features::extract(acc, gyr));
}
BENCHMARK(BM_Extract)->Arg(16)->Arg(128)->Arg(256);

}  // namespace
BENCHMARK_MAIN();
