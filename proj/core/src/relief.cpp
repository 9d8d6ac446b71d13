#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "xfhmm/features.hpp"

namespace xfhmm::features {

ReliefResult relief_f_rank(const Eigen::MatrixXd& rows, std::span<const std::string> labels, int k_neighbors,
                           int n_probes, std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(rows.rows());
    const auto d = rows.cols();
    if (labels.size() != n) throw Error("relief_f_rank: one label per row required");
    if (k_neighbors < 1 || n_probes < 1) throw Error("relief_f_rank: k_neighbors and n_probes must be positive");
    for (const auto& l : labels) {
        if (is_fall_label(l)) throw Error("relief_f_rank ranks normal activities only; fall rows are not allowed");
    }

    std::vector<std::string> classes;
    {
        std::set<std::string> s(labels.begin(), labels.end());
        classes.assign(s.begin(), s.end());
    }
    if (classes.size() < 2) throw Error("relief_f_rank needs at least two activity classes");
    std::vector<int> cls(n);
    std::vector<double> prior(classes.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        cls[i] = static_cast<int>(std::lower_bound(classes.begin(), classes.end(), labels[i]) - classes.begin());
        prior[static_cast<std::size_t>(cls[i])] += 1.0 / static_cast<double>(n);
    }

    const Eigen::MatrixXd z = Standardizer::fit(rows).apply(rows);
    Eigen::VectorXd inv_range(d);
    for (Eigen::Index a = 0; a < d; ++a) {
        const double r = z.col(a).maxCoeff() - z.col(a).minCoeff();
        inv_range(a) = r > 0.0 ? 1.0 / r : 0.0;
    }

    std::vector<std::size_t> probes(n);
    std::iota(probes.begin(), probes.end(), 0);
    if (static_cast<std::size_t>(n_probes) < n) {
        std::mt19937_64 rng(seed);
        std::shuffle(probes.begin(), probes.end(), rng);
        probes.resize(static_cast<std::size_t>(n_probes));
    }
    const double m = static_cast<double>(probes.size());

    Eigen::VectorXd weights = Eigen::VectorXd::Zero(d);
    std::vector<double> dist(n);
    std::vector<std::vector<std::size_t>> by_class(classes.size());
    for (std::size_t i : probes) {
        for (std::size_t j = 0; j < n; ++j) {
            dist[j] = j == i ? 0.0 : ((z.row(static_cast<Eigen::Index>(i)) - z.row(static_cast<Eigen::Index>(j))).cwiseAbs().transpose().cwiseProduct(inv_range)).sum();
        }
        for (auto& v : by_class) v.clear();
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) by_class[static_cast<std::size_t>(cls[j])].push_back(j);
        }
        const auto own = static_cast<std::size_t>(cls[i]);
        for (std::size_t c = 0; c < classes.size(); ++c) {
            auto& cand = by_class[c];
            if (cand.empty()) continue;
            const auto k = std::min<std::size_t>(static_cast<std::size_t>(k_neighbors), cand.size());
            std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end(),
                              [&](std::size_t a, std::size_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
            Eigen::VectorXd diff_sum = Eigen::VectorXd::Zero(d);
            for (std::size_t r = 0; r < k; ++r) {
                diff_sum += (z.row(static_cast<Eigen::Index>(i)) - z.row(static_cast<Eigen::Index>(cand[r]))).cwiseAbs().transpose().cwiseProduct(inv_range);
            }
            diff_sum /= static_cast<double>(k);
            if (c == own) {
                weights -= diff_sum / m;
            } else {
                weights += (prior[c] / (1.0 - prior[own])) * diff_sum / m;
            }
        }
    }

    ReliefResult out;
    out.weights = weights;
    out.ranking.resize(static_cast<std::size_t>(d));
    std::iota(out.ranking.begin(), out.ranking.end(), 0);
    std::stable_sort(out.ranking.begin(), out.ranking.end(), [&](int a, int b) { return weights(a) > weights(b); });
    return out;
}

}  // namespace xfhmm::features
