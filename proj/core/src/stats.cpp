#include "xfhmm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "xfhmm/common.hpp"

namespace xfhmm::stats {

double quantile(std::span<const double> values, double p) {
    if (values.empty()) throw Error("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw Error("quantile level outside [0, 1]");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

Quartiles quartiles(std::span<const double> values) {
    return {quantile(values, 0.25), quantile(values, 0.5), quantile(values, 0.75)};
}

double mean(std::span<const double> values) {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double stddev(std::span<const double> values) {
    if (values.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi) return 0.0;
    const double m = mean(values);
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.empty()) throw Error("pearson: length mismatch");
    if (stddev(x) == 0.0 || stddev(y) == 0.0) return 0.0;
    const double mx = mean(x);
    const double my = mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // Relative guard: rounding leaves tiny nonzero spread on constant input.
    const double scale_x = std::max(std::abs(mx), 1.0);
    const double scale_y = std::max(std::abs(my), 1.0);
    const double tiny = 1e-24 * static_cast<double>(x.size());
    if (sxx <= tiny * scale_x * scale_x || syy <= tiny * scale_y * scale_y) return 0.0;
    const double r = sxy / std::sqrt(sxx * syy);
    return std::clamp(r, -1.0, 1.0);
}

double log_sum_exp(std::span<const double> values) {
    double best = -std::numeric_limits<double>::infinity();
    for (double v : values) best = std::max(best, v);
    if (!std::isfinite(best)) return best;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - best);
    return best + std::log(sum);
}

}  // namespace xfhmm::stats
