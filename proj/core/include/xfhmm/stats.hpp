#pragma once

#include <span>
#include <vector>

namespace xfhmm::stats {

/// Sample quantile with linear interpolation between order statistics
/// (the "type 7" rule): h = (n - 1) p, q = x[floor h] + (h - floor h)(x[floor h + 1] - x[floor h]).
double quantile(std::span<const double> values, double p);

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
    [[nodiscard]] double iqr() const { return q3 - q1; }
};

Quartiles quartiles(std::span<const double> values);

double mean(std::span<const double> values);

/// Population standard deviation (divisor n).
double stddev(std::span<const double> values);

/// Pearson correlation; 0 when either input has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// log(sum(exp(v))) that tolerates -inf entries.
double log_sum_exp(std::span<const double> values);

}  // namespace xfhmm::stats
