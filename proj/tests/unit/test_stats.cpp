#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "xfhmm/stats.hpp"
#include "xfhmm/text.hpp"

using namespace xfhmm;

TEST_CASE("quartiles follow linear interpolation between order statistics") {
    const std::vector<double> v{1, 2, 3, 4, 100};
    const auto q = stats::quartiles(v);
    CHECK(q.q1 == 2.0);
    CHECK(q.median == 3.0);
    CHECK(q.q3 == 4.0);
    CHECK(q.iqr() == 2.0);

    const std::vector<double> even{7, 1, 3, 5};
    CHECK(stats::quantile(even, 0.25) == doctest::Approx(2.5));
    CHECK(stats::quantile(even, 0.75) == doctest::Approx(5.5));
}

TEST_CASE("quantile agrees with the sort-based oracle") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(1 + rep % 17);
        for (auto& x : v) x = z(rng);
        for (double p : {0.0, 0.1, 0.25, 0.5, 0.75, 1.0}) {
            CHECK(stats::quantile(v, p) == doctest::Approx(oracle::sorted_quantile(v, p)).epsilon(1e-14));
        }
    }
}

TEST_CASE("stddev is population and exactly zero for constant input") {
    const std::vector<double> c(9, 0.1);
    CHECK(stats::stddev(c) == 0.0);
    const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
    CHECK(stats::stddev(v) == doctest::Approx(2.0));
}

TEST_CASE("pearson handles perfect, inverse and degenerate inputs") {
    const std::vector<double> x{1, 2, 3, 4}, y{2, 4, 6, 8}, z{4, 3, 2, 1}, c{5, 5, 5, 5};
    CHECK(stats::pearson(x, y) == doctest::Approx(1.0));
    CHECK(stats::pearson(x, z) == doctest::Approx(-1.0));
    CHECK(stats::pearson(x, c) == 0.0);
}

TEST_CASE("log_sum_exp is stable and tolerates -inf") {
    const double inf = std::numeric_limits<double>::infinity();
    const std::vector<double> v{-1000.0, -1000.0};
    CHECK(stats::log_sum_exp(v) == doctest::Approx(-1000.0 + std::log(2.0)));
    const std::vector<double> w{-inf, 0.0};
    CHECK(stats::log_sum_exp(w) == doctest::Approx(0.0));
    const std::vector<double> all{-inf, -inf};
    CHECK(stats::log_sum_exp(all) == -inf);
}

TEST_CASE("text helpers round-trip doubles") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678}) {
        CHECK(*text::parse_double(text::format_double(x)) == x);
    }
    CHECK_FALSE(text::parse_double("1.5x").has_value());
    CHECK(text::split_fields("a, b;c\td").size() == 4);
}
